#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace scanvol {

struct CameraIntrinsics {
    double fu = 0.0;  // focal lengths in pixels
    double fv = 0.0;
    double cu = 0.0;  // principal point
    double cv = 0.0;
    int width = 0;
    int height = 0;

    bool valid() const { return fu > 0.0 && fv > 0.0 && width > 0 && height > 0; }
};

// Depth in meters, row major. Non-finite or non-positive entries mark
// invalid pixels; 0 is the canonical invalid value.
struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<double> depth;

    DepthImage() = default;
    DepthImage(int w, int h, double fill = 0.0) : width(w), height(h), depth(static_cast<size_t>(w) * h, fill) {}

    bool in_bounds(int u, int v) const { return u >= 0 && u < width && v >= 0 && v < height; }
    double at(int u, int v) const { return depth[static_cast<size_t>(v) * width + u]; }
    double& at(int u, int v) { return depth[static_cast<size_t>(v) * width + u]; }
    bool is_valid(int u, int v) const {
        if (!in_bounds(u, v)) return false;
        double z = at(u, v);
        return std::isfinite(z) && z > 0.0;
    }
    size_t valid_count() const {
        size_t n = 0;
        for (double z : depth)
            if (std::isfinite(z) && z > 0.0) ++n;
        return n;
    }
};

// Grayscale intensity image, values nominally in [0, 1], row major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f) : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

    float at(int u, int v) const { return pixels[static_cast<size_t>(v) * width + u]; }
    float& at(int u, int v) { return pixels[static_cast<size_t>(v) * width + u]; }
};

}  // namespace scanvol
