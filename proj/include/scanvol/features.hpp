#pragma once

#include <array>
#include <vector>

#include "scanvol/image.hpp"

namespace scanvol {

struct Keypoint {
    double u = 0.0, v = 0.0;  // sub-pixel position in the input image
    double scale = 0.0;       // blur sigma at detection, input-image units
    double orientation = 0.0;  // dominant gradient direction, radians
};

constexpr int kDescriptorSize = 128;  // 4x4 spatial cells x 8 orientation bins

struct Feature {
    Keypoint keypoint;
    std::array<float, kDescriptorSize> descriptor{};  // L2-normalized
};

struct DetectOptions {
    int octaves = 4;
    int scales_per_octave = 3;
    double contrast_threshold = 0.03;  // on [0,1] intensities
    double edge_ratio = 10.0;          // principal-curvature ratio cutoff
    double sigma0 = 1.6;               // base blur of the first pyramid level
};

// Difference-of-Gaussians extrema with orientation-histogram descriptors.
// Pure function of the image; keypoints come out in pyramid scan order, so
// repeated runs give identical lists. A textureless image yields an empty
// list, which is not an error.
std::vector<Feature> detect_and_describe(const GrayImage& image, const DetectOptions& opt = {});

// Mutual nearest neighbors under descriptor L2 distance, kept only when that
// distance is <= max_distance. Brute force; each index appears at most once.
std::vector<std::array<int, 2>> match_forward_backward(const std::vector<Feature>& a,
                                                       const std::vector<Feature>& b,
                                                       double max_distance);

}  // namespace scanvol
