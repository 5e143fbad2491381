#include "scanvol/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scanvol/error.hpp"

namespace scanvol {

namespace {

constexpr double kPi = 3.14159265358979323846;

float pixel_reflect(const GrayImage& img, int x, int y) {
    if (x < 0) x = -x;
    if (y < 0) y = -y;
    if (x >= img.width) x = 2 * img.width - 2 - x;
    if (y >= img.height) y = 2 * img.height - 2 - y;
    return img.pixels[static_cast<size_t>(y) * img.width + x];
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-0.5 * i * i / (sigma * sigma));
        kernel[i + radius] = static_cast<float>(w);
        sum += w;
    }
    for (float& w : kernel) w = static_cast<float>(w / sum);

    GrayImage tmp(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * pixel_reflect(img, x + i, y);
            tmp.pixels[static_cast<size_t>(y) * img.width + x] = acc;
        }
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * pixel_reflect(tmp, x, y + i);
            out.pixels[static_cast<size_t>(y) * img.width + x] = acc;
        }
    return out;
}

GrayImage halve(const GrayImage& img) {
    GrayImage out(img.width / 2, img.height / 2);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.pixels[static_cast<size_t>(y) * out.width + x] =
                img.pixels[static_cast<size_t>(2 * y) * img.width + 2 * x];
    return out;
}

struct Pyramid {
    // gauss[o][s]: octave o at blur sigma0 * 2^(o + s/S); S+3 levels per octave.
    std::vector<std::vector<GrayImage>> gauss;
    std::vector<std::vector<GrayImage>> dog;
};

Pyramid build_pyramid(const GrayImage& image, const DetectOptions& opt) {
    Pyramid pyr;
    const int levels = opt.scales_per_octave + 3;
    const double k = std::pow(2.0, 1.0 / opt.scales_per_octave);

    GrayImage base = gaussian_blur(image, opt.sigma0);
    for (int o = 0; o < opt.octaves; ++o) {
        if (base.width < 16 || base.height < 16) break;
        std::vector<GrayImage> octave;
        octave.push_back(base);
        double sigma = opt.sigma0;
        for (int s = 1; s < levels; ++s) {
            double next = opt.sigma0 * std::pow(k, s);
            double delta = std::sqrt(next * next - sigma * sigma);
            octave.push_back(gaussian_blur(octave.back(), delta));
            sigma = next;
        }
        std::vector<GrayImage> dogs;
        for (int s = 0; s + 1 < levels; ++s) {
            GrayImage d(octave[s].width, octave[s].height);
            for (size_t i = 0; i < d.pixels.size(); ++i)
                d.pixels[i] = octave[s + 1].pixels[i] - octave[s].pixels[i];
            dogs.push_back(std::move(d));
        }
        // Level scales_per_octave has blur 2*sigma0: the seed of the next octave.
        base = halve(octave[opt.scales_per_octave]);
        pyr.gauss.push_back(std::move(octave));
        pyr.dog.push_back(std::move(dogs));
    }
    return pyr;
}

float dog_at(const GrayImage& img, int x, int y) {
    return img.pixels[static_cast<size_t>(y) * img.width + x];
}

bool is_extremum(const std::vector<GrayImage>& dogs, int s, int x, int y) {
    float v = dog_at(dogs[s], x, y);
    bool looking_for_max = v > 0.0f;
    for (int ds = -1; ds <= 1; ++ds)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (ds == 0 && dy == 0 && dx == 0) continue;
                float n = dog_at(dogs[s + ds], x + dx, y + dy);
                if (looking_for_max ? n >= v : n <= v) return false;
            }
    return true;
}

float bilinear(const GrayImage& img, double x, double y) {
    int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    double fx = x - x0, fy = y - y0;
    auto v = [&](int xx, int yy) { return pixel_reflect(img, xx, yy); };
    return static_cast<float>((1 - fx) * (1 - fy) * v(x0, y0) + fx * (1 - fy) * v(x0 + 1, y0) +
                              (1 - fx) * fy * v(x0, y0 + 1) + fx * fy * v(x0 + 1, y0 + 1));
}

struct Candidate {
    int octave, level;
    double x, y;   // octave-local sub-pixel position
    double scale;  // octave-local blur
};

void describe(const GrayImage& img, const Candidate& c, double orientation, Feature& out) {
    // 4x4 cells of width 3*scale each, rotated to the dominant orientation,
    // 8-bin orientation histograms with trilinear sharing.
    const double cell = 3.0 * c.scale;
    const double cos_o = std::cos(orientation), sin_o = std::sin(orientation);
    const int radius = static_cast<int>(std::round(cell * 2.5));
    std::array<double, kDescriptorSize> hist{};

    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            // Rotate the offset into the keypoint frame, in cell units.
            double rx = (cos_o * dx + sin_o * dy) / cell;
            double ry = (-sin_o * dx + cos_o * dy) / cell;
            double cx = rx + 1.5, cy = ry + 1.5;  // cell coordinates, center at (1.5, 1.5)
            if (cx <= -1.0 || cx >= 4.0 || cy <= -1.0 || cy >= 4.0) continue;

            double gx = bilinear(img, c.x + dx + 1, c.y + dy) - bilinear(img, c.x + dx - 1, c.y + dy);
            double gy = bilinear(img, c.x + dx, c.y + dy + 1) - bilinear(img, c.x + dx, c.y + dy - 1);
            double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            double theta = std::atan2(gy, gx) - orientation;
            double weight = std::exp(-(rx * rx + ry * ry) / 8.0);

            double ob = (theta / (2.0 * kPi)) * 8.0;
            ob -= std::floor(ob / 8.0) * 8.0;
            int x0 = static_cast<int>(std::floor(cx)), y0 = static_cast<int>(std::floor(cy));
            int o0 = static_cast<int>(std::floor(ob));
            double fx = cx - x0, fy = cy - y0, fo = ob - o0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    int xi = x0 + i, yj = y0 + j;
                    if (xi < 0 || xi > 3 || yj < 0 || yj > 3) continue;
                    double wxy = weight * mag * (i ? fx : 1 - fx) * (j ? fy : 1 - fy);
                    for (int l = 0; l < 2; ++l) {
                        int ol = (o0 + l) % 8;
                        hist[(yj * 4 + xi) * 8 + ol] += wxy * (l ? fo : 1 - fo);
                    }
                }
        }

    double norm = 0.0;
    for (double h : hist) norm += h * h;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& h : hist) h = std::min(h / norm, 0.2);  // clamp to temper specular gradients
    norm = 0.0;
    for (double h : hist) norm += h * h;
    norm = std::sqrt(norm);
    for (int i = 0; i < kDescriptorSize; ++i)
        out.descriptor[i] = norm > 0.0 ? static_cast<float>(hist[i] / norm) : 0.0f;
}

double dominant_orientation(const GrayImage& img, const Candidate& c) {
    const int bins = 36;
    std::array<double, bins> hist{};
    const int radius = static_cast<int>(std::round(4.5 * c.scale));
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            double gx = bilinear(img, c.x + dx + 1, c.y + dy) - bilinear(img, c.x + dx - 1, c.y + dy);
            double gy = bilinear(img, c.x + dx, c.y + dy + 1) - bilinear(img, c.x + dx, c.y + dy - 1);
            double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            double w = std::exp(-(dx * dx + dy * dy) / (2.0 * (1.5 * c.scale) * (1.5 * c.scale)));
            double theta = std::atan2(gy, gx);
            int bin = static_cast<int>(std::floor((theta + kPi) / (2.0 * kPi) * bins)) % bins;
            hist[bin] += w * mag;
        }
    int best = 0;
    for (int b = 1; b < bins; ++b)
        if (hist[b] > hist[best]) best = b;
    // Parabolic refinement over the circular neighborhood of the peak.
    double l = hist[(best + bins - 1) % bins], r = hist[(best + 1) % bins], m = hist[best];
    double denom = l - 2.0 * m + r;
    double offset = denom != 0.0 ? 0.5 * (l - r) / denom : 0.0;
    return (best + 0.5 + offset) / bins * 2.0 * kPi - kPi;
}

}  // namespace

std::vector<Feature> detect_and_describe(const GrayImage& image, const DetectOptions& opt) {
    if (image.width <= 0 || image.height <= 0) throw Error(errc::config, "detect: empty image");
    std::vector<Feature> features;
    if (image.width < 16 || image.height < 16) return features;

    Pyramid pyr = build_pyramid(image, opt);
    const double k = std::pow(2.0, 1.0 / opt.scales_per_octave);

    for (size_t o = 0; o < pyr.dog.size(); ++o) {
        const auto& dogs = pyr.dog[o];
        const int w = dogs[0].width, h = dogs[0].height;
        for (int s = 1; s + 1 < static_cast<int>(dogs.size()); ++s)
            for (int y = 1; y + 1 < h; ++y)
                for (int x = 1; x + 1 < w; ++x) {
                    float v = dog_at(dogs[s], x, y);
                    if (std::fabs(v) < 0.8 * opt.contrast_threshold) continue;
                    if (!is_extremum(dogs, s, x, y)) continue;

                    // Quadratic sub-pixel refinement in x, y (scale kept integral).
                    auto d = [&](int dx, int dy) { return static_cast<double>(dog_at(dogs[s], x + dx, y + dy)); };
                    double gx = 0.5 * (d(1, 0) - d(-1, 0));
                    double gy = 0.5 * (d(0, 1) - d(0, -1));
                    double hxx = d(1, 0) - 2 * d(0, 0) + d(-1, 0);
                    double hyy = d(0, 1) - 2 * d(0, 0) + d(0, -1);
                    double hxy = 0.25 * (d(1, 1) - d(1, -1) - d(-1, 1) + d(-1, -1));
                    double det = hxx * hyy - hxy * hxy;
                    double tr = hxx + hyy;
                    // Edge rejection: principal curvature ratio must stay bounded.
                    double er = opt.edge_ratio;
                    if (det <= 0.0 || tr * tr * er >= det * (er + 1.0) * (er + 1.0)) continue;
                    double ox = -(hyy * gx - hxy * gy) / det;
                    double oy = -(hxx * gy - hxy * gx) / det;
                    if (std::fabs(ox) > 1.5 || std::fabs(oy) > 1.5) continue;
                    double peak = d(0, 0) + 0.5 * (gx * ox + gy * oy);
                    if (std::fabs(peak) < opt.contrast_threshold) continue;

                    Candidate c;
                    c.octave = static_cast<int>(o);
                    c.level = s;
                    c.x = x + ox;
                    c.y = y + oy;
                    c.scale = opt.sigma0 * std::pow(k, s);

                    const GrayImage& img = pyr.gauss[o][s];
                    double orientation = dominant_orientation(img, c);

                    Feature f;
                    double up = static_cast<double>(1 << o);
                    f.keypoint.u = c.x * up;
                    f.keypoint.v = c.y * up;
                    f.keypoint.scale = c.scale * up;
                    f.keypoint.orientation = orientation;
                    describe(img, c, orientation, f);
                    features.push_back(f);
                }
    }
    return features;
}

std::vector<std::array<int, 2>> match_forward_backward(const std::vector<Feature>& a,
                                                       const std::vector<Feature>& b,
                                                       double max_distance) {
    std::vector<std::array<int, 2>> matches;
    if (a.empty() || b.empty()) return matches;

    auto dist2 = [](const Feature& f, const Feature& g) {
        double acc = 0.0;
        for (int i = 0; i < kDescriptorSize; ++i) {
            double d = static_cast<double>(f.descriptor[i]) - g.descriptor[i];
            acc += d * d;
        }
        return acc;
    };

    std::vector<int> fwd(a.size());
    std::vector<double> fwd_d2(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        int best = 0;
        double best_d2 = dist2(a[i], b[0]);
        for (size_t j = 1; j < b.size(); ++j) {
            double d2 = dist2(a[i], b[j]);
            if (d2 < best_d2) {
                best_d2 = d2;
                best = static_cast<int>(j);
            }
        }
        fwd[i] = best;
        fwd_d2[i] = best_d2;
    }
    std::vector<int> bwd(b.size());
    for (size_t j = 0; j < b.size(); ++j) {
        int best = 0;
        double best_d2 = dist2(b[j], a[0]);
        for (size_t i = 1; i < a.size(); ++i) {
            double d2 = dist2(b[j], a[i]);
            if (d2 < best_d2) {
                best_d2 = d2;
                best = static_cast<int>(i);
            }
        }
        bwd[j] = best;
    }

    const double max_d2 = max_distance * max_distance;
    for (size_t i = 0; i < a.size(); ++i)
        if (bwd[fwd[i]] == static_cast<int>(i) && fwd_d2[i] <= max_d2)
            matches.push_back({static_cast<int>(i), fwd[i]});
    return matches;
}

}  // namespace scanvol
