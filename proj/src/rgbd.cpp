#include "scanvol/rgbd.hpp"

#include <cmath>

#include "scanvol/error.hpp"

namespace scanvol {

Vec3 backproject_pixel(double u, double v, double z, const CameraIntrinsics& K) {
    if (!K.valid()) throw Error(errc::config, "invalid intrinsics");
    if (!std::isfinite(z) || z <= 0.0) throw Error(errc::invalid_depth, "backproject: nonpositive depth");
    return {(u - K.cu) * z / K.fu, (v - K.cv) * z / K.fv, z};
}

std::optional<Vec2> project_point(const Vec3& x, const CameraIntrinsics& K) {
    if (x.z() <= 0.0) return std::nullopt;
    return Vec2{K.fu * x.x() / x.z() + K.cu, K.fv * x.y() / x.z() + K.cv};
}

namespace {

// One finite-difference side: +1 or -1 pixel along one axis.
struct Side {
    bool usable = false;
    double delta = 0.0;  // z(neighbor) - z(center)
};

Side probe(const DepthImage& d, int u, int v, int du, int dv, double zc, double jump) {
    Side s;
    if (!d.is_valid(u + du, v + dv)) return s;
    double delta = d.at(u + du, v + dv) - zc;
    if (std::abs(delta) > jump) return s;
    s.usable = true;
    s.delta = delta;
    return s;
}

std::optional<double> axis_gradient(Side neg, Side pos) {
    if (neg.usable && pos.usable) return (pos.delta - neg.delta) / 2.0;
    if (pos.usable) return pos.delta;
    if (neg.usable) return -neg.delta;
    return std::nullopt;
}

}  // namespace

std::optional<Vec2> depth_gradient(const DepthImage& depth, int u, int v, const GradientOptions& opt) {
    if (!depth.is_valid(u, v)) return std::nullopt;
    const double zc = depth.at(u, v);
    auto gu = axis_gradient(probe(depth, u, v, -1, 0, zc, opt.jump_threshold),
                            probe(depth, u, v, +1, 0, zc, opt.jump_threshold));
    auto gv = axis_gradient(probe(depth, u, v, 0, -1, zc, opt.jump_threshold),
                            probe(depth, u, v, 0, +1, zc, opt.jump_threshold));
    if (!gu || !gv) return std::nullopt;
    return Vec2{*gu, *gv};
}

OrientedPointCloud estimate_normals(const DepthImage& depth, const CameraIntrinsics& K,
                                    const NormalEstimationOptions& opt, const GrayImage* gray) {
    if (!K.valid()) throw Error(errc::config, "invalid intrinsics");
    if (gray && (gray->width != depth.width || gray->height != depth.height))
        throw Error(errc::config, "estimate_normals: gray/depth size mismatch");

    OrientedPointCloud cloud;
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            if (!depth.is_valid(u, v)) continue;
            auto g = depth_gradient(depth, u, v, opt.gradient);
            if (!g) continue;
            const double z = depth.at(u, v);
            Vec3 n{-(K.fu / z) * g->x(), -(K.fv / z) * g->y(), 1.0};
            n.normalize();
            cloud.points.push_back(backproject_pixel(u, v, z, K));
            cloud.normals.push_back(n);
            if (gray) {
                auto q = static_cast<uint8_t>(std::lround(std::clamp(gray->at(u, v), 0.0f, 1.0f) * 255.0f));
                cloud.colors.push_back({q, q, q});
            }
        }
    }
    if (cloud.points.empty())
        throw Error(errc::empty_cloud, "estimate_normals: no pixel with a defined gradient");
    return cloud;
}

}  // namespace scanvol
