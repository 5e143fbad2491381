#pragma once

#include <optional>

#include "scanvol/cloud.hpp"
#include "scanvol/image.hpp"
#include "scanvol/math.hpp"

namespace scanvol {

// Pinhole ray through pixel (u, v) at depth z, camera frame:
// ((u - cu) * z / fu, (v - cv) * z / fv, z). u is the column, v the row,
// both measured at integer sample positions.
Vec3 backproject_pixel(double u, double v, double z, const CameraIntrinsics& K);

// Pixel of a camera-frame point with z > 0; nullopt otherwise.
std::optional<Vec2> project_point(const Vec3& x, const CameraIntrinsics& K);

struct GradientOptions {
    // A one-pixel depth step larger than this is treated as a discontinuity
    // and the offending side is dropped from the finite difference.
    double jump_threshold = 0.05;  // meters per pixel
};

// Screen-space depth gradient (dz/du, dz/dv) in meters per pixel. Central
// difference where both neighbors are usable, one-sided at image borders
// and mask edges, nullopt when an axis has no usable neighbor or the
// center pixel is invalid.
std::optional<Vec2> depth_gradient(const DepthImage& depth, int u, int v,
                                   const GradientOptions& opt = {});

struct NormalEstimationOptions {
    GradientOptions gradient;
};

// Camera-frame oriented point cloud from a depth image. Surface normals
// come from the screen-space depth gradient mapped through the pinhole
// model: n ~ (-(fu/z) dz/du, -(fv/z) dz/dv, 1), normalized. For a
// fronto-parallel wall this yields (0, 0, 1). Pixels without a defined
// gradient are skipped. When gray is given, point colors are attached.
OrientedPointCloud estimate_normals(const DepthImage& depth, const CameraIntrinsics& K,
                                    const NormalEstimationOptions& opt = {},
                                    const GrayImage* gray = nullptr);

}  // namespace scanvol
