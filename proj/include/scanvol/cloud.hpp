#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "scanvol/math.hpp"

namespace scanvol {

// Point cloud with one unit normal per point and optional 8-bit colors
// (colors is either empty or the same length as points).
struct OrientedPointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<std::array<uint8_t, 3>> colors;

    size_t size() const { return points.size(); }
    bool has_colors() const { return !colors.empty(); }

    // Throws on size mismatch, non-finite data or non-unit normals.
    void validate(double normal_tol = 1e-6) const;

    OrientedPointCloud transformed(const RigidMotion& g) const;
    void append(const OrientedPointCloud& other);
};

Eigen::AlignedBox3d bounding_box(const OrientedPointCloud& cloud);

// Averages points, normals and colors per occupied cell of an axis-aligned
// grid with the given cell size. Output cells appear in first-visit order,
// so the result is deterministic for a fixed input order.
OrientedPointCloud voxel_thin(const OrientedPointCloud& cloud, double cell);

// Transforms every view into the world frame and concatenates, then
// optionally thins. views and poses must have equal length.
OrientedPointCloud merge_views(const std::vector<OrientedPointCloud>& views,
                               const std::vector<RigidMotion>& poses,
                               double thin_cell = 0.0);

}  // namespace scanvol
