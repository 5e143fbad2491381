#pragma once

#include <limits>
#include <vector>

#include "scanvol/cloud.hpp"
#include "scanvol/math.hpp"

namespace scanvol {

// A putative match between two views: keypoint indices plus the
// backprojected camera-frame points.
struct Correspondence {
    int i = -1;  // keypoint index in view 0
    int j = -1;  // keypoint index in view 1
    Vec2 p0 = Vec2::Zero();  // pixel position in view 0
    Vec2 p1 = Vec2::Zero();  // pixel position in view 1
    Vec3 x0 = Vec3::Zero();  // backprojection of p0
    Vec3 x1 = Vec3::Zero();  // backprojection of p1
};

// Least-squares rigid motion with x0[k] ~ R * x1[k] + t: centers both sets,
// takes the SVD of the cross covariance sum x0c * x1c^T and recovers
// R = U * diag(1, 1, det(U V^T)) * V^T, which excludes reflections even for
// planar configurations. Throws on fewer than 3 pairs or on a collinear
// (rank-deficient) configuration.
RigidMotion solve_rigid_procrustes(const std::vector<Vec3>& x0, const std::vector<Vec3>& x1);

struct RansacOptions {
    int iterations = 1000;
    double inlier_threshold = 0.005;  // meters
    uint64_t seed = 0;
};

struct RansacResult {
    RigidMotion motion;
    std::vector<int> inliers;
    int best_iteration = -1;
    double inlier_rms = 0.0;
};

// Seeded consensus over minimal triples; candidates are ranked by inlier
// count, ties by lower total inlier residual, then by earlier iteration.
// The winner is refit on its full inlier set and the inlier list of the
// refit motion is returned. Bit-reproducible for a fixed seed. Throws when
// no hypothesis reaches 3 inliers.
RansacResult ransac_align(const std::vector<Correspondence>& corrs, const RansacOptions& opt = {});

struct IcpOptions {
    int max_iterations = 50;
    double tolerance = 1e-6;          // stop when the RMS improvement drops below this
    double cutoff_multiplier = 3.0;   // pair rejection at multiplier * median distance
    double max_pair_distance = std::numeric_limits<double>::infinity();
};

struct IcpResult {
    RigidMotion motion;
    std::vector<double> rms_history;  // trimmed RMS, starting at the init residual
    int iterations = 0;
};

// Point-to-point refinement of init. Each sweep matches every source point
// to its nearest target point, drops pairs beyond the distance cutoff
// (lower-median based), and refits. The recorded RMS never increases: a
// sweep that would raise it stops the loop and the previous motion is kept.
// Throws when fewer than 3 pairs survive the cutoff.
IcpResult icp_refine(const OrientedPointCloud& source, const OrientedPointCloud& target,
                     const RigidMotion& init, const IcpOptions& opt = {});

}  // namespace scanvol
