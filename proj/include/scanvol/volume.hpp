#pragma once

#include <optional>
#include <utility>

#include "scanvol/cloud.hpp"
#include "scanvol/mesh.hpp"

namespace scanvol {

// Plane {x : <normal, x> = d} with unit normal.
struct Plane {
    Vec3 normal{0.0, 0.0, 1.0};
    double d = 0.0;

    double signed_distance(const Vec3& x) const { return normal.dot(x) - d; }
};

enum class FlowAxis { X, Y, Z };

struct VertexNormalStats {
    size_t degenerate_faces = 0;    // zero-area faces skipped in averaging
    size_t undefined_normals = 0;   // vertices whose one-ring normals cancel
};

// Per-vertex normal = normalized sum of the unit normals of incident faces.
// Vertices with no usable incident face get a zero vector and are counted
// in stats; they contribute nothing to flux quadrature.
std::vector<Vec3> vertex_normals(const TriangleMesh& mesh, VertexNormalStats* stats = nullptr);

// Enclosed volume as the surface flux of a unit-divergence linear flow
// (FlowAxis::X means v = (x, 0, 0)), quadrature per face:
// A(T)/3 * sum over corners of <v(corner), vertex normal>.
// Exact-signed only for outward-wound closed meshes; open meshes are
// meaningful when every hole lies in a plane of zero flux.
double mesh_volume_divergence(const TriangleMesh& mesh, FlowAxis axis = FlowAxis::X);

// Independent check: sum of signed tetrahedra <a, (b-a) x (c-a)> / 6.
// Exact for closed meshes regardless of where the origin sits.
double mesh_volume_tetrahedra(const TriangleMesh& mesh);

struct PlaneDetectOptions {
    int iterations = 1000;
    double distance_threshold = 0.005;  // meters
    double min_inlier_fraction = 0.10;
    uint64_t seed = 0;
};

struct DetectedPlane {
    Plane plane;
    std::vector<int> inliers;
};

// RANSAC plane over point triplets, refit by the centroid and the smallest
// principal direction of the inlier scatter. The normal is oriented toward
// the side holding the majority of off-plane points; with none, toward +z.
// Deterministic for a fixed seed. Throws when no plane reaches 3 inliers
// or the inlier fraction stays below the minimum.
DetectedPlane detect_ground_plane(const OrientedPointCloud& cloud, const PlaneDetectOptions& opt = {});

// Minimal rotation taking the plane normal to +z followed by the shift
// putting the plane at z = 0; antiparallel normals rotate 180 degrees
// about the x axis. Returns the moved mesh and the motion used.
std::pair<TriangleMesh, RigidMotion> align_support_to_plane(const TriangleMesh& mesh, const Plane& plane);

struct VolumeOptions {
    FlowAxis flow = FlowAxis::X;
    double gap_factor = 2.0;  // unreliable when support gap exceeds factor * mean edge length
};

struct VolumeEstimate {
    double volume = 0.0;        // divergence quadrature, primary figure
    double volume_tetra = 0.0;  // signed-tetrahedron check
    size_t boundary_edge_count = 0;
    double support_gap = 0.0;   // max |z| over boundary vertices after alignment
    double mean_edge_length = 0.0;
    size_t degenerate_faces = 0;
    bool aligned = false;
    RigidMotion applied;
    bool unreliable = false;
};

// Aligns to the support plane when given, then evaluates both volume
// estimators and boundary diagnostics. Without a plane, any open boundary
// marks the result unreliable; with one, a support gap beyond
// gap_factor * mean edge length does.
VolumeEstimate estimate_volume(const TriangleMesh& mesh, const std::optional<Plane>& support,
                               const VolumeOptions& opt = {});

}  // namespace scanvol
