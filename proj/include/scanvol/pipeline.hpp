#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "scanvol/features.hpp"
#include "scanvol/grid.hpp"
#include "scanvol/image.hpp"
#include "scanvol/poisson.hpp"
#include "scanvol/registration.hpp"
#include "scanvol/volume.hpp"

namespace scanvol {

// One calibrated input view. gray may be empty (width 0); it is then
// unavailable for feature detection, which multi-view alignment requires.
struct ViewData {
    std::string name;  // stem used for per-view outputs, e.g. "view_000"
    DepthImage depth;
    GrayImage gray;
    CameraIntrinsics intrinsics;
};

struct RegistrationConfig {
    DetectOptions detect;
    double match_max_distance = 0.75;  // descriptor L2 cutoff for mutual matches
    int min_matches = 10;              // bar for "matches suffice" against a reference
    RansacOptions ransac;
    IcpOptions icp;
    double voxel_thin = 0.005;  // cell size for the ICP working clouds
    // ICP is a local refiner. A sweep that drags the source cloud centroid
    // farther than icp_shift_gate * max(voxel_thin, ransac.inlier_threshold)
    // from the RANSAC pose is rejected and the RANSAC pose kept; scenes
    // dominated by a featureless plane otherwise let ICP slide freely along
    // it. <= 0 disables the gate. An unset (infinite) icp.max_pair_distance
    // is capped at the same radius.
    double icp_shift_gate = 3.0;
};

struct PlaneConfig {
    bool enabled = true;
    PlaneDetectOptions detect;
    // The reconstruction keeps a skirt of support-plane points around the
    // object so the extracted sheet pins the contact line. Margin =
    // max(skirt_min, skirt_fraction * object lateral extent). The skirt is
    // kept narrow on purpose: any residual lip of surface hanging below the
    // plane contributes flux in proportion to the skirt's enclosed area.
    double skirt_fraction = 0.15;
    double skirt_min = 0.015;  // meters
    // After extraction, faces whose centroid lies more than
    // trim_margin_cells * grid spacing below the plane are removed, so the
    // open boundary sits at the sheet and the divergence integral sees no
    // below-plane curtain. trim = false keeps the raw mesh.
    bool trim = true;
    double trim_margin_cells = 0.0;
};

struct ReconstructionConfig {
    int grid_resolution = 128;
    double screening_alpha = 4.0;
    double cg_tol = 1e-6;
    int cg_max_iters = 3000;
    double iso_offset = 0.0;  // added to the chosen isovalue
    double pad_fraction = 0.10;
    int min_pad_cells = 4;
};

struct PipelineConfig {
    RegistrationConfig registration;
    PlaneConfig plane;
    ReconstructionConfig recon;
    VolumeOptions volume;
    double merge_thin = 0.0;  // 0 keeps every point
    uint64_t seed = 1;
};

// How one view entered the world frame. The anchor view has reference -1
// and an identity pose; every other view chains through its reference.
struct ViewAlignment {
    int view = 0;
    std::string name;
    int reference = -1;
    int correspondences = 0;
    int ransac_inliers = 0;
    double ransac_rms = 0.0;
    double icp_rms = 0.0;
    int icp_iterations = 0;
    // How far ICP displaced the source cloud centroid from the RANSAC pose,
    // and whether that refinement passed the shift gate (rejected refinements
    // keep the RANSAC pose).
    double icp_shift = 0.0;
    bool icp_accepted = true;
    RigidMotion pose;  // camera-to-world
};

// With validity plus a depth-consistency guard around the footprint;
// nullopt for out-of-image, invalid or discontinuous depth.
std::optional<Vec3> backproject_feature(const DepthImage& depth, const CameraIntrinsics& K,
                                        double u, double v);

// Places every view in the frame of view 0. Views are processed in index
// order; each one aligns to view 0 when mutual matches suffice, otherwise
// to the already-placed view with the most matches, via RANSAC + ICP.
// Throws alignment_failure naming the first view that cannot be placed.
// clouds[i] is view i's camera-frame cloud (used by ICP after thinning).
std::vector<ViewAlignment> align_views(const std::vector<ViewData>& views,
                                       const std::vector<OrientedPointCloud>& clouds,
                                       const RegistrationConfig& cfg, uint64_t seed);

// Keeps the object (points above the plane) plus a skirt of nearby support
// points, and drops everything below the plane and beyond the skirt. Throws
// empty_cloud when nothing lies above the plane.
OrientedPointCloud crop_to_object(const OrientedPointCloud& cloud, const Plane& plane,
                                  double inlier_threshold, double skirt_fraction,
                                  double skirt_min, size_t* object_points = nullptr);

struct ReconstructionResult {
    TriangleMesh mesh;
    ScalarField field;
    double isovalue = 0.0;
    PoissonStats stats;
};

// Grid fit -> normal splat -> screened Poisson solve -> isovalue ->
// marching cubes, with the interior on the high side of the field.
ReconstructionResult reconstruct_surface(const OrientedPointCloud& cloud,
                                         const ReconstructionConfig& cfg);

// Removes faces whose centroid lies more than margin below the plane
// (signed distance < -margin) and compacts the vertex array. dropped, when
// given, receives the number of removed faces.
TriangleMesh trim_mesh_below_plane(const TriangleMesh& mesh, const Plane& plane, double margin,
                                   size_t* dropped = nullptr);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct PipelineReport {
    std::vector<ViewAlignment> alignment;
    size_t merged_points = 0;
    bool plane_found = false;
    Plane plane;  // world frame, normal toward the object
    size_t plane_inliers = 0;
    size_t object_points = 0;
    size_t cropped_points = 0;
    std::array<int, 3> grid_dims{0, 0, 0};
    double grid_spacing = 0.0;
    PoissonStats poisson;
    double isovalue = 0.0;
    size_t mesh_vertices = 0;  // after below-plane trimming
    size_t mesh_faces = 0;
    size_t trimmed_faces = 0;
    VolumeEstimate volume;
    // Wall-clock diagnostics; everything else in the report is
    // deterministic for a fixed config and seed, timings are not.
    std::vector<StageTiming> timings;
};

// Full pipeline over in-memory views. When output_dir is non-empty, writes
// merged.ply, mesh.ply, per-view pose_<name>.txt, plane.txt (when found),
// report.txt and report.json there, creating the directory if needed.
PipelineReport run_pipeline(const std::vector<ViewData>& views, const PipelineConfig& cfg,
                            const std::string& output_dir = "");

std::string report_text(const PipelineReport& report);
std::string report_json(const PipelineReport& report, bool include_timings = true);

}  // namespace scanvol
