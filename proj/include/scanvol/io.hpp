#pragma once

#include <array>
#include <string>
#include <vector>

#include "scanvol/cloud.hpp"
#include "scanvol/grid.hpp"
#include "scanvol/image.hpp"
#include "scanvol/mesh.hpp"
#include "scanvol/volume.hpp"

namespace scanvol {

// Depth images. 16-bit grayscale PNG holds millimeters (0 = invalid); PFM
// (grayscale "Pf", little endian, bottom-up rows) holds float meters with
// non-positive marking invalid. PFM is the lossless interchange format;
// PNG is provided for tooling and quantizes to 1 mm.
DepthImage read_depth_image(const std::string& path);  // dispatches on extension
DepthImage read_depth_png(const std::string& path);
DepthImage read_depth_pfm(const std::string& path);
void write_depth_png(const std::string& path, const DepthImage& depth);
void write_depth_pfm(const std::string& path, const DepthImage& depth);

// 8-bit grayscale PNG; floats are clamped to [0, 1] on write.
GrayImage read_gray_png(const std::string& path);
void write_gray_png(const std::string& path, const GrayImage& image);

// Oriented point clouds as PLY (x y z nx ny nz [red green blue]).
// Binary PLY stores doubles, so a write/read round trip is bit exact.
void write_cloud_ply(const std::string& path, const OrientedPointCloud& cloud, bool binary = true);
OrientedPointCloud read_cloud_ply(const std::string& path);

// Triangle meshes as PLY (double vertices, bit-exact binary round trip) or
// OBJ (text, %.17g, also value exact).
void write_mesh_ply(const std::string& path, const TriangleMesh& mesh, bool binary = true);
void write_mesh_obj(const std::string& path, const TriangleMesh& mesh);
TriangleMesh read_mesh(const std::string& path);  // dispatches on extension
TriangleMesh read_mesh_ply(const std::string& path);
TriangleMesh read_mesh_obj(const std::string& path);

// Plain-text pose: three lines of four numbers, row-major [R | t], %.17g.
void write_pose(const std::string& path, const RigidMotion& g);
RigidMotion read_pose(const std::string& path);

// Plain-text plane: one line "nx ny nz d".
void write_plane(const std::string& path, const Plane& plane);
Plane read_plane(const std::string& path);

// Plain-text intrinsics: one line "fu fv cu cv width height".
void write_intrinsics(const std::string& path, const CameraIntrinsics& K);
CameraIntrinsics read_intrinsics(const std::string& path);

// Correspondence injection CSV: lines "u0,v0,u1,v1"; '#' comments and an
// optional header line are skipped.
std::vector<std::array<double, 4>> read_correspondence_csv(const std::string& path);

// Scalar field debug dump: a small text header (dims, origin, spacing)
// followed by raw little-endian float32 node values.
void write_scalar_field(const std::string& path, const ScalarField& field);
ScalarField read_scalar_field(const std::string& path);

}  // namespace scanvol
