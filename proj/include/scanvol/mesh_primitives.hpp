#pragma once

#include "scanvol/mesh.hpp"

namespace scanvol {

struct BoxMeshOptions {
    int resolution = 1;           // quads per face side
    bool shared_vertices = true;  // weld vertices across faces and creases
    bool open_bottom = false;     // omit the z = min face
};

// Axis-aligned box spanning [min_corner, min_corner + extents], wound
// outward. With shared_vertices = false each face gets its own vertices,
// so averaged vertex normals equal the exact face normals everywhere.
TriangleMesh make_box_mesh(const Vec3& extents, const Vec3& min_corner = Vec3::Zero(),
                           const BoxMeshOptions& opt = {});

// Subdivided icosahedron with all vertices at distance radius from center,
// wound outward.
TriangleMesh make_icosphere(double radius, int level, const Vec3& center = Vec3::Zero());

}  // namespace scanvol
