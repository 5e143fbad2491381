#pragma once

#include <array>
#include <vector>

#include "scanvol/math.hpp"

namespace scanvol {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    // Optional cached per-vertex normals; empty or vertices.size().
    std::vector<Vec3> normals;

    size_t vertex_count() const { return vertices.size(); }
    size_t face_count() const { return faces.size(); }

    // Throws on out-of-range or repeated indices within a face.
    void validate() const;

    TriangleMesh transformed(const RigidMotion& g) const;
    void flip_winding();
};

struct MeshTopology {
    size_t edge_count = 0;
    size_t boundary_edge_count = 0;     // edges with exactly one incident face
    size_t nonmanifold_edge_count = 0;  // edges with more than two
    long euler_characteristic = 0;      // V - E + F
    bool watertight = false;            // every edge borders exactly two faces
    double mean_edge_length = 0.0;
};

MeshTopology analyze_topology(const TriangleMesh& mesh);

// Vertex index pairs (a < b) of edges with exactly one incident face.
std::vector<std::array<int, 2>> boundary_edges(const TriangleMesh& mesh);

// 1-to-4 midpoint subdivision; no smoothing, shared midpoints welded.
TriangleMesh midpoint_subdivide(const TriangleMesh& mesh);

}  // namespace scanvol
