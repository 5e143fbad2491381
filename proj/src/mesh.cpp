#include "scanvol/mesh.hpp"

#include <map>
#include <unordered_map>

#include "scanvol/error.hpp"

namespace scanvol {

void TriangleMesh::validate() const {
    if (!normals.empty() && normals.size() != vertices.size())
        throw Error(errc::empty_mesh, "normal/vertex count mismatch");
    const long n = static_cast<long>(vertices.size());
    for (const auto& f : faces) {
        for (int k = 0; k < 3; ++k)
            if (f[k] < 0 || f[k] >= n) throw Error(errc::empty_mesh, "face index out of range");
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
            throw Error(errc::empty_mesh, "degenerate face with repeated index");
    }
}

TriangleMesh TriangleMesh::transformed(const RigidMotion& g) const {
    TriangleMesh out;
    out.vertices.reserve(vertices.size());
    for (const Vec3& v : vertices) out.vertices.push_back(g.apply(v));
    out.faces = faces;
    out.normals.reserve(normals.size());
    for (const Vec3& n : normals) out.normals.push_back(g.rotate(n));
    return out;
}

void TriangleMesh::flip_winding() {
    for (auto& f : faces) std::swap(f[1], f[2]);
}

namespace {

uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
}

}  // namespace

MeshTopology analyze_topology(const TriangleMesh& mesh) {
    std::unordered_map<uint64_t, int> incidence;
    incidence.reserve(mesh.faces.size() * 3);
    for (const auto& f : mesh.faces)
        for (int k = 0; k < 3; ++k) ++incidence[edge_key(f[k], f[(k + 1) % 3])];

    MeshTopology topo;
    topo.edge_count = incidence.size();
    double length_sum = 0.0;
    for (const auto& [key, count] : incidence) {
        if (count == 1) ++topo.boundary_edge_count;
        if (count > 2) ++topo.nonmanifold_edge_count;
        int a = static_cast<int>(key >> 32);
        int b = static_cast<int>(key & 0xffffffffu);
        length_sum += (mesh.vertices[a] - mesh.vertices[b]).norm();
    }
    topo.euler_characteristic = static_cast<long>(mesh.vertices.size()) -
                                static_cast<long>(topo.edge_count) +
                                static_cast<long>(mesh.faces.size());
    topo.watertight = !mesh.faces.empty() && topo.boundary_edge_count == 0 && topo.nonmanifold_edge_count == 0;
    topo.mean_edge_length = topo.edge_count ? length_sum / static_cast<double>(topo.edge_count) : 0.0;
    return topo;
}

std::vector<std::array<int, 2>> boundary_edges(const TriangleMesh& mesh) {
    std::map<std::array<int, 2>, int> incidence;
    for (const auto& f : mesh.faces)
        for (int k = 0; k < 3; ++k) {
            int a = f[k], b = f[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            ++incidence[{a, b}];
        }
    std::vector<std::array<int, 2>> out;
    for (const auto& [e, count] : incidence)
        if (count == 1) out.push_back(e);
    return out;
}

TriangleMesh midpoint_subdivide(const TriangleMesh& mesh) {
    TriangleMesh out;
    out.vertices = mesh.vertices;
    out.faces.reserve(mesh.faces.size() * 4);
    std::unordered_map<uint64_t, int> midpoint;
    auto mid = [&](int a, int b) {
        uint64_t key = edge_key(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        int idx = static_cast<int>(out.vertices.size());
        out.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]) / 2.0);
        midpoint.emplace(key, idx);
        return idx;
    };
    for (const auto& f : mesh.faces) {
        int ab = mid(f[0], f[1]);
        int bc = mid(f[1], f[2]);
        int ca = mid(f[2], f[0]);
        out.faces.push_back({f[0], ab, ca});
        out.faces.push_back({f[1], bc, ab});
        out.faces.push_back({f[2], ca, bc});
        out.faces.push_back({ab, bc, ca});
    }
    return out;
}

}  // namespace scanvol
