#include "scanvol/mesh_primitives.hpp"

#include <map>
#include <unordered_map>

#include "scanvol/error.hpp"

namespace scanvol {

TriangleMesh make_box_mesh(const Vec3& extents, const Vec3& min_corner, const BoxMeshOptions& opt) {
    if (opt.resolution < 1) throw Error(errc::config, "box resolution must be >= 1");
    const int res = opt.resolution;
    TriangleMesh mesh;
    // Lattice key (i, j, k) in units of extents / res; exact integers, so
    // welding across faces is robust.
    std::map<std::array<int, 3>, int> welded;

    auto vertex = [&](const std::array<int, 3>& lattice) {
        if (opt.shared_vertices) {
            auto it = welded.find(lattice);
            if (it != welded.end()) return it->second;
        }
        Vec3 p = min_corner + Vec3(extents.x() * lattice[0] / res, extents.y() * lattice[1] / res,
                                   extents.z() * lattice[2] / res);
        int idx = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(p);
        if (opt.shared_vertices) welded.emplace(lattice, idx);
        return idx;
    };

    // axis = face normal direction, side = 0 (min) or res (max)
    for (int axis = 0; axis < 3; ++axis) {
        for (int side = 0; side <= 1; ++side) {
            if (opt.open_bottom && axis == 2 && side == 0) continue;
            const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
            for (int i = 0; i < res; ++i) {
                for (int j = 0; j < res; ++j) {
                    auto corner = [&](int di, int dj) {
                        std::array<int, 3> c{};
                        c[axis] = side * res;
                        c[a1] = i + di;
                        c[a2] = j + dj;
                        return vertex(c);
                    };
                    int v00 = corner(0, 0), v10 = corner(1, 0), v11 = corner(1, 1), v01 = corner(0, 1);
                    if (side == 1) {
                        // outward normal along +axis: (a1 x a2) = +axis
                        mesh.faces.push_back({v00, v10, v11});
                        mesh.faces.push_back({v00, v11, v01});
                    } else {
                        mesh.faces.push_back({v00, v11, v10});
                        mesh.faces.push_back({v00, v01, v11});
                    }
                }
            }
        }
    }
    return mesh;
}

TriangleMesh make_icosphere(double radius, int level, const Vec3& center) {
    if (radius <= 0.0) throw Error(errc::config, "icosphere radius must be positive");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    for (Vec3& v : verts) v.normalize();
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1},
    };

    for (int l = 0; l < level; ++l) {
        std::unordered_map<uint64_t, int> cache;
        auto midpoint = [&](int a, int b) {
            uint64_t key = (static_cast<uint64_t>(static_cast<uint32_t>(std::min(a, b))) << 32) |
                           static_cast<uint32_t>(std::max(a, b));
            auto it = cache.find(key);
            if (it != cache.end()) return it->second;
            Vec3 m = (verts[a] + verts[b]).normalized();
            verts.push_back(m);
            int idx = static_cast<int>(verts.size()) - 1;
            cache.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            int ab = midpoint(f[0], f[1]);
            int bc = midpoint(f[1], f[2]);
            int ca = midpoint(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    TriangleMesh mesh;
    mesh.vertices.reserve(verts.size());
    for (const Vec3& v : verts) mesh.vertices.push_back(center + radius * v);
    mesh.faces = std::move(faces);
    return mesh;
}

}  // namespace scanvol
