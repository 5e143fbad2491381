#include "scanvol/cloud.hpp"

#include <cmath>
#include <unordered_map>

#include "scanvol/error.hpp"

namespace scanvol {

void OrientedPointCloud::validate(double normal_tol) const {
    if (normals.size() != points.size())
        throw Error(errc::empty_cloud, "point/normal count mismatch");
    if (!colors.empty() && colors.size() != points.size())
        throw Error(errc::empty_cloud, "point/color count mismatch");
    for (size_t i = 0; i < points.size(); ++i) {
        if (!points[i].allFinite() || !normals[i].allFinite())
            throw Error(errc::empty_cloud, "non-finite cloud entry");
        if (std::abs(normals[i].norm() - 1.0) > normal_tol)
            throw Error(errc::empty_cloud, "non-unit normal");
    }
}

OrientedPointCloud OrientedPointCloud::transformed(const RigidMotion& g) const {
    OrientedPointCloud out;
    out.points.reserve(points.size());
    out.normals.reserve(normals.size());
    for (const Vec3& p : points) out.points.push_back(g.apply(p));
    for (const Vec3& n : normals) out.normals.push_back(g.rotate(n));
    out.colors = colors;
    return out;
}

void OrientedPointCloud::append(const OrientedPointCloud& other) {
    const bool keep_colors = (points.empty() || has_colors()) && other.has_colors();
    points.insert(points.end(), other.points.begin(), other.points.end());
    normals.insert(normals.end(), other.normals.begin(), other.normals.end());
    if (keep_colors)
        colors.insert(colors.end(), other.colors.begin(), other.colors.end());
    else
        colors.clear();
}

Eigen::AlignedBox3d bounding_box(const OrientedPointCloud& cloud) {
    Eigen::AlignedBox3d box;
    for (const Vec3& p : cloud.points) box.extend(p);
    return box;
}

namespace {

int64_t cell_key(const Vec3& p, const Vec3& origin, double cell) {
    auto idx = [&](int axis) {
        return static_cast<int64_t>(std::floor((p[axis] - origin[axis]) / cell));
    };
    // 21 bits per axis relative to the cloud minimum corner
    return (idx(0) & 0x1fffff) | ((idx(1) & 0x1fffff) << 21) | ((idx(2) & 0x1fffff) << 42);
}

}  // namespace

OrientedPointCloud voxel_thin(const OrientedPointCloud& cloud, double cell) {
    if (cell <= 0.0) return cloud;
    if (cloud.points.empty()) return cloud;

    struct Accum {
        Vec3 p = Vec3::Zero();
        Vec3 n = Vec3::Zero();
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        size_t count = 0;
        size_t first = 0;
    };

    const Vec3 origin = bounding_box(cloud).min();
    std::unordered_map<int64_t, Accum> cells;
    cells.reserve(cloud.size());
    std::vector<int64_t> order;
    order.reserve(cloud.size());

    for (size_t i = 0; i < cloud.size(); ++i) {
        int64_t key = cell_key(cloud.points[i], origin, cell);
        auto [it, inserted] = cells.try_emplace(key);
        Accum& a = it->second;
        if (inserted) {
            a.first = i;
            order.push_back(key);
        }
        a.p += cloud.points[i];
        a.n += cloud.normals[i];
        if (cloud.has_colors())
            a.c += Eigen::Vector3d(cloud.colors[i][0], cloud.colors[i][1], cloud.colors[i][2]);
        ++a.count;
    }

    OrientedPointCloud out;
    out.points.reserve(order.size());
    out.normals.reserve(order.size());
    if (cloud.has_colors()) out.colors.reserve(order.size());
    for (int64_t key : order) {
        const Accum& a = cells.at(key);
        out.points.push_back(a.p / static_cast<double>(a.count));
        Vec3 n = a.n;
        double len = n.norm();
        // Opposing normals can cancel; fall back to the first point's normal.
        out.normals.push_back(len > 1e-12 ? Vec3(n / len) : cloud.normals[a.first]);
        if (cloud.has_colors()) {
            Eigen::Vector3d c = a.c / static_cast<double>(a.count);
            out.colors.push_back({static_cast<uint8_t>(std::lround(c.x())),
                                  static_cast<uint8_t>(std::lround(c.y())),
                                  static_cast<uint8_t>(std::lround(c.z()))});
        }
    }
    return out;
}

OrientedPointCloud merge_views(const std::vector<OrientedPointCloud>& views,
                               const std::vector<RigidMotion>& poses,
                               double thin_cell) {
    if (views.size() != poses.size())
        throw Error(errc::arity, "merge_views: view/pose count mismatch");
    OrientedPointCloud merged;
    for (size_t i = 0; i < views.size(); ++i) merged.append(views[i].transformed(poses[i]));
    if (merged.points.empty()) throw Error(errc::empty_cloud, "merge_views: no points");
    return thin_cell > 0.0 ? voxel_thin(merged, thin_cell) : merged;
}

}  // namespace scanvol
