#include "scanvol/volume.hpp"

#include <cmath>

#include "scanvol/error.hpp"

namespace scanvol {

std::vector<Vec3> vertex_normals(const TriangleMesh& mesh, VertexNormalStats* stats) {
    VertexNormalStats local;
    std::vector<Vec3> sums(mesh.vertices.size(), Vec3::Zero());
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        Vec3 cross = (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a);
        double len = cross.norm();
        if (len <= 1e-300) {
            ++local.degenerate_faces;
            continue;
        }
        Vec3 n = cross / len;
        for (int k = 0; k < 3; ++k) sums[f[k]] += n;
    }
    for (Vec3& n : sums) {
        double len = n.norm();
        if (len <= 1e-12) {
            n.setZero();
            ++local.undefined_normals;
        } else {
            n /= len;
        }
    }
    if (stats) *stats = local;
    return sums;
}

double mesh_volume_divergence(const TriangleMesh& mesh, FlowAxis axis) {
    const int c = static_cast<int>(axis);
    std::vector<Vec3> normals = vertex_normals(mesh);
    double total = 0.0;
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        double area = 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm();
        double flux = 0.0;
        for (int k = 0; k < 3; ++k) flux += mesh.vertices[f[k]][c] * normals[f[k]][c];
        total += area / 3.0 * flux;
    }
    return total;
}

double mesh_volume_tetrahedra(const TriangleMesh& mesh) {
    double total = 0.0;
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        total += a.dot((mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a)) / 6.0;
    }
    return total;
}

namespace {

struct PlaneFit {
    Plane plane;
    bool ok = false;
};

PlaneFit plane_through(const Vec3& a, const Vec3& b, const Vec3& c) {
    PlaneFit fit;
    Vec3 n = (b - a).cross(c - a);
    double len = n.norm();
    double scale = std::max({(b - a).norm(), (c - a).norm(), 1e-300});
    if (len <= 1e-12 * scale * scale) return fit;  // collinear triple
    fit.plane.normal = n / len;
    fit.plane.d = fit.plane.normal.dot(a);
    fit.ok = true;
    return fit;
}

Plane refit_plane(const OrientedPointCloud& cloud, const std::vector<int>& inliers) {
    Vec3 centroid = Vec3::Zero();
    for (int i : inliers) centroid += cloud.points[i];
    centroid /= static_cast<double>(inliers.size());
    Mat3 scatter = Mat3::Zero();
    for (int i : inliers) {
        Vec3 q = cloud.points[i] - centroid;
        scatter += q * q.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    Plane plane;
    plane.normal = eig.eigenvectors().col(0).normalized();
    plane.d = plane.normal.dot(centroid);
    return plane;
}

std::vector<int> plane_inliers(const OrientedPointCloud& cloud, const Plane& plane, double threshold) {
    std::vector<int> inliers;
    for (size_t i = 0; i < cloud.size(); ++i)
        if (std::abs(plane.signed_distance(cloud.points[i])) <= threshold)
            inliers.push_back(static_cast<int>(i));
    return inliers;
}

void orient_toward_offplane_majority(Plane& plane, const OrientedPointCloud& cloud,
                                     const std::vector<int>& inliers) {
    std::vector<char> is_inlier(cloud.size(), 0);
    for (int i : inliers) is_inlier[i] = 1;
    long above = 0, below = 0;
    for (size_t i = 0; i < cloud.size(); ++i) {
        if (is_inlier[i]) continue;
        double sd = plane.signed_distance(cloud.points[i]);
        if (sd > 0.0)
            ++above;
        else if (sd < 0.0)
            ++below;
    }
    bool flip;
    if (above != below) {
        flip = below > above;
    } else {
        // No off-plane majority; prefer a normal with positive z, then y, then x.
        flip = false;
        for (int axis = 2; axis >= 0; --axis) {
            if (plane.normal[axis] > 0.0) break;
            if (plane.normal[axis] < 0.0) {
                flip = true;
                break;
            }
        }
    }
    if (flip) {
        plane.normal = -plane.normal;
        plane.d = -plane.d;
    }
}

}  // namespace

DetectedPlane detect_ground_plane(const OrientedPointCloud& cloud, const PlaneDetectOptions& opt) {
    const size_t n = cloud.size();
    if (n < 3) throw Error(errc::no_plane, "plane detection needs at least 3 points");

    Rng rng(hash_combine(opt.seed, 0x706c616eull));
    long best_count = -1;
    double best_residual = 0.0;
    Plane best_plane;

    for (int iter = 0; iter < opt.iterations; ++iter) {
        size_t i0 = rng.next_below(n), i1, i2;
        do {
            i1 = rng.next_below(n);
        } while (i1 == i0);
        do {
            i2 = rng.next_below(n);
        } while (i2 == i0 || i2 == i1);

        PlaneFit fit = plane_through(cloud.points[i0], cloud.points[i1], cloud.points[i2]);
        if (!fit.ok) continue;

        long count = 0;
        double residual = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double sd = fit.plane.signed_distance(cloud.points[i]);
            if (std::abs(sd) <= opt.distance_threshold) {
                ++count;
                residual += sd * sd;
            }
        }
        if (count > best_count || (count == best_count && residual < best_residual)) {
            best_count = count;
            best_residual = residual;
            best_plane = fit.plane;
        }
    }

    if (best_count < 3) throw Error(errc::no_plane, "no plane hypothesis reached 3 inliers");

    std::vector<int> inliers = plane_inliers(cloud, best_plane, opt.distance_threshold);
    Plane plane = refit_plane(cloud, inliers);
    inliers = plane_inliers(cloud, plane, opt.distance_threshold);
    if (inliers.size() < 3 ||
        static_cast<double>(inliers.size()) < opt.min_inlier_fraction * static_cast<double>(n))
        throw Error(errc::no_plane, "plane support below minimum inlier fraction");

    orient_toward_offplane_majority(plane, cloud, inliers);
    return {plane, std::move(inliers)};
}

std::pair<TriangleMesh, RigidMotion> align_support_to_plane(const TriangleMesh& mesh, const Plane& plane) {
    const Vec3 n = plane.normal.normalized();
    const Vec3 ez(0.0, 0.0, 1.0);
    Vec3 axis = n.cross(ez);
    double s = axis.norm();
    double c = n.dot(ez);

    RigidMotion g;
    if (s < 1e-12) {
        if (c > 0.0)
            g.R = Mat3::Identity();
        else
            g.R = Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX()).toRotationMatrix();
    } else {
        g.R = Eigen::AngleAxisd(std::atan2(s, c), axis / s).toRotationMatrix();
    }
    // The rotation maps the plane to {z = d}; drop it to z = 0.
    g.t = Vec3(0.0, 0.0, -plane.d);
    return {mesh.transformed(g), g};
}

VolumeEstimate estimate_volume(const TriangleMesh& mesh, const std::optional<Plane>& support,
                               const VolumeOptions& opt) {
    if (mesh.faces.empty()) throw Error(errc::empty_mesh, "estimate_volume: empty mesh");

    VolumeEstimate est;
    TriangleMesh working;
    const TriangleMesh* active = &mesh;
    if (support) {
        auto [moved, motion] = align_support_to_plane(mesh, *support);
        working = std::move(moved);
        est.applied = motion;
        est.aligned = true;
        active = &working;
    }

    VertexNormalStats stats;
    vertex_normals(*active, &stats);
    est.degenerate_faces = stats.degenerate_faces;
    est.volume = mesh_volume_divergence(*active, opt.flow);
    est.volume_tetra = mesh_volume_tetrahedra(*active);

    MeshTopology topo = analyze_topology(*active);
    est.boundary_edge_count = topo.boundary_edge_count;
    est.mean_edge_length = topo.mean_edge_length;

    if (est.aligned) {
        auto bedges = boundary_edges(*active);
        double gap = 0.0;
        for (const auto& e : bedges) {
            gap = std::max(gap, std::abs(active->vertices[e[0]].z()));
            gap = std::max(gap, std::abs(active->vertices[e[1]].z()));
        }
        est.support_gap = gap;
        est.unreliable = gap > opt.gap_factor * est.mean_edge_length;
    } else {
        est.support_gap = 0.0;
        est.unreliable = est.boundary_edge_count > 0;
    }
    return est;
}

}  // namespace scanvol
