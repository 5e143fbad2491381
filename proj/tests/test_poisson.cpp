#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <scanvol/error.hpp>
#include <scanvol/poisson.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace scanvol;

namespace {

VoxelGrid unit_grid(int n) {
    VoxelGrid g;
    g.origin = Vec3::Zero();
    g.h = 1.0 / (n - 1);
    g.nx = g.ny = g.nz = n;
    return g;
}

OrientedPointCloud sphere_cloud(int count, double r, const Vec3& center, uint64_t seed) {
    OrientedPointCloud c;
    Rng rng(seed);
    while (int(c.points.size()) < count) {
        Vec3 p(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        double len = p.norm();
        if (len < 1e-9) continue;
        p /= len;
        c.points.push_back(center + r * p);
        c.normals.push_back(p);  // outward
    }
    return c;
}

double edge_dot(const EdgeField& a, const EdgeField& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.ex.size(); ++i) s += a.ex[i] * b.ex[i];
    for (size_t i = 0; i < a.ey.size(); ++i) s += a.ey[i] * b.ey[i];
    for (size_t i = 0; i < a.ez.size(); ++i) s += a.ez[i] * b.ez[i];
    return s;
}

double node_dot(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s;
}

}  // namespace

TEST_CASE("splatting a point on a node deposits its normal there") {
    VoxelGrid g = unit_grid(9);
    OrientedPointCloud c;
    c.points = {g.node_position(3, 4, 5)};
    c.normals = {Vec3(0, 0, 1)};
    VectorField3 v = splat_normals(c, g);
    CHECK((v.at(3, 4, 5) - Vec3(0, 0, 1)).norm() < 1e-12);
    size_t nonzero = 0;
    for (const Vec3& val : v.values)
        if (val.norm() > 0.0) ++nonzero;
    CHECK(nonzero == 1);
}

TEST_CASE("splatting at a cell center reaches all 8 corners equally") {
    VoxelGrid g = unit_grid(5);
    OrientedPointCloud c;
    Vec3 center = g.node_position(1, 2, 3) + Vec3(g.h, g.h, g.h) / 2.0;
    c.points = {center};
    c.normals = {Vec3(1, 0, 0)};
    VectorField3 v = splat_normals(c, g);
    for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di)
                CHECK((v.at(1 + di, 2 + dj, 3 + dk) - Vec3(1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("opposite normals in one cell cancel") {
    VoxelGrid g = unit_grid(5);
    OrientedPointCloud c;
    Vec3 p = g.node_position(2, 2, 2) + Vec3(0.3, 0.4, 0.2) * g.h;
    c.points = {p, p};
    c.normals = {Vec3(0, 1, 0), Vec3(0, -1, 0)};
    VectorField3 v = splat_normals(c, g);
    for (const Vec3& val : v.values) CHECK(val.norm() < 1e-12);
}

TEST_CASE("points outside the grid are out of domain") {
    VoxelGrid g = unit_grid(5);
    OrientedPointCloud c;
    c.points = {Vec3(2, 2, 2)};
    c.normals = {Vec3(0, 0, 1)};
    CHECK_THROWS_AS(splat_normals(c, g), Error);
    try {
        splat_normals(c, g);
    } catch (const Error& e) {
        CHECK(e.code() == errc::out_of_domain);
    }
}

TEST_CASE("divergence is the negative transpose of gradient") {
    VoxelGrid g;
    g.origin = Vec3(-0.2, 0.1, 0.0);
    g.h = 0.17;
    g.nx = 7;
    g.ny = 6;
    g.nz = 5;
    Rng rng(404);
    for (int trial = 0; trial < 100; ++trial) {
        ScalarField phi(g);
        for (double& x : phi.values) x = rng.next_gaussian();
        EdgeField w(g);
        for (double& x : w.ex) x = rng.next_gaussian();
        for (double& x : w.ey) x = rng.next_gaussian();
        for (double& x : w.ez) x = rng.next_gaussian();

        double lhs = node_dot(apply_divergence(w), phi);
        double rhs = -edge_dot(w, apply_gradient(phi));
        double scale = std::max({std::abs(lhs), std::abs(rhs), 1.0});
        CHECK(std::abs(lhs - rhs) < 1e-10 * scale);
    }
}

TEST_CASE("zero field with zero screening solves to zero") {
    VoxelGrid g = unit_grid(12);
    VectorField3 v(g);
    OrientedPointCloud c = sphere_cloud(50, 0.2, Vec3(0.5, 0.5, 0.5), 3);
    ScalarField phi = solve_screened_poisson(v, c, 0.0, 1e-8, 2000);
    for (double x : phi.values) CHECK(std::abs(x) < 1e-12);
}

TEST_CASE("manufactured linear gradient is recovered in the interior") {
    // v = grad(psi) for psi = x: a gradient field, so the energy minimum is
    // exactly phi = x + const and any interior mismatch is pure solver error
    const int n = 24;
    VoxelGrid g = unit_grid(n);
    VectorField3 v(g);
    for (Vec3& val : v.values) val = Vec3(1, 0, 0);

    OrientedPointCloud c;
    c.points = {g.node_position(n / 2, n / 2, n / 2)};
    c.normals = {Vec3(1, 0, 0)};

    const double tol = 1e-9;
    ScalarField phi = solve_screened_poisson(v, c, 0.0, tol, 5000);

    double vnorm = 0.0;
    for (const Vec3& val : v.values) vnorm += val.squaredNorm();
    vnorm = std::sqrt(vnorm);

    // forward differences against the prescribed slope on an interior box
    double worst = 0.0;
    for (int k = 4; k < n - 4; ++k)
        for (int j = 4; j < n - 4; ++j)
            for (int i = 4; i < n - 5; ++i) {
                double fd = (phi.at(i + 1, j, k) - phi.at(i, j, k)) / g.h;
                worst = std::max(worst, std::abs(fd - 1.0));
            }
    CHECK(worst < 10.0 * tol * vnorm);
}

TEST_CASE("screened sphere solve places the level set on the sphere") {
    const int n = 64;
    const double r = 0.25;
    const Vec3 center(0.5, 0.5, 0.5);
    VoxelGrid g = unit_grid(n);
    OrientedPointCloud cloud = sphere_cloud(20000, r, center, 11);
    VectorField3 v = splat_normals(cloud, g);
    PoissonStats stats;
    ScalarField phi = solve_screened_poisson(v, cloud, 4.0, 1e-6, 3000, &stats);
    CHECK(stats.relative_residual <= 1e-6);

    double c = choose_isovalue(phi, cloud);
    double range = *std::max_element(phi.values.begin(), phi.values.end()) -
                   *std::min_element(phi.values.begin(), phi.values.end());
    CHECK(std::abs(c) < 0.1 * range);  // screening pins samples near zero

    // walk rays from the center; where phi - c changes sign, the crossing
    // radius must sit within a voxel of r (RMS)
    Rng rng(77);
    double acc = 0.0;
    int hits = 0;
    for (int ray = 0; ray < 500; ++ray) {
        Vec3 dir(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        if (dir.norm() < 1e-9) continue;
        dir.normalize();
        double prev = phi.sample(center) - c;
        for (double s = g.h; s < 0.45; s += g.h / 4.0) {
            double cur = phi.sample(center + s * dir) - c;
            if ((prev > 0.0) != (cur > 0.0)) {
                double frac = prev / (prev - cur);
                double crossing = s - g.h / 4.0 + frac * g.h / 4.0;
                acc += (crossing - r) * (crossing - r);
                ++hits;
                break;
            }
            prev = cur;
        }
    }
    REQUIRE(hits > 450);
    CHECK(std::sqrt(acc / hits) < g.h);
}

TEST_CASE("interior of the sphere gets the higher potential") {
    // inward-pointing cloud normals put the object on the Above side
    const int n = 32;
    VoxelGrid g = unit_grid(n);
    OrientedPointCloud cloud = sphere_cloud(5000, 0.25, Vec3(0.5, 0.5, 0.5), 13);
    for (Vec3& nrm : cloud.normals) nrm = -nrm;  // inward, as fused scans produce
    VectorField3 v = splat_normals(cloud, g);
    ScalarField phi = solve_screened_poisson(v, cloud, 4.0, 1e-6, 3000);
    double c = choose_isovalue(phi, cloud);
    CHECK(phi.sample(Vec3(0.5, 0.5, 0.5)) > c);
    CHECK(phi.sample(Vec3(0.05, 0.05, 0.05)) < c);
}

TEST_CASE("holes in the normal support are harmonically in-painted") {
    const int n = 40;
    VoxelGrid g = unit_grid(n);
    OrientedPointCloud cloud = sphere_cloud(20000, 0.3, Vec3(0.5, 0.5, 0.5), 17);
    // cut away the polar cap to leave a hole in the splat support
    OrientedPointCloud cut;
    for (size_t i = 0; i < cloud.size(); ++i) {
        if ((cloud.points[i] - Vec3(0.5, 0.5, 0.5)).normalized().z() > 0.75) continue;
        cut.points.push_back(cloud.points[i]);
        cut.normals.push_back(cloud.normals[i]);
    }
    VectorField3 v = splat_normals(cut, g);

    const double tol = 1e-8;
    ScalarField phi = solve_screened_poisson(v, cut, 0.0, tol, 6000);

    // nodes near the missing cap: v = 0 there, so div v = 0 and the solve
    // forces the 7-point Laplacian of phi to vanish
    double worst = 0.0;
    int checked = 0;
    for (int k = 1; k + 1 < n; ++k)
        for (int j = 1; j + 1 < n; ++j)
            for (int i = 1; i + 1 < n; ++i) {
                Vec3 p = g.node_position(i, j, k);
                Vec3 d = p - Vec3(0.5, 0.5, 0.5);
                if (d.norm() < 0.25 || d.norm() > 0.35) continue;
                if (d.normalized().z() < 0.9) continue;  // stay inside the hole
                double lap = (phi.at(i + 1, j, k) + phi.at(i - 1, j, k) + phi.at(i, j + 1, k) +
                              phi.at(i, j - 1, k) + phi.at(i, j, k + 1) + phi.at(i, j, k - 1) -
                              6.0 * phi.at(i, j, k)) /
                             (g.h * g.h);
                worst = std::max(worst, std::abs(lap));
                ++checked;
            }
    REQUIRE(checked > 20);
    CHECK(worst < 10.0 * tol / (g.h * g.h));
}

TEST_CASE("residual history is reported and never explodes") {
    const int n = 24;
    VoxelGrid g = unit_grid(n);
    OrientedPointCloud cloud = sphere_cloud(2000, 0.25, Vec3(0.5, 0.5, 0.5), 19);
    VectorField3 v = splat_normals(cloud, g);
    PoissonStats stats;
    solve_screened_poisson(v, cloud, 4.0, 1e-7, 3000, &stats);
    REQUIRE(!stats.residual_history.empty());
    // history holds the initial residual plus one entry per iteration
    CHECK(stats.iterations + 1 == int(stats.residual_history.size()));
    CHECK(stats.rhs_norm > 0.0);
    for (size_t i = 1; i < stats.residual_history.size(); ++i)
        CHECK(stats.residual_history[i] < 10.0 * stats.residual_history[i - 1]);
    CHECK(stats.residual_history.back() <= 1e-7);
}

TEST_CASE("starved iteration budget raises no_convergence") {
    const int n = 32;
    VoxelGrid g = unit_grid(n);
    OrientedPointCloud cloud = sphere_cloud(2000, 0.25, Vec3(0.5, 0.5, 0.5), 23);
    VectorField3 v = splat_normals(cloud, g);
    CHECK_THROWS_AS(solve_screened_poisson(v, cloud, 4.0, 1e-12, 3), Error);
    try {
        solve_screened_poisson(v, cloud, 4.0, 1e-12, 3);
    } catch (const Error& e) {
        CHECK(e.code() == errc::no_convergence);
    }
}

TEST_CASE("isovalue of a constant field is that constant") {
    VoxelGrid g = unit_grid(8);
    ScalarField phi(g);
    for (double& x : phi.values) x = 5.0;
    OrientedPointCloud c = sphere_cloud(100, 0.2, Vec3(0.5, 0.5, 0.5), 29);
    CHECK(choose_isovalue(phi, c) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("isovalue of a linear field interpolates exactly") {
    VoxelGrid g = unit_grid(8);
    ScalarField phi(g);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) phi.at(i, j, k) = g.node_position(i, j, k).z();

    OrientedPointCloud c;
    Rng rng(31);
    for (int i = 0; i < 40; ++i) {
        c.points.emplace_back(0.2 + 0.6 * rng.next_double(), 0.2 + 0.6 * rng.next_double(), 0.3);
        c.normals.push_back(Vec3::UnitZ());
    }
    CHECK(choose_isovalue(phi, c) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("constant shifts move the isovalue with the field") {
    VoxelGrid g = unit_grid(10);
    ScalarField phi(g);
    Rng rng(37);
    for (double& x : phi.values) x = rng.next_gaussian();
    OrientedPointCloud c = sphere_cloud(60, 0.15, Vec3(0.5, 0.5, 0.5), 41);
    double base = choose_isovalue(phi, c);
    ScalarField shifted = phi;
    for (double& x : shifted.values) x += 2.5;
    CHECK(choose_isovalue(shifted, c) == doctest::Approx(base + 2.5).epsilon(1e-12));
}
