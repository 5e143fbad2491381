#include "scanvol/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "scanvol/error.hpp"

namespace scanvol {

VectorField3 splat_normals(const OrientedPointCloud& cloud, const VoxelGrid& grid) {
    if (cloud.size() == 0) throw Error(errc::empty_cloud, "splat: empty cloud");
    VectorField3 field(grid);
    std::vector<double> weight(grid.node_count(), 0.0);
    for (size_t p = 0; p < cloud.size(); ++p) {
        TrilinearStencil s = trilinear_stencil(grid, cloud.points[p]);
        if (!s.inside) throw Error(errc::out_of_domain, "splat: point outside grid");
        for (int k = 0; k < 8; ++k) {
            field.values[s.nodes[k]] += s.weights[k] * cloud.normals[p];
            weight[s.nodes[k]] += s.weights[k];
        }
    }
    for (size_t n = 0; n < field.values.size(); ++n)
        if (weight[n] > 0.0) field.values[n] /= weight[n];
    return field;
}

EdgeField apply_gradient(const ScalarField& phi) {
    const VoxelGrid& g = phi.grid;
    EdgeField w(g);
    const double inv_h = 1.0 / g.h;
#pragma omp parallel for schedule(static)
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double c = phi.at(i, j, k);
                if (i + 1 < g.nx) w.ex[w.x_index(i, j, k)] = (phi.at(i + 1, j, k) - c) * inv_h;
                if (j + 1 < g.ny) w.ey[w.y_index(i, j, k)] = (phi.at(i, j + 1, k) - c) * inv_h;
                if (k + 1 < g.nz) w.ez[w.z_index(i, j, k)] = (phi.at(i, j, k + 1) - c) * inv_h;
            }
    return w;
}

ScalarField apply_divergence(const EdgeField& w) {
    const VoxelGrid& g = w.grid;
    ScalarField out(g);
    const double inv_h = 1.0 / g.h;
#pragma omp parallel for schedule(static)
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double acc = 0.0;
                if (i + 1 < g.nx) acc += w.ex[w.x_index(i, j, k)];
                if (i > 0) acc -= w.ex[w.x_index(i - 1, j, k)];
                if (j + 1 < g.ny) acc += w.ey[w.y_index(i, j, k)];
                if (j > 0) acc -= w.ey[w.y_index(i, j - 1, k)];
                if (k + 1 < g.nz) acc += w.ez[w.z_index(i, j, k)];
                if (k > 0) acc -= w.ez[w.z_index(i, j, k - 1)];
                out.at(i, j, k) = acc * inv_h;
            }
    return out;
}

EdgeField edge_average(const VectorField3& v) {
    const VoxelGrid& g = v.grid;
    EdgeField w(g);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const Vec3& c = v.at(i, j, k);
                if (i + 1 < g.nx) w.ex[w.x_index(i, j, k)] = 0.5 * (c.x() + v.at(i + 1, j, k).x());
                if (j + 1 < g.ny) w.ey[w.y_index(i, j, k)] = 0.5 * (c.y() + v.at(i, j + 1, k).y());
                if (k + 1 < g.nz) w.ez[w.z_index(i, j, k)] = 0.5 * (c.z() + v.at(i, j, k + 1).z());
            }
    return w;
}

namespace {

// Screening operator in compressed form: per sample the 8 node slots and
// weights, plus the transpose grouped by node for a gather-only (and thus
// thread-count-invariant) application.
struct Screening {
    double scale = 0.0;  // alpha / h^2 * w_i, uniform
    std::vector<std::array<size_t, 8>> nodes;
    std::vector<std::array<double, 8>> weights;
    std::vector<size_t> node_offsets;              // CSR over nodes
    std::vector<std::pair<size_t, double>> cells;  // (sample index, stencil weight)

    bool active() const { return scale > 0.0 && !nodes.empty(); }
};

Screening build_screening(const OrientedPointCloud& cloud, const VoxelGrid& grid, double alpha) {
    Screening s;
    if (alpha <= 0.0 || cloud.size() == 0) return s;
    s.scale = alpha / (grid.h * grid.h) / static_cast<double>(cloud.size());
    s.nodes.resize(cloud.size());
    s.weights.resize(cloud.size());
    std::vector<size_t> counts(grid.node_count() + 1, 0);
    for (size_t p = 0; p < cloud.size(); ++p) {
        TrilinearStencil st = trilinear_stencil(grid, cloud.points[p]);
        if (!st.inside) throw Error(errc::out_of_domain, "screening: sample outside grid");
        s.nodes[p] = st.nodes;
        s.weights[p] = st.weights;
        for (int k = 0; k < 8; ++k) ++counts[st.nodes[k] + 1];
    }
    for (size_t n = 1; n < counts.size(); ++n) counts[n] += counts[n - 1];
    s.node_offsets = counts;
    s.cells.resize(s.nodes.size() * 8);
    std::vector<size_t> cursor(s.node_offsets.begin(), s.node_offsets.end() - 1);
    for (size_t p = 0; p < s.nodes.size(); ++p)
        for (int k = 0; k < 8; ++k) s.cells[cursor[s.nodes[p][k]]++] = {p, s.weights[p][k]};
    return s;
}

// out = (G^T G) phi + scale * S^T S phi, matrix-free.
void apply_system(const ScalarField& phi, const Screening& scr, std::vector<double>& sample_buf,
                  ScalarField& out) {
    const VoxelGrid& g = phi.grid;
    const double inv_h2 = 1.0 / (g.h * g.h);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double c = phi.at(i, j, k);
                double acc = 0.0;
                if (i > 0) acc += c - phi.at(i - 1, j, k);
                if (i + 1 < g.nx) acc += c - phi.at(i + 1, j, k);
                if (j > 0) acc += c - phi.at(i, j - 1, k);
                if (j + 1 < g.ny) acc += c - phi.at(i, j + 1, k);
                if (k > 0) acc += c - phi.at(i, j, k - 1);
                if (k + 1 < g.nz) acc += c - phi.at(i, j, k + 1);
                out.at(i, j, k) = acc * inv_h2;
            }
    if (!scr.active()) return;
    const long ns = static_cast<long>(scr.nodes.size());
#pragma omp parallel for schedule(static)
    for (long p = 0; p < ns; ++p) {
        double v = 0.0;
        for (int k = 0; k < 8; ++k) v += scr.weights[p][k] * phi.values[scr.nodes[p][k]];
        sample_buf[p] = v;
    }
    const long nn = static_cast<long>(out.values.size());
#pragma omp parallel for schedule(static)
    for (long n = 0; n < nn; ++n) {
        double acc = 0.0;
        for (size_t c = scr.node_offsets[n]; c < scr.node_offsets[n + 1]; ++c)
            acc += scr.cells[c].second * sample_buf[scr.cells[c].first];
        out.values[n] += scr.scale * acc;
    }
}

void subtract_mean(std::vector<double>& x) {
    double mean = deterministic_sum(x) / static_cast<double>(x.size());
    const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) x[i] -= mean;
}

}  // namespace

ScalarField solve_screened_poisson(const VectorField3& v, const OrientedPointCloud& cloud,
                                   double alpha, double cg_tol, int cg_max_iters,
                                   PoissonStats* stats) {
    if (alpha < 0.0) throw Error(errc::config, "poisson: screening weight must be >= 0");
    const VoxelGrid& grid = v.grid;
    ScalarField b = apply_divergence(edge_average(v));
    for (double& x : b.values) x = -x;  // normal equations: (G^T G) phi = G^T v_edge

    Screening scr = build_screening(cloud, grid, alpha);
    const bool pin_mean = !scr.active();
    std::vector<double> sample_buf(scr.nodes.size(), 0.0);

    ScalarField phi(grid);
    double b_norm = std::sqrt(deterministic_dot(b.values, b.values));
    if (stats) stats->rhs_norm = b_norm;
    if (b_norm == 0.0) {
        if (stats) {
            stats->iterations = 0;
            stats->relative_residual = 0.0;
        }
        return phi;
    }

    // Jacobi diagonal of the system operator.
    std::vector<double> inv_diag(grid.node_count());
    {
        const double inv_h2 = 1.0 / (grid.h * grid.h);
        for (int k = 0; k < grid.nz; ++k)
            for (int j = 0; j < grid.ny; ++j)
                for (int i = 0; i < grid.nx; ++i) {
                    int deg = (i > 0) + (i + 1 < grid.nx) + (j > 0) + (j + 1 < grid.ny) + (k > 0) +
                              (k + 1 < grid.nz);
                    inv_diag[grid.node_index(i, j, k)] = deg * inv_h2;
                }
        if (scr.active())
            for (size_t p = 0; p < scr.nodes.size(); ++p)
                for (int k = 0; k < 8; ++k)
                    inv_diag[scr.nodes[p][k]] += scr.scale * scr.weights[p][k] * scr.weights[p][k];
        for (double& d : inv_diag) d = 1.0 / d;
    }

    ScalarField r = b;           // r = b - A*0
    if (pin_mean) subtract_mean(r.values);
    ScalarField z(grid), q(grid);
    const long nn = static_cast<long>(grid.node_count());
    auto precondition = [&](const ScalarField& in, ScalarField& out) {
#pragma omp parallel for schedule(static)
        for (long n = 0; n < nn; ++n) out.values[n] = inv_diag[n] * in.values[n];
        if (pin_mean) subtract_mean(out.values);
    };

    precondition(r, z);
    ScalarField p = z;
    double rz = deterministic_dot(r.values, z.values);
    double res = std::sqrt(deterministic_dot(r.values, r.values)) / b_norm;
    if (stats) stats->residual_history.push_back(res);

    int iter = 0;
    while (res > cg_tol) {
        if (iter >= cg_max_iters)
            throw Error(errc::no_convergence,
                        "poisson: CG reached " + std::to_string(cg_max_iters) +
                            " iterations with relative residual " + std::to_string(res));
        apply_system(p, scr, sample_buf, q);
        double pq = deterministic_dot(p.values, q.values);
        if (pq <= 0.0)
            throw Error(errc::no_convergence, "poisson: CG broke down (non-positive curvature)");
        double step = rz / pq;
#pragma omp parallel for schedule(static)
        for (long n = 0; n < nn; ++n) {
            phi.values[n] += step * p.values[n];
            r.values[n] -= step * q.values[n];
        }
        precondition(r, z);
        double rz_next = deterministic_dot(r.values, z.values);
        double beta = rz_next / rz;
        rz = rz_next;
#pragma omp parallel for schedule(static)
        for (long n = 0; n < nn; ++n) p.values[n] = z.values[n] + beta * p.values[n];
        res = std::sqrt(deterministic_dot(r.values, r.values)) / b_norm;
        ++iter;
        if (stats) stats->residual_history.push_back(res);
    }

    if (pin_mean) subtract_mean(phi.values);
    if (stats) {
        stats->iterations = iter;
        stats->relative_residual = res;
    }
    return phi;
}

double choose_isovalue(const ScalarField& phi, const OrientedPointCloud& cloud) {
    if (cloud.size() == 0) throw Error(errc::empty_cloud, "isovalue: empty cloud");
    std::vector<double> samples(cloud.size());
    for (size_t p = 0; p < cloud.size(); ++p) samples[p] = phi.sample(cloud.points[p]);
    return deterministic_sum(samples) / static_cast<double>(samples.size());
}

}  // namespace scanvol
