#pragma once

#include <vector>

#include "scanvol/cloud.hpp"
#include "scanvol/grid.hpp"

namespace scanvol {

// Distributes each point's unit normal to the 8 surrounding grid nodes with
// trilinear weights; per-node vectors are the weight-normalized average over
// contributing points, zero where nothing lands. Throws out_of_domain if a
// point lies outside the grid.
VectorField3 splat_normals(const OrientedPointCloud& cloud, const VoxelGrid& grid);

// Staggered forward-difference gradient: node field -> edge field,
// (grad phi)_x at edge (i,j,k) = (phi(i+1,j,k) - phi(i,j,k)) / h.
EdgeField apply_gradient(const ScalarField& phi);

// Negative transpose of apply_gradient (summation by parts holds exactly):
// backward differences of edge values, the standard staggered divergence.
// apply_divergence(apply_gradient(phi)) is the 7-point Neumann Laplacian.
ScalarField apply_divergence(const EdgeField& w);

// Averages a node-based vector field onto edge midpoints, so that
// apply_divergence(edge_average(v)) is the central divergence at interior
// nodes with one-sided closure at the boundary.
EdgeField edge_average(const VectorField3& v);

struct PoissonStats {
    int iterations = 0;
    double relative_residual = 0.0;
    double rhs_norm = 0.0;
    std::vector<double> residual_history;  // relative, one entry per iteration
};

// Minimizes  sum_edges (grad phi - v_edge)^2 / 2  +  (alpha / h^2) * sum_i w_i phi(x_i)^2 / 2
// over the grid (w_i = 1/|cloud| uniform, phi(x_i) trilinear), i.e. a Neumann
// screened Poisson solve with the cloud samples softly pinned to the zero
// level. Jacobi-preconditioned conjugate gradient, matrix-free; for alpha = 0
// the constant null space is projected out and the result is mean-pinned to
// zero. Dot products use fixed-order block reduction, so the result is
// bit-identical across thread counts. Throws no_convergence if the relative
// residual does not reach cg_tol within cg_max_iters.
ScalarField solve_screened_poisson(const VectorField3& v, const OrientedPointCloud& cloud,
                                   double alpha = 4.0, double cg_tol = 1e-6,
                                   int cg_max_iters = 3000, PoissonStats* stats = nullptr);

// Mean of trilinearly interpolated phi at the sample points.
double choose_isovalue(const ScalarField& phi, const OrientedPointCloud& cloud);

}  // namespace scanvol
