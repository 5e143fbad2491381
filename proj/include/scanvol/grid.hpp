#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "scanvol/math.hpp"

namespace scanvol {

// Axis-aligned regular grid of nodes. Nodes sit at origin + h*(i,j,k) with
// 0 <= i < nx etc., so the grid spans (nx-1)*h along x. Node storage order is
// x-fastest: index = i + nx*(j + ny*k).
struct VoxelGrid {
    Vec3 origin = Vec3::Zero();
    double h = 0.0;
    int nx = 0, ny = 0, nz = 0;

    size_t node_count() const { return static_cast<size_t>(nx) * ny * nz; }
    size_t node_index(int i, int j, int k) const {
        return static_cast<size_t>(i) + static_cast<size_t>(nx) * (static_cast<size_t>(j) + static_cast<size_t>(ny) * k);
    }
    Vec3 node_position(int i, int j, int k) const {
        return origin + h * Vec3(i, j, k);
    }
    bool contains(const Vec3& p) const;

    // Grid covering [lo, hi] padded by pad_fraction of each extent per side
    // (at least min_pad_cells cells), with the node count chosen so the
    // requested resolution covers the longest padded extent.
    static VoxelGrid fit(const Vec3& lo, const Vec3& hi, int resolution,
                         double pad_fraction = 0.1, int min_pad_cells = 4);
};

// Weights of the eight cell corners enclosing a point.
struct TrilinearStencil {
    std::array<size_t, 8> nodes;
    std::array<double, 8> weights;
    bool inside = false;
};

TrilinearStencil trilinear_stencil(const VoxelGrid& grid, const Vec3& p);

// One double per node.
struct ScalarField {
    VoxelGrid grid;
    std::vector<double> values;

    explicit ScalarField(const VoxelGrid& g) : grid(g), values(g.node_count(), 0.0) {}
    double& at(int i, int j, int k) { return values[grid.node_index(i, j, k)]; }
    double at(int i, int j, int k) const { return values[grid.node_index(i, j, k)]; }
    double sample(const Vec3& p) const;  // trilinear; 0 outside
};

// One Vec3 per node.
struct VectorField3 {
    VoxelGrid grid;
    std::vector<Vec3> values;

    explicit VectorField3(const VoxelGrid& g) : grid(g), values(g.node_count(), Vec3::Zero()) {}
    Vec3& at(int i, int j, int k) { return values[grid.node_index(i, j, k)]; }
    const Vec3& at(int i, int j, int k) const { return values[grid.node_index(i, j, k)]; }
};

// Values on the staggered edge-midpoint lattice: x-edges connect node (i,j,k)
// to (i+1,j,k) and are stored at ex[i + (nx-1)*(j + ny*k)], likewise y and z.
struct EdgeField {
    VoxelGrid grid;
    std::vector<double> ex, ey, ez;

    explicit EdgeField(const VoxelGrid& g)
        : grid(g),
          ex(static_cast<size_t>(g.nx - 1) * g.ny * g.nz, 0.0),
          ey(static_cast<size_t>(g.nx) * (g.ny - 1) * g.nz, 0.0),
          ez(static_cast<size_t>(g.nx) * g.ny * (g.nz - 1), 0.0) {}
    size_t x_index(int i, int j, int k) const {
        return static_cast<size_t>(i) + static_cast<size_t>(grid.nx - 1) * (static_cast<size_t>(j) + static_cast<size_t>(grid.ny) * k);
    }
    size_t y_index(int i, int j, int k) const {
        return static_cast<size_t>(i) + static_cast<size_t>(grid.nx) * (static_cast<size_t>(j) + static_cast<size_t>(grid.ny - 1) * k);
    }
    size_t z_index(int i, int j, int k) const {
        return static_cast<size_t>(i) + static_cast<size_t>(grid.nx) * (static_cast<size_t>(j) + static_cast<size_t>(grid.ny) * k);
    }
};

}  // namespace scanvol
