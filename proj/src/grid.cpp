#include "scanvol/grid.hpp"

#include <algorithm>
#include <cmath>

#include "scanvol/error.hpp"

namespace scanvol {

bool VoxelGrid::contains(const Vec3& p) const {
    Vec3 local = (p - origin) / h;
    return local.x() >= 0.0 && local.x() <= nx - 1 && local.y() >= 0.0 && local.y() <= ny - 1 &&
           local.z() >= 0.0 && local.z() <= nz - 1;
}

VoxelGrid VoxelGrid::fit(const Vec3& lo, const Vec3& hi, int resolution, double pad_fraction,
                         int min_pad_cells) {
    if (resolution < 2) throw Error(errc::config, "grid: resolution must be at least 2");
    if ((hi - lo).minCoeff() < 0.0) throw Error(errc::config, "grid: empty bounds");

    // Cell size from the longest extent after fractional padding; the minimum
    // pad in cells is then enforced on top, growing the node counts.
    Vec3 extent = hi - lo;
    Vec3 padded = extent * (1.0 + 2.0 * pad_fraction);
    double longest = std::max(padded.maxCoeff(), 1e-12);
    VoxelGrid g;
    g.h = longest / (resolution - 1);

    int n[3];
    Vec3 origin;
    for (int a = 0; a < 3; ++a) {
        double pad = std::max(pad_fraction * extent[a], min_pad_cells * g.h);
        origin[a] = lo[a] - pad;
        n[a] = static_cast<int>(std::ceil((extent[a] + 2.0 * pad) / g.h)) + 1;
        n[a] = std::max(n[a], 2);
    }
    g.origin = origin;
    g.nx = n[0];
    g.ny = n[1];
    g.nz = n[2];
    return g;
}

TrilinearStencil trilinear_stencil(const VoxelGrid& grid, const Vec3& p) {
    TrilinearStencil s;
    s.nodes.fill(0);
    s.weights.fill(0.0);

    Vec3 local = (p - grid.origin) / grid.h;
    int c[3];
    double f[3];
    int n[3] = {grid.nx, grid.ny, grid.nz};
    for (int a = 0; a < 3; ++a) {
        double fl = std::floor(local[a]);
        c[a] = static_cast<int>(fl);
        f[a] = local[a] - fl;
        if (c[a] < 0 || c[a] > n[a] - 1 || (c[a] == n[a] - 1 && f[a] > 0.0)) return s;
        if (c[a] == n[a] - 1) {  // on the far face: step back so the cell exists
            c[a] -= 1;
            f[a] = 1.0;
        }
    }

    int slot = 0;
    for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
                double w = (di ? f[0] : 1.0 - f[0]) * (dj ? f[1] : 1.0 - f[1]) * (dk ? f[2] : 1.0 - f[2]);
                s.nodes[slot] = grid.node_index(c[0] + di, c[1] + dj, c[2] + dk);
                s.weights[slot] = w;
                ++slot;
            }
    s.inside = true;
    return s;
}

double ScalarField::sample(const Vec3& p) const {
    TrilinearStencil s = trilinear_stencil(grid, p);
    if (!s.inside) return 0.0;
    double acc = 0.0;
    for (int k = 0; k < 8; ++k) acc += s.weights[k] * values[s.nodes[k]];
    return acc;
}

}  // namespace scanvol
