#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "cmfield/orientation.hpp"
#include "cmfield/voxel_grid.hpp"

namespace cmfield {

enum class Resample { nearest, multilinear };

/// Rotates a grid about its world centroid. The output lattice is the tight
/// axis-aligned cover of the rotated footprint at the same spacing; each
/// output voxel pulls its value back through the inverse rotation. With
/// multilinear resampling indicator grids come back fractional; threshold
/// afterwards if an indicator is needed.
inline VoxelGrid rotate_grid(const VoxelGrid& g, const Orientation& o,
                             Resample mode = Resample::nearest) {
    g.validate();
    o.validate();
    if (o.ndim != g.ndim) throw StructuralError("rotate_grid: orientation/grid ndim mismatch");
    if (o.theta_deg == 0.0 && (g.ndim == 2 || o.phi_deg == 0.0)) return g;

    auto R = o.matrix();
    auto c = g.world_centroid();
    const double h = g.spacing;

    // Rotate the voxel-center bounding box corners to size the output lattice.
    std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    int corners = 1 << g.ndim;
    for (int m = 0; m < corners; ++m) {
        std::array<double, 3> p{0, 0, 0};
        for (int a = 0; a < g.ndim; ++a) {
            double ext = h * (g.dims[a] - 1) * 0.5;
            p[a] = c[a] + ((m & (1 << a)) ? ext : -ext) - c[a];
        }
        auto q = apply_rotation(R, p);
        for (int a = 0; a < g.ndim; ++a) {
            lo[a] = std::min(lo[a], q[a] + c[a]);
            hi[a] = std::max(hi[a], q[a] + c[a]);
        }
    }

    VoxelGrid out;
    out.ndim = g.ndim;
    out.spacing = h;
    for (int a = 0; a < g.ndim; ++a) {
        out.dims[a] = std::max(1, static_cast<int>(std::ceil((hi[a] - lo[a]) / h - 1e-9)) + 1);
        // center the output span on the rotated footprint
        double span = h * (out.dims[a] - 1);
        out.origin[a] = 0.5 * (lo[a] + hi[a]) - 0.5 * span;
    }
    out.data.assign(static_cast<std::size_t>(out.n_voxels()), 0.0);

    auto Rt = transpose(R);
    for (int i = 0; i < out.dims[0]; ++i)
        for (int j = 0; j < out.dims[1]; ++j)
            for (int k = 0; k < out.dims[2]; ++k) {
                std::array<double, 3> p = out.center({i, j, k});
                std::array<double, 3> d{p[0] - c[0], p[1] - c[1], p[2] - c[2]};
                auto s = apply_rotation(Rt, d);
                std::array<double, 3> src{s[0] + c[0], s[1] + c[1], s[2] + c[2]};
                out.at(i, j, k) = sample_at(g, src, mode == Resample::multilinear);
            }
    return out;
}

/// Point reflection through the world origin: data reversed along every
/// axis and the origin mapped so voxel centers land at their negated world
/// positions. Applying it twice restores the input exactly.
inline VoxelGrid reflect_grid(const VoxelGrid& g) {
    g.validate();
    VoxelGrid out = g;
    for (int a = 0; a < g.ndim; ++a)
        out.origin[a] = -(g.origin[a] + g.spacing * (g.dims[a] - 1));
    for (int i = 0; i < g.dims[0]; ++i)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int k = 0; k < g.dims[2]; ++k) {
                int ri = g.dims[0] - 1 - i;
                int rj = g.dims[1] - 1 - j;
                int rk = g.dims[2] - 1 - k;
                out.at(i, j, k) = g.at(ri, rj, rk);
            }
    return out;
}

}  // namespace cmfield
