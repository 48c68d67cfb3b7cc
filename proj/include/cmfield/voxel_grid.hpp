#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmfield/common.hpp"

namespace cmfield {

/// Dense scalar samples on a regular 2D or 3D lattice. `data` is row-major
/// (axis 0 slowest, last axis fastest); `origin` is the world coordinate of
/// the center of voxel (0,...,0). Unused trailing axes have dim 1.
struct VoxelGrid {
    int ndim = 2;
    std::array<int, 3> dims{1, 1, 1};
    double spacing = 1.0;
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    std::vector<double> data;

    VoxelGrid() = default;
    VoxelGrid(int nd, std::array<int, 3> d, double sp, std::array<double, 3> org)
        : ndim(nd), dims(d), spacing(sp), origin(org) {
        for (int a = nd; a < 3; ++a) {
            dims[a] = 1;
            origin[a] = 0.0;
        }
        data.assign(static_cast<std::size_t>(n_voxels()), 0.0);
    }

    std::int64_t n_voxels() const {
        return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
    }

    std::int64_t index(int i, int j, int k = 0) const {
        return (static_cast<std::int64_t>(i) * dims[1] + j) * dims[2] + k;
    }

    double& at(int i, int j, int k = 0) { return data[static_cast<std::size_t>(index(i, j, k))]; }
    double at(int i, int j, int k = 0) const { return data[static_cast<std::size_t>(index(i, j, k))]; }

    bool in_bounds(const std::array<int, 3>& idx) const {
        for (int a = 0; a < 3; ++a)
            if (idx[a] < 0 || idx[a] >= dims[a]) return false;
        return true;
    }

    /// World coordinate of a voxel center.
    std::array<double, 3> center(const std::array<int, 3>& idx) const {
        return {origin[0] + spacing * idx[0], origin[1] + spacing * idx[1],
                origin[2] + spacing * idx[2]};
    }

    /// World center of the whole lattice; rotations pivot here.
    std::array<double, 3> world_centroid() const {
        return {origin[0] + spacing * (dims[0] - 1) * 0.5,
                origin[1] + spacing * (dims[1] - 1) * 0.5,
                origin[2] + spacing * (dims[2] - 1) * 0.5};
    }

    void validate() const {
        if (ndim != 2 && ndim != 3) throw StructuralError("VoxelGrid: ndim must be 2 or 3");
        for (int a = 0; a < ndim; ++a)
            if (dims[a] < 1) throw StructuralError("VoxelGrid: dims must be positive");
        for (int a = ndim; a < 3; ++a)
            if (dims[a] != 1) throw StructuralError("VoxelGrid: unused axis dim must be 1");
        if (!(spacing > 0.0)) throw StructuralError("VoxelGrid: spacing must be > 0");
        if (static_cast<std::int64_t>(data.size()) != n_voxels())
            throw StructuralError("VoxelGrid: data length does not match dims product");
    }
};

inline bool same_lattice(const VoxelGrid& a, const VoxelGrid& b, double tol = 0.0) {
    if (a.ndim != b.ndim || a.dims != b.dims) return false;
    if (std::abs(a.spacing - b.spacing) > tol) return false;
    for (int i = 0; i < 3; ++i)
        if (std::abs(a.origin[i] - b.origin[i]) > tol) return false;
    return true;
}

inline bool is_indicator(const VoxelGrid& g) {
    for (double v : g.data)
        if (v != 0.0 && v != 1.0) return false;
    return true;
}

inline void require_indicator(const VoxelGrid& g, const std::string& what) {
    if (!is_indicator(g)) throw StructuralError(what + ": expected an indicator grid (values in {0,1})");
}

inline std::int64_t occupied_count(const VoxelGrid& g) {
    std::int64_t n = 0;
    for (double v : g.data) n += (v != 0.0);
    return n;
}

/// Part plus optional fixtures on the same lattice. The effective obstacle
/// is their pointwise union.
struct ObstacleSet {
    VoxelGrid part;
    std::optional<VoxelGrid> fixtures;
};

inline VoxelGrid union_obstacle(const ObstacleSet& obs) {
    obs.part.validate();
    if (!obs.fixtures) return obs.part;
    const VoxelGrid& f = *obs.fixtures;
    f.validate();
    if (obs.part.ndim != f.ndim || obs.part.dims != f.dims)
        throw StructuralError("union_obstacle: lattice mismatch in dims");
    if (obs.part.spacing != f.spacing)
        throw StructuralError("union_obstacle: lattice mismatch in spacing");
    if (obs.part.origin != f.origin)
        throw StructuralError("union_obstacle: lattice mismatch in origin");
    VoxelGrid out = obs.part;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::max(out.data[i], f.data[i]);
    return out;
}

/// Samples the grid at a world point. Nearest mode snaps to the closest
/// voxel center; multilinear blends the 2^ndim surrounding centers. Points
/// outside the lattice read as 0.
inline double sample_at(const VoxelGrid& g, const std::array<double, 3>& p, bool multilinear) {
    std::array<double, 3> q{0.0, 0.0, 0.0};
    for (int a = 0; a < g.ndim; ++a) q[a] = (p[a] - g.origin[a]) / g.spacing;
    if (!multilinear) {
        std::array<int, 3> idx{0, 0, 0};
        for (int a = 0; a < g.ndim; ++a) idx[a] = static_cast<int>(std::lround(q[a]));
        return g.in_bounds(idx) ? g.at(idx[0], idx[1], idx[2]) : 0.0;
    }
    std::array<int, 3> lo{0, 0, 0};
    std::array<double, 3> w{0.0, 0.0, 0.0};
    for (int a = 0; a < g.ndim; ++a) {
        double f = std::floor(q[a]);
        lo[a] = static_cast<int>(f);
        w[a] = q[a] - f;
    }
    double acc = 0.0;
    int corners = 1 << g.ndim;
    for (int c = 0; c < corners; ++c) {
        std::array<int, 3> idx = lo;
        double wt = 1.0;
        for (int a = 0; a < g.ndim; ++a) {
            if (c & (1 << a)) {
                idx[a] += 1;
                wt *= w[a];
            } else {
                wt *= 1.0 - w[a];
            }
        }
        if (wt == 0.0) continue;
        acc += wt * (g.in_bounds(idx) ? g.at(idx[0], idx[1], idx[2]) : 0.0);
    }
    return acc;
}

/// Threshold a field into an indicator (values >= thresh become 1).
inline VoxelGrid binarize(const VoxelGrid& g, double thresh = 0.5) {
    VoxelGrid out = g;
    for (double& v : out.data) v = (v >= thresh) ? 1.0 : 0.0;
    return out;
}

/// Resamples a field onto a coarser lattice with `round(dim*scale)` voxels
/// per axis. The world footprint is preserved; each output voxel averages
/// the input with exact overlap weights (separable box filter).
inline VoxelGrid box_downsample(const VoxelGrid& g, double scale) {
    g.validate();
    if (!(scale > 0.0) || scale > 1.0) throw ConfigError("box_downsample: scale must be in (0, 1]");
    std::array<int, 3> nd{1, 1, 1};
    std::array<double, 3> nsp{g.spacing, g.spacing, g.spacing};
    std::array<double, 3> norg{0.0, 0.0, 0.0};
    for (int a = 0; a < g.ndim; ++a) {
        nd[a] = std::max(1, static_cast<int>(std::llround(g.dims[a] * scale)));
        nsp[a] = g.spacing / scale;
        norg[a] = (g.origin[a] - 0.5 * g.spacing) + 0.5 * nsp[a];
    }
    // Output spacing depends on scale alone, so grids coarsened together stay
    // mutually compatible; cell counts round, so the footprint may shift by a
    // fraction of a coarse cell at the high end.
    VoxelGrid out;
    out.ndim = g.ndim;
    out.dims = nd;
    out.spacing = nsp[0];
    out.origin = norg;
    out.data.assign(static_cast<std::size_t>(out.n_voxels()), 0.0);

    // Precompute per-axis overlap weights between output cell j and input cell i.
    struct AxisOverlap {
        std::vector<int> first;
        std::vector<std::vector<double>> w;  // normalized to sum 1
    };
    std::array<AxisOverlap, 3> ov;
    for (int a = 0; a < 3; ++a) {
        int n_out = nd[a];
        ov[a].first.resize(n_out);
        ov[a].w.resize(n_out);
        if (a >= g.ndim) {
            ov[a].first[0] = 0;
            ov[a].w[0] = {1.0};
            continue;
        }
        double in_lo = g.origin[a] - 0.5 * g.spacing;
        for (int j = 0; j < n_out; ++j) {
            double lo = in_lo + j * nsp[a];
            double hi = lo + nsp[a];
            int i0 = std::max(0, static_cast<int>(std::floor((lo - in_lo) / g.spacing + 1e-12)));
            int i1 = std::min(g.dims[a] - 1,
                              static_cast<int>(std::floor((hi - in_lo) / g.spacing - 1e-12)));
            ov[a].first[j] = i0;
            double total = 0.0;
            std::vector<double> ws;
            for (int i = i0; i <= i1; ++i) {
                double cl = in_lo + i * g.spacing;
                double ch = cl + g.spacing;
                double o = std::min(hi, ch) - std::max(lo, cl);
                if (o < 0.0) o = 0.0;
                ws.push_back(o);
                total += o;
            }
            for (double& x : ws) x /= total;
            ov[a].w[j] = std::move(ws);
        }
    }

    for (int j0 = 0; j0 < nd[0]; ++j0)
        for (int j1 = 0; j1 < nd[1]; ++j1)
            for (int j2 = 0; j2 < nd[2]; ++j2) {
                double acc = 0.0;
                const auto& w0 = ov[0].w[j0];
                const auto& w1 = ov[1].w[j1];
                const auto& w2 = ov[2].w[j2];
                for (std::size_t a0 = 0; a0 < w0.size(); ++a0)
                    for (std::size_t a1 = 0; a1 < w1.size(); ++a1)
                        for (std::size_t a2 = 0; a2 < w2.size(); ++a2) {
                            int i0 = ov[0].first[j0] + static_cast<int>(a0);
                            int i1 = ov[1].first[j1] + static_cast<int>(a1);
                            int i2 = ov[2].first[j2] + static_cast<int>(a2);
                            acc += w0[a0] * w1[a1] * w2[a2] * g.at(i0, i1, i2);
                        }
                out.at(j0, j1, j2) = acc;
            }
    return out;
}

}  // namespace cmfield
