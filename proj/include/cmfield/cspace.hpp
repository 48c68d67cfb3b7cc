#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "cmfield/common.hpp"
#include "cmfield/fft.hpp"
#include "cmfield/orientation.hpp"
#include "cmfield/tool.hpp"
#include "cmfield/transform.hpp"
#include "cmfield/voxel_grid.hpp"

namespace cmfield {

/// One translational slice of the collision measure at a fixed orientation.
/// The field lives on the obstacle lattice with values in [0,1].
struct FieldCrossSection {
    Orientation orientation;
    VoxelGrid field;
};

/// Ordered set of cross-sections sharing one lattice, sorted by angles.
struct FieldStack {
    std::vector<FieldCrossSection> sections;

    void validate() const {
        if (sections.empty()) throw StructuralError("FieldStack: empty");
        const VoxelGrid& ref = sections.front().field;
        for (std::size_t i = 0; i < sections.size(); ++i) {
            sections[i].field.validate();
            sections[i].orientation.validate();
            if (sections[i].orientation.ndim != sections.front().orientation.ndim)
                throw StructuralError("FieldStack: mixed 2D/3D orientations");
            if (!same_lattice(sections[i].field, ref))
                throw StructuralError("FieldStack: sections on different lattices");
            if (i > 0 && !(sections[i - 1].orientation < sections[i].orientation))
                throw StructuralError("FieldStack: orientations not strictly sorted");
        }
    }
};

namespace detail {

struct PlacementGeometry {
    VoxelGrid rotated;                          // rotated tool indicator
    std::vector<std::array<int, 3>> shifts;     // sharp-point index offsets u_k
};

/// Rotates the tool and locates each sharp point on the rotated lattice.
/// A placement of sharp point k at obstacle voxel q aligns rotated-tool
/// voxel t with obstacle voxel q - u_k + t.
inline PlacementGeometry place_tool(const ToolAssembly& tool, const Orientation& R,
                                    double obstacle_spacing) {
    PlacementGeometry pg;
    pg.rotated = rotate_grid(tool.occupancy, R, Resample::nearest);
    auto M = R.matrix();
    auto c = tool.occupancy.world_centroid();
    for (const auto& k : tool.sharp_points) {
        auto w = tool.occupancy.center(k);
        std::array<double, 3> d{w[0] - c[0], w[1] - c[1], w[2] - c[2]};
        auto r = apply_rotation(M, d);
        std::array<int, 3> u{0, 0, 0};
        for (int a = 0; a < tool.occupancy.ndim; ++a) {
            // sharp point's world position, expressed in rotated-grid indices,
            // then adjusted by the world offset between the two lattices so the
            // shift is exact in obstacle-lattice steps
            double world = r[a] + c[a];
            u[a] = static_cast<int>(std::lround((world - pg.rotated.origin[a]) / obstacle_spacing));
        }
        bool dup = false;
        for (const auto& s : pg.shifts) dup = dup || (s == u);
        if (!dup) pg.shifts.push_back(u);
    }
    return pg;
}

inline VoxelGrid field_like(const VoxelGrid& obstacle) {
    VoxelGrid f = obstacle;
    std::fill(f.data.begin(), f.data.end(), 0.0);
    return f;
}

}  // namespace detail

/// Collision measure at one orientation via FFT cross-correlation: one full
/// correlation of the obstacle with the rotated tool, read at each sharp
/// point's shift, minimized over sharp points, normalized by the tool
/// measure, then cleaned of FFT epsilon and clamped to [0,1].
inline FieldCrossSection cmf_cross_section(const VoxelGrid& obstacle, const ToolAssembly& tool,
                                           const Orientation& R) {
    obstacle.validate();
    require_indicator(obstacle, "cmf_cross_section");
    if (tool.sharp_points.empty()) throw ConfigError("cmf_cross_section: empty sharp point set");
    tool.validate();
    R.validate();
    if (R.ndim != obstacle.ndim)
        throw StructuralError("cmf_cross_section: orientation/obstacle ndim mismatch");
    if (tool.occupancy.ndim != obstacle.ndim)
        throw StructuralError("cmf_cross_section: tool/obstacle ndim mismatch");
    if (tool.occupancy.spacing != obstacle.spacing)
        throw StructuralError("cmf_cross_section: tool and obstacle spacing differ");

    auto pg = detail::place_tool(tool, R, obstacle.spacing);
    const auto& rt = pg.rotated;

    // cross-correlation of obstacle with rotated tool = convolution with the
    // index-reversed tool array; full extent No + Nt - 1 per axis
    VoxelGrid rev = rt;
    for (int i = 0; i < rt.dims[0]; ++i)
        for (int j = 0; j < rt.dims[1]; ++j)
            for (int k = 0; k < rt.dims[2]; ++k)
                rev.at(i, j, k) = rt.at(rt.dims[0] - 1 - i, rt.dims[1] - 1 - j, rt.dims[2] - 1 - k);

    std::array<int, 3> dc{1, 1, 1};
    std::vector<double> corr =
        fft_convolve_full(obstacle.data, obstacle.dims, rev.data, rev.dims, obstacle.ndim, &dc);

    double denom = tool.tool_measure / voxel_volume(tool.occupancy);
    FieldCrossSection out{R, detail::field_like(obstacle)};
    const std::array<int, 3>& no = obstacle.dims;
    const std::array<int, 3>& nt = rt.dims;
    for (int i = 0; i < no[0]; ++i)
        for (int j = 0; j < no[1]; ++j)
            for (int k = 0; k < no[2]; ++k) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& u : pg.shifts) {
                    std::array<int, 3> c{i - u[0] + nt[0] - 1, j - u[1] + nt[1] - 1,
                                         k - u[2] + nt[2] - 1};
                    double v = 0.0;
                    if (c[0] >= 0 && c[0] < dc[0] && c[1] >= 0 && c[1] < dc[1] && c[2] >= 0 &&
                        c[2] < dc[2])
                        v = corr[static_cast<std::size_t>(
                            (static_cast<std::int64_t>(c[0]) * dc[1] + c[1]) * dc[2] + c[2])];
                    best = std::min(best, v);
                }
                double val = best / denom;
                if (std::abs(val) <= 1e-9) val = 0.0;
                out.field.at(i, j, k) = clamp01(val);
            }
    return out;
}

/// Same measure by direct overlap counting at every placement; the
/// independent oracle for the FFT path. Guarded by an operation budget.
inline FieldCrossSection cmf_brute_force(const VoxelGrid& obstacle, const ToolAssembly& tool,
                                         const Orientation& R, std::int64_t budget = 100000000) {
    obstacle.validate();
    require_indicator(obstacle, "cmf_brute_force");
    if (tool.sharp_points.empty()) throw ConfigError("cmf_brute_force: empty sharp point set");
    tool.validate();
    R.validate();
    if (R.ndim != obstacle.ndim)
        throw StructuralError("cmf_brute_force: orientation/obstacle ndim mismatch");
    if (tool.occupancy.spacing != obstacle.spacing)
        throw StructuralError("cmf_brute_force: tool and obstacle spacing differ");

    auto pg = detail::place_tool(tool, R, obstacle.spacing);
    const auto& rt = pg.rotated;

    std::int64_t ops = obstacle.n_voxels() * static_cast<std::int64_t>(pg.shifts.size()) *
                       rt.n_voxels();
    if (ops > budget)
        throw ResourceError(
            "cmf_brute_force: placement count exceeds the budget; use the FFT path");

    double denom = tool.tool_measure / voxel_volume(tool.occupancy);
    FieldCrossSection out{R, detail::field_like(obstacle)};
    for (int i = 0; i < obstacle.dims[0]; ++i)
        for (int j = 0; j < obstacle.dims[1]; ++j)
            for (int k = 0; k < obstacle.dims[2]; ++k) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& u : pg.shifts) {
                    std::int64_t overlap = 0;
                    for (int ti = 0; ti < rt.dims[0]; ++ti)
                        for (int tj = 0; tj < rt.dims[1]; ++tj)
                            for (int tk = 0; tk < rt.dims[2]; ++tk) {
                                if (rt.at(ti, tj, tk) == 0.0) continue;
                                std::array<int, 3> o{i - u[0] + ti, j - u[1] + tj, k - u[2] + tk};
                                if (obstacle.in_bounds(o) && obstacle.at(o[0], o[1], o[2]) != 0.0)
                                    ++overlap;
                            }
                    best = std::min(best, static_cast<double>(overlap));
                }
                out.field.at(i, j, k) = clamp01(best / denom);
            }
    return out;
}

/// Pointwise minimum across the stack: the inaccessibility measure for the
/// available orientations.
inline VoxelGrid imf_from_stack(const FieldStack& stack) {
    stack.validate();
    VoxelGrid out = stack.sections.front().field;
    for (std::size_t s = 1; s < stack.sections.size(); ++s) {
        const auto& f = stack.sections[s].field;
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] = std::min(out.data[i], f.data[i]);
    }
    return out;
}

/// One cross-section per orientation, computed independently (parallel when
/// the platform offers threads) and assembled in sorted angle order.
inline FieldStack build_stack(const VoxelGrid& obstacle, const ToolAssembly& tool,
                              std::vector<Orientation> orientations) {
    if (orientations.empty()) throw ConfigError("build_stack: no orientations");
    std::sort(orientations.begin(), orientations.end());
    for (std::size_t i = 1; i < orientations.size(); ++i)
        if (orientations[i] == orientations[i - 1])
            throw ConfigError("build_stack: duplicate orientations");

    FieldStack stack;
    stack.sections.resize(orientations.size());
    parallel_for(static_cast<std::int64_t>(orientations.size()), [&](std::int64_t s) {
        stack.sections[static_cast<std::size_t>(s)] =
            cmf_cross_section(obstacle, tool, orientations[static_cast<std::size_t>(s)]);
    });
    stack.validate();
    return stack;
}

}  // namespace cmfield
