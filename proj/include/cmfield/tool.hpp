#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "cmfield/voxel_grid.hpp"

namespace cmfield {

/// Cutting tool: occupancy indicator plus the designated sharp-point voxels
/// that serve as translation references, and the tool measure (occupied
/// count times voxel volume).
struct ToolAssembly {
    VoxelGrid occupancy;
    std::vector<std::array<int, 3>> sharp_points;
    double tool_measure = 0.0;

    void validate() const {
        occupancy.validate();
        require_indicator(occupancy, "ToolAssembly");
        if (sharp_points.empty()) throw StructuralError("ToolAssembly: sharp point set is empty");
        for (const auto& k : sharp_points) {
            if (!occupancy.in_bounds(k))
                throw StructuralError("ToolAssembly: sharp point outside occupancy grid");
            if (occupancy.at(k[0], k[1], k[2]) == 0.0)
                throw StructuralError("ToolAssembly: sharp point in an unoccupied voxel");
        }
        if (!(tool_measure > 0.0)) throw StructuralError("ToolAssembly: tool_measure must be > 0");
    }
};

inline double voxel_volume(const VoxelGrid& g) {
    double v = 1.0;
    for (int a = 0; a < g.ndim; ++a) v *= g.spacing;
    return v;
}

inline ToolAssembly make_tool(VoxelGrid occupancy, std::vector<std::array<int, 3>> sharp) {
    ToolAssembly t;
    t.occupancy = std::move(occupancy);
    t.sharp_points = std::move(sharp);
    t.tool_measure = static_cast<double>(occupied_count(t.occupancy)) * voxel_volume(t.occupancy);
    t.validate();
    return t;
}

/// All occupied voxels in the lowest occupied layer along the last axis:
/// the tip of a tool modeled with its axis vertical.
inline std::vector<std::array<int, 3>> tip_sharp_points(const VoxelGrid& occupancy) {
    occupancy.validate();
    int axis = occupancy.ndim - 1;
    int lowest = std::numeric_limits<int>::max();
    for (int i = 0; i < occupancy.dims[0]; ++i)
        for (int j = 0; j < occupancy.dims[1]; ++j)
            for (int k = 0; k < occupancy.dims[2]; ++k)
                if (occupancy.at(i, j, k) != 0.0) {
                    int c = (axis == 0) ? i : (axis == 1) ? j : k;
                    lowest = std::min(lowest, c);
                }
    if (lowest == std::numeric_limits<int>::max())
        throw StructuralError("tip_sharp_points: occupancy grid is empty");
    std::vector<std::array<int, 3>> out;
    for (int i = 0; i < occupancy.dims[0]; ++i)
        for (int j = 0; j < occupancy.dims[1]; ++j)
            for (int k = 0; k < occupancy.dims[2]; ++k) {
                int c = (axis == 0) ? i : (axis == 1) ? j : k;
                if (c == lowest && occupancy.at(i, j, k) != 0.0) out.push_back({i, j, k});
            }
    return out;
}

inline ToolAssembly make_tool_tip(VoxelGrid occupancy) {
    auto sharp = tip_sharp_points(occupancy);
    return make_tool(std::move(occupancy), std::move(sharp));
}

/// Coarse version of a tool for multi-resolution pipelines: box-filtered
/// occupancy thresholded at 0.5, sharp points snapped to the nearest
/// occupied coarse voxel of each original sharp point's world position.
inline ToolAssembly downsample_tool(const ToolAssembly& tool, double scale) {
    tool.validate();
    VoxelGrid coarse = binarize(box_downsample(tool.occupancy, scale), 0.5);
    if (occupied_count(coarse) == 0)
        throw StructuralError("downsample_tool: coarse occupancy is empty at this scale");
    std::vector<std::array<int, 3>> sharp;
    for (const auto& k : tool.sharp_points) {
        auto w = tool.occupancy.center(k);
        double best = std::numeric_limits<double>::infinity();
        std::array<int, 3> pick{0, 0, 0};
        for (int i = 0; i < coarse.dims[0]; ++i)
            for (int j = 0; j < coarse.dims[1]; ++j)
                for (int kk = 0; kk < coarse.dims[2]; ++kk) {
                    if (coarse.at(i, j, kk) == 0.0) continue;
                    auto c = coarse.center({i, j, kk});
                    double d2 = 0.0;
                    for (int a = 0; a < coarse.ndim; ++a) d2 += (c[a] - w[a]) * (c[a] - w[a]);
                    if (d2 < best) {
                        best = d2;
                        pick = {i, j, kk};
                    }
                }
        bool dup = false;
        for (const auto& s : sharp) dup = dup || (s == pick);
        if (!dup) sharp.push_back(pick);
    }
    return make_tool(std::move(coarse), std::move(sharp));
}

}  // namespace cmfield
