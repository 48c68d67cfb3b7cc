#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "cmfield/tool.hpp"
#include "cmfield/voxel_grid.hpp"

namespace cmfield {
namespace fixtures {

/// Centered disk indicator on an n x n lattice (unit spacing, origin at
/// voxel centers starting from 0.5 so the domain spans [0, n]).
inline VoxelGrid disk_obstacle(int n, double radius_frac = 0.35) {
    VoxelGrid g(2, {n, n, 1}, 1.0, {0.5, 0.5, 0.0});
    double c = 0.5 * n;
    double r = radius_frac * n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double dx = g.origin[0] + i - c;
            double dy = g.origin[1] + j - c;
            g.at(i, j) = (dx * dx + dy * dy <= r * r) ? 1.0 : 0.0;
        }
    return g;
}

/// L-shaped part: two overlapping rectangles leaving a concave corner, the
/// benchmark geometry for angular accessibility structure.
inline VoxelGrid lshape_obstacle(int n) {
    VoxelGrid g(2, {n, n, 1}, 1.0, {0.5, 0.5, 0.0});
    int lo = static_cast<int>(std::lround(0.10 * n));
    int hi = static_cast<int>(std::lround(0.90 * n));
    int mid = static_cast<int>(std::lround(0.45 * n));
    for (int i = lo; i < hi; ++i)
        for (int j = lo; j < mid; ++j) g.at(i, j) = 1.0;
    for (int i = lo; i < mid; ++i)
        for (int j = lo; j < hi; ++j) g.at(i, j) = 1.0;
    return g;
}

/// Solid k x k tool, sharp points on the bottom layer.
inline ToolAssembly square_tool(int k) {
    VoxelGrid g(2, {k, k, 1}, 1.0, {0.5, 0.5, 0.0});
    for (double& v : g.data) v = 1.0;
    return make_tool_tip(std::move(g));
}

/// L-shaped tool: vertical shank with a foot, so rotation changes which
/// concave corners it can enter.
inline ToolAssembly l_tool(int k) {
    int w = std::max(1, (k + 2) / 3);
    VoxelGrid g(2, {k, k, 1}, 1.0, {0.5, 0.5, 0.0});
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < k; ++j) g.at(i, j) = 1.0;  // shank along +y at low x
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < w; ++j) g.at(i, j) = 1.0;  // foot along +x at low y
    return make_tool_tip(std::move(g));
}

/// Deletes a compact block of occupied voxels (a "feature"), at most
/// `max_frac` of the occupied count; returns the perturbed grid. The block
/// grows from the highest-index occupied corner, which keeps the removal
/// localized and deterministic.
inline VoxelGrid remove_feature(const VoxelGrid& g, double max_frac = 0.08) {
    g.validate();
    std::int64_t occ = occupied_count(g);
    std::int64_t budget = static_cast<std::int64_t>(max_frac * static_cast<double>(occ));
    VoxelGrid out = g;
    if (budget < 1) return out;
    std::int64_t removed = 0;
    for (int i = g.dims[0] - 1; i >= 0 && removed < budget; --i)
        for (int j = g.dims[1] - 1; j >= 0 && removed < budget; --j)
            for (int k = g.dims[2] - 1; k >= 0 && removed < budget; --k)
                if (out.at(i, j, k) != 0.0) {
                    out.at(i, j, k) = 0.0;
                    ++removed;
                }
    return out;
}

/// 3D part: a sphere fused with a block, on an n^3 lattice.
inline VoxelGrid sphere_block_obstacle(int n) {
    VoxelGrid g(3, {n, n, n}, 1.0, {0.5, 0.5, 0.5});
    double c = 0.5 * n;
    double r = 0.30 * n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double dx = g.origin[0] + i - c;
                double dy = g.origin[1] + j - c;
                double dz = g.origin[2] + k - c;
                bool in_sphere = dx * dx + dy * dy + dz * dz <= r * r;
                bool in_block = i >= static_cast<int>(0.15 * n) && i < static_cast<int>(0.5 * n) &&
                                j >= static_cast<int>(0.15 * n) && j < static_cast<int>(0.5 * n) &&
                                k >= static_cast<int>(0.15 * n) && k < static_cast<int>(0.45 * n);
                g.at(i, j, k) = (in_sphere || in_block) ? 1.0 : 0.0;
            }
    return g;
}

/// 3D tool: vertical shaft with a side arm near the top, asymmetric in both
/// angles; sharp points on the lowest z layer of the shaft.
inline ToolAssembly elbow_tool(int k) {
    int w = std::max(1, (k + 2) / 3);
    VoxelGrid g(3, {k, k, k}, 1.0, {0.5, 0.5, 0.5});
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j)
            for (int z = 0; z < k; ++z) g.at(i, j, z) = 1.0;  // shaft up +z
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < w; ++j)
            for (int z = k - w; z < k; ++z) g.at(i, j, z) = 1.0;  // arm along +x at top
    return make_tool_tip(std::move(g));
}

}  // namespace fixtures
}  // namespace cmfield
