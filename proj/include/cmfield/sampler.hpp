#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cmfield/cspace.hpp"
#include "cmfield/neural_field.hpp"

namespace cmfield {

/// Per-axis affine maps onto [0,1] for a design lattice: spatial axes span
/// the voxel-boundary extent of the lattice (centers land strictly inside),
/// theta spans [0,360), phi spans [0,180]. `n_angles` is 1 for planar
/// orientations, 2 for spherical.
inline std::vector<CoordMap> normalize_coords(const VoxelGrid& lattice, int n_angles) {
    lattice.validate();
    if (n_angles != 1 && n_angles != 2) throw ConfigError("normalize_coords: n_angles must be 1 or 2");
    std::vector<CoordMap> maps;
    for (int a = 0; a < lattice.ndim; ++a) {
        double lo = lattice.origin[a] - 0.5 * lattice.spacing;
        double hi = lattice.origin[a] + (lattice.dims[a] - 0.5) * lattice.spacing;
        if (!(hi > lo)) throw ConfigError("normalize_coords: degenerate axis extent");
        maps.push_back({lo, hi});
    }
    maps.push_back({0.0, 360.0});
    if (n_angles == 2) maps.push_back({0.0, 180.0});
    return maps;
}

/// Biased sub-sampling recipe: keep `density` of each section's voxels,
/// `positive_fraction` of them from strictly positive values. With
/// `wrap_theta`, rows drawn from 0-degree sections are emitted a second
/// time at the far end of the normalized theta axis, closing the periodic
/// range for networks that cannot wrap on their own.
struct SamplingPlan {
    double density = 0.35;
    double positive_fraction = 0.75;
    std::uint64_t seed = 0;
    bool wrap_theta = false;

    void validate() const {
        if (!(density > 0.0) || density > 1.0)
            throw ConfigError("SamplingPlan: density must lie in (0, 1]");
        if (positive_fraction < 0.0 || positive_fraction > 1.0)
            throw ConfigError("SamplingPlan: positive_fraction must lie in [0, 1]");
    }
};

struct SampleBatch {
    Eigen::MatrixXd coords;                             // rows in [0,1]^input_dim
    Eigen::VectorXd targets;                            // values in [0,1]
    std::vector<std::pair<int, std::int64_t>> provenance;  // (section, voxel)
    std::vector<std::string> warnings;
};

/// Draws training samples from a stack: per section, uniform draws without
/// replacement from the positive set and the zero set in the plan's split,
/// totaling floor(density * voxel count) rows. Positive shortfall is filled
/// from zeros (and vice versa) with a warning. Deterministic in the seed;
/// sections use derived seeds so they are order-independent.
inline SampleBatch draw_samples(const FieldStack& stack, const SamplingPlan& plan,
                                const std::vector<CoordMap>& maps) {
    stack.validate();
    plan.validate();
    const VoxelGrid& lat = stack.sections.front().field;
    int n_angles = (stack.sections.front().orientation.ndim == 3) ? 2 : 1;
    int input_dim = lat.ndim + n_angles;
    if (static_cast<int>(maps.size()) != input_dim)
        throw StructuralError("draw_samples: normalization map count mismatch");

    std::int64_t n_vox = lat.n_voxels();
    std::int64_t per_section = static_cast<std::int64_t>(plan.density * static_cast<double>(n_vox));
    if (per_section < 1) per_section = 1;

    std::int64_t n_wrapped = 0;
    if (plan.wrap_theta)
        for (const FieldCrossSection& sec : stack.sections)
            if (sec.orientation.theta_deg == 0.0) ++n_wrapped;

    SampleBatch batch;
    std::int64_t total = per_section * (static_cast<std::int64_t>(stack.sections.size()) + n_wrapped);
    batch.coords.resize(total, input_dim);
    batch.targets.resize(total);
    batch.provenance.reserve(static_cast<std::size_t>(total));

    std::vector<std::int64_t> pos, zer;
    std::int64_t row = 0;
    for (std::size_t s = 0; s < stack.sections.size(); ++s) {
        const FieldCrossSection& sec = stack.sections[s];
        pos.clear();
        zer.clear();
        for (std::int64_t v = 0; v < n_vox; ++v)
            (sec.field.data[static_cast<std::size_t>(v)] > 0.0 ? pos : zer).push_back(v);

        std::int64_t want_pos =
            static_cast<std::int64_t>(std::llround(plan.positive_fraction * static_cast<double>(per_section)));
        std::int64_t want_zer = per_section - want_pos;
        if (want_pos > static_cast<std::int64_t>(pos.size())) {
            batch.warnings.push_back("section " + std::to_string(s) + ": positive quota " +
                                     std::to_string(want_pos) + " exceeds available " +
                                     std::to_string(pos.size()) + "; filled from zeros");
            want_zer += want_pos - static_cast<std::int64_t>(pos.size());
            want_pos = static_cast<std::int64_t>(pos.size());
        }
        if (want_zer > static_cast<std::int64_t>(zer.size())) {
            batch.warnings.push_back("section " + std::to_string(s) + ": zero quota " +
                                     std::to_string(want_zer) + " exceeds available " +
                                     std::to_string(zer.size()) + "; filled from positives");
            want_pos += want_zer - static_cast<std::int64_t>(zer.size());
            want_zer = static_cast<std::int64_t>(zer.size());
            if (want_pos > static_cast<std::int64_t>(pos.size()))
                throw ConfigError("draw_samples: density exceeds section voxel count");
        }

        std::mt19937_64 rng(plan.seed ^ static_cast<std::uint64_t>(s));
        std::shuffle(pos.begin(), pos.end(), rng);
        std::shuffle(zer.begin(), zer.end(), rng);

        auto emit = [&](std::int64_t v, double theta_norm) {
            std::array<int, 3> idx{};
            std::int64_t rem = v;
            idx[2] = static_cast<int>(rem % lat.dims[2]);
            rem /= lat.dims[2];
            idx[1] = static_cast<int>(rem % lat.dims[1]);
            idx[0] = static_cast<int>(rem / lat.dims[1]);
            auto c = lat.center(idx);
            for (int a = 0; a < lat.ndim; ++a)
                batch.coords(row, a) = maps[static_cast<std::size_t>(a)].apply(c[a]);
            batch.coords(row, lat.ndim) = theta_norm;
            if (n_angles == 2)
                batch.coords(row, lat.ndim + 1) =
                    maps[static_cast<std::size_t>(lat.ndim) + 1].apply(sec.orientation.phi_deg);
            batch.targets(row) = sec.field.data[static_cast<std::size_t>(v)];
            batch.provenance.emplace_back(static_cast<int>(s), v);
            ++row;
        };
        double th = maps[static_cast<std::size_t>(lat.ndim)].apply(sec.orientation.theta_deg);
        for (std::int64_t i = 0; i < want_pos; ++i) emit(pos[static_cast<std::size_t>(i)], th);
        for (std::int64_t i = 0; i < want_zer; ++i) emit(zer[static_cast<std::size_t>(i)], th);
        if (plan.wrap_theta && sec.orientation.theta_deg == 0.0) {
            for (std::int64_t i = 0; i < want_pos; ++i) emit(pos[static_cast<std::size_t>(i)], 1.0);
            for (std::int64_t i = 0; i < want_zer; ++i) emit(zer[static_cast<std::size_t>(i)], 1.0);
        }
    }
    return batch;
}

}  // namespace cmfield
