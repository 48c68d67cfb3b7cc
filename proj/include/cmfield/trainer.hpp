#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cmfield/cspace.hpp"
#include "cmfield/interpolation.hpp"
#include "cmfield/neural_field.hpp"
#include "cmfield/sampler.hpp"
#include "cmfield/tool.hpp"

namespace cmfield {

struct TrainConfig {
    int epochs = 50;
    double lr0 = 5e-4;
    double lr_decay_per_epoch = 0.07;
    double weight_decay = 1e-6;
    int batch_size = 1024;
    SamplingPlan plan;
    std::uint64_t seed = 0;
    // pulls exact-0/1 targets to [1e-6, 1-1e-6]; off by default since the
    // sigmoid head never reaches them anyway
    bool clamp_targets = false;

    void validate() const {
        if (epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
        if (!(lr0 > 0.0)) throw ConfigError("TrainConfig: lr0 must be > 0");
        if (lr_decay_per_epoch < 0.0 || lr_decay_per_epoch >= 1.0)
            throw ConfigError("TrainConfig: decay must lie in [0, 1)");
        if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
        plan.validate();
    }
};

/// lr_e = lr0 * (1 - decay)^e, exact.
inline double lr_at(const TrainConfig& cfg, int epoch) {
    return cfg.lr0 * std::pow(1.0 - cfg.lr_decay_per_epoch, static_cast<double>(epoch));
}

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double mean_loss = 0.0;
};

struct TrainResult {
    NeuralField net;
    std::vector<EpochLog> log;
    std::int64_t adam_steps = 0;
    std::vector<std::string> warnings;
};

/// One training run on a fixed stack: samples drawn once, reshuffled every
/// epoch; mini-batches of cfg.batch_size through adam_step with the lr
/// decaying multiplicatively per epoch. `maps` defaults to the stack
/// lattice's normalization; pass the fine-lattice maps when training on
/// coarsened data. `persist` reuses a caller-held Adam state.
inline TrainResult train_single_resolution(const FieldStack& stack, const NeuralField& start,
                                           const TrainConfig& cfg,
                                           const std::vector<CoordMap>* maps = nullptr,
                                           AdamState* persist = nullptr) {
    cfg.validate();
    stack.validate();
    start.validate();
    int n_angles = (stack.sections.front().orientation.ndim == 3) ? 2 : 1;
    const VoxelGrid& lat = stack.sections.front().field;
    if (start.input_dim != lat.ndim + n_angles)
        throw StructuralError("train_single_resolution: input_dim does not match stack");

    TrainResult res;
    res.net = start;
    res.net.norm = maps ? *maps : normalize_coords(lat, n_angles);
    if (cfg.epochs == 0) return res;

    SampleBatch data = draw_samples(stack, cfg.plan, res.net.norm);
    res.warnings = data.warnings;
    if (cfg.clamp_targets)
        data.targets = data.targets.cwiseMax(1e-6).cwiseMin(1.0 - 1e-6);
    std::int64_t n = data.targets.size();

    AdamState local = init_adam(res.net, cfg.lr0, cfg.weight_decay);
    AdamState& adam = persist ? *persist : local;
    adam.weight_decay = cfg.weight_decay;

    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(cfg.seed);

    for (int e = 0; e < cfg.epochs; ++e) {
        adam.lr = lr_at(cfg, e);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double abs_err = 0.0;
        for (std::int64_t lo = 0; lo < n; lo += cfg.batch_size) {
            std::int64_t hi = std::min(n, lo + cfg.batch_size);
            std::int64_t rows = hi - lo;
            Eigen::MatrixXd x(rows, res.net.input_dim);
            Eigen::VectorXd t(rows);
            for (std::int64_t r = 0; r < rows; ++r) {
                std::int64_t src = order[static_cast<std::size_t>(lo + r)];
                x.row(r) = data.coords.row(src);
                t(r) = data.targets(src);
            }
            Gradients g = backward(res.net, x, t);
            if (!std::isfinite(g.loss))
                throw TrainingError("train: non-finite loss at epoch " + std::to_string(e) +
                                    ", batch " + std::to_string(lo / cfg.batch_size));
            adam_step(res.net, g, adam);
            res.adam_steps += 1;
            abs_err += g.loss * static_cast<double>(rows);
        }
        res.log.push_back({e, adam.lr, abs_err / static_cast<double>(n)});
    }
    return res;
}

struct MultiResConfig {
    double coarse_scale = 0.65;
    int coarse_theta = 30;
    int coarse_phi = 30;  // 0 for planar runs
    int coarse_epochs = 20;
    int fine_theta = 15;
    int fine_phi = 15;
    int fine_epochs = 25;
    TrainConfig base;
    bool persist_adam = false;

    void validate() const {
        if (!(coarse_scale > 0.0) || coarse_scale > 1.0)
            throw ConfigError("MultiResConfig: coarse_scale must lie in (0, 1]");
        if (coarse_epochs < 1 || fine_epochs < 1)
            throw ConfigError("MultiResConfig: stage epochs must be >= 1");
        base.validate();
    }
};

struct MultiResResult {
    NeuralField net;
    std::vector<EpochLog> coarse_log;
    std::vector<EpochLog> fine_log;
    std::int64_t adam_steps = 0;
    std::vector<std::string> warnings;
};

/// Coarse-then-fine training: stage 1 rebuilds the geometry at
/// `coarse_scale` (box filter + 0.5 threshold), computes its own stack on
/// more orientations, and trains; stage 2 continues the same parameters on
/// the full-resolution stack. Normalization maps come from the fine lattice
/// so both stages share one world frame. Adam moments reset between stages
/// unless `persist_adam`.
inline MultiResResult train_multi_resolution(const VoxelGrid& obstacle, const ToolAssembly& tool,
                                             const NeuralField& start, const MultiResConfig& mcfg) {
    mcfg.validate();
    obstacle.validate();
    int n_angles = (obstacle.ndim == 3) ? 2 : 1;
    std::vector<CoordMap> maps = normalize_coords(obstacle, n_angles);

    VoxelGrid coarse_obs = binarize(box_downsample(obstacle, mcfg.coarse_scale), 0.5);
    ToolAssembly coarse_tool = downsample_tool(tool, mcfg.coarse_scale);
    FieldStack coarse_stack = build_stack(
        coarse_obs, coarse_tool,
        equispaced_orientations(mcfg.coarse_theta, obstacle.ndim == 3 ? mcfg.coarse_phi : 0));

    TrainConfig cfg1 = mcfg.base;
    cfg1.epochs = mcfg.coarse_epochs;
    AdamState adam = init_adam(start, cfg1.lr0, cfg1.weight_decay);
    TrainResult stage1 = train_single_resolution(coarse_stack, start, cfg1, &maps, &adam);

    FieldStack fine_stack = build_stack(
        obstacle, tool,
        equispaced_orientations(mcfg.fine_theta, obstacle.ndim == 3 ? mcfg.fine_phi : 0));
    TrainConfig cfg2 = mcfg.base;
    cfg2.epochs = mcfg.fine_epochs;
    if (!mcfg.persist_adam) adam = init_adam(stage1.net, cfg2.lr0, cfg2.weight_decay);
    TrainResult stage2 = train_single_resolution(fine_stack, stage1.net, cfg2, &maps, &adam);

    MultiResResult res;
    res.net = std::move(stage2.net);
    res.coarse_log = std::move(stage1.log);
    res.fine_log = std::move(stage2.log);
    res.adam_steps = stage1.adam_steps + stage2.adam_steps;
    res.warnings = std::move(stage1.warnings);
    res.warnings.insert(res.warnings.end(), stage2.warnings.begin(), stage2.warnings.end());
    return res;
}

struct WarmStartConfig {
    double finetune_lr = 1e-4;
    int finetune_epochs = 5;
    TrainConfig base;

    void validate() const {
        if (!(finetune_lr > 0.0)) throw ConfigError("WarmStartConfig: finetune_lr must be > 0");
        if (finetune_epochs < 0) throw ConfigError("WarmStartConfig: finetune_epochs must be >= 0");
        base.validate();
    }
};

/// Transfer to new geometry: continue from the base parameters with a fresh
/// Adam state at the reduced learning rate. The base net's normalization
/// maps carry over so queries stay in the frame it was trained in.
inline TrainResult warm_start_finetune(const FieldStack& stack_new, const NeuralField& base,
                                       const WarmStartConfig& wcfg) {
    wcfg.validate();
    base.validate();
    if (base.norm.empty())
        throw StructuralError("warm_start_finetune: base net carries no normalization maps");
    TrainConfig cfg = wcfg.base;
    cfg.lr0 = wcfg.finetune_lr;
    cfg.epochs = wcfg.finetune_epochs;
    return train_single_resolution(stack_new, base, cfg, &base.norm);
}

struct AblationCell {
    double density = 0.35;
    int width = 512;
    int depth = 5;
};

struct AblationRow {
    AblationCell cell;
    double final_loss = 0.0;
    double mse_imf_train = 0.0;  // IMF error at the training orientations
    double mpe_imf_train = 0.0;
    double mse_imf_dense = 0.0;  // IMF error at a denser out-of-sample set
    double mpe_imf_dense = 0.0;
};

/// Sweeps sampling density and architecture over one geometry, reporting
/// IMF errors against ground truth at the training orientation set and at a
/// denser evaluation set.
inline std::vector<AblationRow> ablation_run(const VoxelGrid& obstacle, const ToolAssembly& tool,
                                             const std::vector<AblationCell>& cells,
                                             const TrainConfig& base,
                                             const std::vector<Orientation>& train_orients,
                                             const std::vector<Orientation>& dense_orients,
                                             double omega0, std::uint64_t init_seed,
                                             int skip_at = 2) {
    if (cells.empty()) throw ConfigError("ablation_run: empty grid");
    int n_angles = (obstacle.ndim == 3) ? 2 : 1;
    FieldStack train_stack = build_stack(obstacle, tool, train_orients);
    FieldStack dense_stack = build_stack(obstacle, tool, dense_orients);
    VoxelGrid imf_train = imf_from_stack(train_stack);
    VoxelGrid imf_dense = imf_from_stack(dense_stack);

    std::vector<AblationRow> rows;
    for (const AblationCell& cell : cells) {
        TrainConfig cfg = base;
        cfg.plan.density = cell.density;
        int sk = std::min(skip_at, cell.depth);
        NeuralField net =
            init_network(obstacle.ndim + n_angles, cell.depth, cell.width, omega0, init_seed, sk);
        TrainResult tr = train_single_resolution(train_stack, net, cfg);
        AblationRow row;
        row.cell = cell;
        row.final_loss = tr.log.empty() ? 0.0 : tr.log.back().mean_loss;
        FieldStack pred_train = evaluate_field(tr.net, obstacle, train_orients);
        FieldStack pred_dense = evaluate_field(tr.net, obstacle, dense_orients);
        VoxelGrid pimf_train = imf_from_stack(pred_train);
        VoxelGrid pimf_dense = imf_from_stack(pred_dense);
        row.mse_imf_train = mse(pimf_train, imf_train);
        row.mpe_imf_train = mpe(pimf_train, imf_train);
        row.mse_imf_dense = mse(pimf_dense, imf_dense);
        row.mpe_imf_dense = mpe(pimf_dense, imf_dense);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace cmfield
