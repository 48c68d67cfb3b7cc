// Train a small sine network against a coarse stack and report how the
// reconstruction error falls relative to the untrained starting point.

#include <cstdio>

#include "cmfield/cmfield.hpp"

using namespace cmfield;

int main() {
    VoxelGrid part = fixtures::disk_obstacle(24);
    ToolAssembly tool = fixtures::square_tool(5);
    auto orients = equispaced_orientations(12);
    FieldStack truth = build_stack(part, tool, orients);

    NeuralField net = init_network(3, 3, 64, 30.0, 7);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.plan.density = 0.8;
    cfg.plan.seed = 7;
    cfg.seed = 7;

    NeuralField before = net;
    before.norm = normalize_coords(part, 1);
    double err0 = stack_mse(evaluate_field(before, part, orients), truth);

    TrainResult res = train_single_resolution(truth, net, cfg);
    double err1 = stack_mse(evaluate_field(res.net, part, orients), truth);

    std::printf("parameters: %lld\n", static_cast<long long>(res.net.parameter_count()));
    std::printf("stack mse untrained: %.6e\n", err0);
    std::printf("stack mse after %d epochs: %.6e\n", cfg.epochs, err1);
    for (const EpochLog& e : res.log)
        if (e.epoch % 4 == 0 || e.epoch == cfg.epochs - 1)
            std::printf("  epoch %2d  lr %.3e  mean L1 %.6e\n", e.epoch, e.lr, e.mean_loss);
    return 0;
}
