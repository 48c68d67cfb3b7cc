#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cmfield/common.hpp"
#include "cmfield/cspace.hpp"
#include "cmfield/orientation.hpp"
#include "cmfield/voxel_grid.hpp"

namespace cmfield {

/// Affine map from one input axis onto [0,1]: u = (x - lo) / (hi - lo).
struct CoordMap {
    double lo = 0.0;
    double hi = 1.0;

    double apply(double x) const { return (x - lo) / (hi - lo); }
    double invert(double u) const { return lo + u * (hi - lo); }
};

/// Fully connected field network: sine hidden layers sin(omega0*(Wx+b)),
/// one input-skip concatenation, sigmoid output. Layer l consumes the
/// previous activation; the layer after hidden layer `skip_at` (1-based)
/// additionally sees the raw input appended to its input.
struct NeuralField {
    int input_dim = 5;
    int hidden_layers = 5;
    int hidden_width = 512;
    int skip_at = 2;
    double omega0 = 30.0;
    std::vector<Eigen::MatrixXd> weights;  // hidden_layers + 1 entries, output last
    std::vector<Eigen::VectorXd> biases;
    std::vector<CoordMap> norm;            // one per input axis

    int layer_in_width(int l) const {
        if (l == 0) return input_dim;
        int w = hidden_width;
        if (l == skip_at) w += input_dim;
        return w;
    }

    int layer_out_width(int l) const { return (l == hidden_layers) ? 1 : hidden_width; }

    std::int64_t parameter_count() const {
        std::int64_t n = 0;
        for (int l = 0; l <= hidden_layers; ++l)
            n += static_cast<std::int64_t>(layer_out_width(l)) * layer_in_width(l) +
                 layer_out_width(l);
        return n;
    }

    void validate() const {
        if (input_dim < 1) throw StructuralError("NeuralField: input_dim must be >= 1");
        if (hidden_layers < 1) throw StructuralError("NeuralField: need at least one hidden layer");
        if (hidden_width < 1) throw StructuralError("NeuralField: hidden_width must be >= 1");
        if (skip_at < 1 || skip_at > hidden_layers)
            throw StructuralError("NeuralField: skip_at out of range");
        if (!(omega0 > 0.0)) throw StructuralError("NeuralField: omega0 must be > 0");
        if (static_cast<int>(weights.size()) != hidden_layers + 1 ||
            biases.size() != weights.size())
            throw StructuralError("NeuralField: layer count mismatch");
        for (int l = 0; l <= hidden_layers; ++l) {
            if (weights[static_cast<std::size_t>(l)].rows() != layer_out_width(l) ||
                weights[static_cast<std::size_t>(l)].cols() != layer_in_width(l))
                throw StructuralError("NeuralField: weight shape broken at layer " +
                                      std::to_string(l));
            if (biases[static_cast<std::size_t>(l)].size() != layer_out_width(l))
                throw StructuralError("NeuralField: bias shape broken at layer " +
                                      std::to_string(l));
            if (!weights[static_cast<std::size_t>(l)].allFinite() ||
                !biases[static_cast<std::size_t>(l)].allFinite())
                throw StructuralError("NeuralField: non-finite parameters at layer " +
                                      std::to_string(l));
        }
        if (!norm.empty() && static_cast<int>(norm.size()) != input_dim)
            throw StructuralError("NeuralField: normalization map count mismatch");
    }
};

/// Sine-network initialization: first layer uniform in [-1/d, 1/d], deeper
/// layers uniform in [-sqrt(6/fan_in)/omega0, +sqrt(6/fan_in)/omega0],
/// biases zero. Deterministic in the seed.
inline NeuralField init_network(int input_dim, int hidden_layers, int hidden_width, double omega0,
                                std::uint64_t seed, int skip_at = 2) {
    NeuralField net;
    net.input_dim = input_dim;
    net.hidden_layers = hidden_layers;
    net.hidden_width = hidden_width;
    net.skip_at = skip_at;
    net.omega0 = omega0;
    if (input_dim < 1 || hidden_layers < 1 || hidden_width < 1)
        throw ConfigError("init_network: dims must be >= 1");
    if (!(omega0 > 0.0)) throw ConfigError("init_network: omega0 must be > 0");
    if (skip_at < 1 || skip_at > hidden_layers) throw ConfigError("init_network: skip_at out of range");

    std::mt19937_64 rng(seed);
    for (int l = 0; l <= net.hidden_layers; ++l) {
        int rows = net.layer_out_width(l);
        int cols = net.layer_in_width(l);
        double bound = (l == 0) ? 1.0 / input_dim : std::sqrt(6.0 / cols) / omega0;
        std::uniform_real_distribution<double> dist(-bound, bound);
        Eigen::MatrixXd W(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) W(r, c) = dist(rng);
        net.weights.push_back(std::move(W));
        net.biases.push_back(Eigen::VectorXd::Zero(rows));
    }
    net.validate();
    return net;
}

/// Forward pass intermediates kept for backpropagation. inputs[l] is the
/// matrix fed to layer l (rows = batch); z[l] its pre-activation.
struct ForwardTrace {
    std::vector<Eigen::MatrixXd> inputs;
    std::vector<Eigen::MatrixXd> z;
    Eigen::VectorXd output;
    bool saw_out_of_unit_cube = false;
};

inline ForwardTrace forward_trace(const NeuralField& net, const Eigen::MatrixXd& batch) {
    if (batch.cols() != net.input_dim)
        throw StructuralError("forward: batch width does not match input_dim");
    ForwardTrace t;
    t.saw_out_of_unit_cube = (batch.array() < 0.0).any() || (batch.array() > 1.0).any();
    Eigen::MatrixXd a = batch;
    for (int l = 0; l <= net.hidden_layers; ++l) {
        Eigen::MatrixXd in;
        if (l == net.skip_at) {
            in.resize(a.rows(), a.cols() + batch.cols());
            in << a, batch;
        } else {
            in = a;
        }
        Eigen::MatrixXd z = (in * net.weights[static_cast<std::size_t>(l)].transpose()).rowwise() +
                            net.biases[static_cast<std::size_t>(l)].transpose();
        t.inputs.push_back(std::move(in));
        if (l < net.hidden_layers)
            a = (net.omega0 * z.array()).sin().matrix();
        t.z.push_back(std::move(z));
    }
    const Eigen::MatrixXd& zf = t.z.back();
    t.output = (1.0 / (1.0 + (-zf.array()).exp())).matrix().col(0);
    return t;
}

/// Batch evaluation; rows of `batch` are coordinates in the unit hypercube.
inline Eigen::VectorXd forward(const NeuralField& net, const Eigen::MatrixXd& batch) {
    return forward_trace(net, batch).output;
}

inline double loss_l1(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
    if (pred.size() != target.size()) throw StructuralError("loss_l1: length mismatch");
    if (pred.size() == 0) throw StructuralError("loss_l1: empty batch");
    return (pred - target).array().abs().mean();
}

struct Gradients {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;
    double loss = 0.0;
};

/// Exact reverse-mode gradients of the mean L1 loss; the |.| subgradient at
/// 0 is taken as 0.
inline Gradients backward(const NeuralField& net, const Eigen::MatrixXd& batch,
                          const Eigen::VectorXd& target) {
    if (batch.rows() != target.size())
        throw StructuralError("backward: batch/target row mismatch");
    ForwardTrace t = forward_trace(net, batch);

    Gradients g;
    g.dW.resize(static_cast<std::size_t>(net.hidden_layers) + 1);
    g.db.resize(static_cast<std::size_t>(net.hidden_layers) + 1);
    g.loss = loss_l1(t.output, target);

    Eigen::ArrayXd diff = (t.output - target).array();
    Eigen::ArrayXd sgn = diff.sign();  // sign(0) = 0
    double inv_n = 1.0 / static_cast<double>(batch.rows());
    // d loss / d z_out through the sigmoid
    Eigen::MatrixXd dz =
        (sgn * inv_n * t.output.array() * (1.0 - t.output.array())).matrix();

    for (int l = net.hidden_layers; l >= 0; --l) {
        const Eigen::MatrixXd& in = t.inputs[static_cast<std::size_t>(l)];
        g.dW[static_cast<std::size_t>(l)] = dz.transpose() * in;
        g.db[static_cast<std::size_t>(l)] = dz.colwise().sum().transpose();
        if (l == 0) break;
        Eigen::MatrixXd din = dz * net.weights[static_cast<std::size_t>(l)];
        if (l == net.skip_at) din = din.leftCols(net.hidden_width).eval();
        // through sin(omega0 * z) of the previous layer
        dz = (din.array() *
              (net.omega0 * (net.omega0 * t.z[static_cast<std::size_t>(l - 1)].array()).cos()))
                 .matrix();
    }
    return g;
}

/// Adam with decoupled weight decay. The learning rate lives here so the
/// epoch loop can decay it in place.
struct AdamState {
    std::int64_t step = 0;
    std::vector<Eigen::MatrixXd> mW, vW;
    std::vector<Eigen::VectorXd> mb, vb;
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-6;
};

inline AdamState init_adam(const NeuralField& net, double lr, double weight_decay = 1e-6) {
    AdamState s;
    s.lr = lr;
    s.weight_decay = weight_decay;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        s.mW.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        s.vW.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        s.mb.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
        s.vb.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    }
    return s;
}

inline void adam_step(NeuralField& net, const Gradients& g, AdamState& s) {
    if (s.mW.size() != net.weights.size())
        throw StructuralError("adam_step: state does not match network");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        if (!g.dW[l].allFinite())
            throw TrainingError("adam_step: non-finite gradient in layer " + std::to_string(l) +
                                " weights");
        if (!g.db[l].allFinite())
            throw TrainingError("adam_step: non-finite gradient in layer " + std::to_string(l) +
                                " biases");
    }
    s.step += 1;
    double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        s.mW[l] = s.beta1 * s.mW[l] + (1.0 - s.beta1) * g.dW[l];
        s.vW[l] = (s.beta2 * s.vW[l].array() + (1.0 - s.beta2) * g.dW[l].array().square()).matrix();
        Eigen::ArrayXXd mhat = s.mW[l].array() / c1;
        Eigen::ArrayXXd vhat = s.vW[l].array() / c2;
        net.weights[l].array() -= s.lr * mhat / (vhat.sqrt() + s.eps);
        net.weights[l] *= (1.0 - s.lr * s.weight_decay);

        s.mb[l] = s.beta1 * s.mb[l] + (1.0 - s.beta1) * g.db[l];
        s.vb[l] = (s.beta2 * s.vb[l].array() + (1.0 - s.beta2) * g.db[l].array().square()).matrix();
        Eigen::ArrayXd mbh = s.mb[l].array() / c1;
        Eigen::ArrayXd vbh = s.vb[l].array() / c2;
        net.biases[l].array() -= s.lr * mbh / (vbh.sqrt() + s.eps);
        net.biases[l] *= (1.0 - s.lr * s.weight_decay);
    }
}

struct EvalStats {
    std::int64_t forward_passes = 0;
};

/// Builds the normalized (coords-in-unit-cube) input row for one voxel
/// center and orientation using the network's stored maps.
inline void fill_input_row(const NeuralField& net, const VoxelGrid& lattice,
                           const std::array<int, 3>& idx, const Orientation& o,
                           Eigen::MatrixXd& batch, Eigen::Index row) {
    auto c = lattice.center(idx);
    for (int a = 0; a < lattice.ndim; ++a)
        batch(row, a) = net.norm[static_cast<std::size_t>(a)].apply(c[a]);
    batch(row, lattice.ndim) = net.norm[static_cast<std::size_t>(lattice.ndim)].apply(o.theta_deg);
    if (o.ndim == 3)
        batch(row, lattice.ndim + 1) =
            net.norm[static_cast<std::size_t>(lattice.ndim) + 1].apply(o.phi_deg);
}

/// Queries the network at every voxel center of the lattice for each
/// orientation; one cross-section per orientation, sorted.
inline FieldStack evaluate_field(const NeuralField& net, const VoxelGrid& lattice,
                                 std::vector<Orientation> orientations,
                                 EvalStats* stats = nullptr) {
    net.validate();
    lattice.validate();
    if (orientations.empty()) throw ConfigError("evaluate_field: no orientations");
    int n_angles = (orientations.front().ndim == 3) ? 2 : 1;
    if (net.input_dim != lattice.ndim + n_angles)
        throw StructuralError("evaluate_field: input_dim does not match lattice + angles");
    if (static_cast<int>(net.norm.size()) != net.input_dim)
        throw StructuralError("evaluate_field: network carries no normalization maps");
    std::sort(orientations.begin(), orientations.end());

    FieldStack stack;
    std::int64_t n = lattice.n_voxels();
    for (const Orientation& o : orientations) {
        Eigen::MatrixXd batch(n, net.input_dim);
        std::int64_t r = 0;
        for (int i = 0; i < lattice.dims[0]; ++i)
            for (int j = 0; j < lattice.dims[1]; ++j)
                for (int k = 0; k < lattice.dims[2]; ++k)
                    fill_input_row(net, lattice, {i, j, k}, o, batch, r++);
        Eigen::VectorXd y = forward(net, batch);
        if (stats) stats->forward_passes += n;
        FieldCrossSection sec;
        sec.orientation = o;
        sec.field = lattice;
        for (std::int64_t i = 0; i < n; ++i) sec.field.data[static_cast<std::size_t>(i)] = y(i);
        stack.sections.push_back(std::move(sec));
    }
    return stack;
}

}  // namespace cmfield
