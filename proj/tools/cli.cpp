#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmfield/cmfield.hpp"

namespace fs = std::filesystem;
using namespace cmfield;

namespace {

std::vector<std::array<int, 3>> parse_sharp_specs(const std::vector<std::string>& specs,
                                                  const VoxelGrid& occupancy) {
    if (specs.empty() || (specs.size() == 1 && specs[0] == "tip"))
        return tip_sharp_points(occupancy);
    std::vector<std::array<int, 3>> out;
    for (const std::string& s : specs) {
        if (s == "tip") throw ConfigError("--sharp: mix of 'tip' and explicit voxels");
        std::array<int, 3> v{0, 0, 0};
        int n = 0;
        std::size_t pos = 0;
        while (pos < s.size() && n < 3) {
            std::size_t comma = s.find(',', pos);
            std::string part = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                v[n++] = std::stoi(part);
            } catch (const std::exception&) {
                throw ConfigError("--sharp: bad voxel index '" + s + "'");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (n != occupancy.ndim) throw ConfigError("--sharp: expected " +
                                                   std::to_string(occupancy.ndim) +
                                                   " indices in '" + s + "'");
        out.push_back(v);
    }
    return out;
}

ToolAssembly load_tool(const std::string& path, const std::vector<std::string>& sharp_specs) {
    VoxelGrid occ = read_voxf(path);
    require_indicator(occ, "tool occupancy");
    auto sharp = parse_sharp_specs(sharp_specs, occ);
    return make_tool(std::move(occ), std::move(sharp));
}

std::vector<Orientation> make_orientations(int theta_count, int phi_count, bool closed, int ndim) {
    if (ndim == 3) {
        if (closed) throw ConfigError("--closed applies to planar angle grids only");
        return equispaced_orientations(theta_count, phi_count);
    }
    if (!closed) return equispaced_orientations(theta_count);
    std::vector<Orientation> out;
    for (double a : periodic_knot_angles(theta_count)) out.push_back(Orientation::planar(a));
    return out;
}

VoxelGrid load_obstacle(const std::string& part_path, const std::string& fixtures_path) {
    ObstacleSet obs;
    obs.part = read_voxf(part_path);
    require_indicator(obs.part, "obstacle");
    if (!fixtures_path.empty()) {
        obs.fixtures = read_voxf(fixtures_path);
        require_indicator(*obs.fixtures, "fixtures");
    }
    return union_obstacle(obs);
}

struct KvConfig {
    std::map<std::string, std::string> kv;
    mutable std::map<std::string, bool> used;

    bool has(const std::string& k) const { return kv.count(k) > 0; }
    std::string str(const std::string& k, const std::string& dflt) const {
        used[k] = true;
        auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    }
    std::string require(const std::string& k) const {
        used[k] = true;
        auto it = kv.find(k);
        if (it == kv.end()) throw ConfigError("config: missing required key '" + k + "'");
        return it->second;
    }
    double num(const std::string& k, double dflt) const {
        used[k] = true;
        auto it = kv.find(k);
        if (it == kv.end()) return dflt;
        try {
            return std::stod(it->second);
        } catch (const std::exception&) {
            throw ConfigError("config: bad number for '" + k + "'");
        }
    }
    long long integer(const std::string& k, long long dflt) const {
        used[k] = true;
        auto it = kv.find(k);
        if (it == kv.end()) return dflt;
        try {
            return std::stoll(it->second);
        } catch (const std::exception&) {
            throw ConfigError("config: bad integer for '" + k + "'");
        }
    }
    bool flag(const std::string& k, bool dflt) const {
        used[k] = true;
        auto it = kv.find(k);
        if (it == kv.end()) return dflt;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("config: bad boolean for '" + k + "' (use true/false)");
    }
    void reject_unknown() const {
        for (const auto& [k, v] : kv)
            if (!used.count(k)) throw ConfigError("config: unknown key '" + k + "'");
    }
};

struct CommonRun {
    VoxelGrid obstacle;
    ToolAssembly tool;
    TrainConfig tcfg;
    int theta_count = 36;
    int phi_count = 0;
    bool closed = true;
    int hidden_layers = 5;
    int hidden_width = 512;
    int skip_at = 2;
    double omega0 = 30.0;
    std::uint64_t seed = 0;
    std::string out_dir;
};

CommonRun load_common(const KvConfig& cfg) {
    CommonRun r;
    r.obstacle = load_obstacle(cfg.require("obstacle"), cfg.str("fixtures", ""));
    std::vector<std::string> sharp;
    {
        std::string s = cfg.str("sharp", "tip");
        std::size_t pos = 0;
        while (pos <= s.size()) {
            std::size_t semi = s.find(';', pos);
            std::string part = s.substr(pos, semi == std::string::npos ? std::string::npos : semi - pos);
            if (!part.empty()) sharp.push_back(part);
            if (semi == std::string::npos) break;
            pos = semi + 1;
        }
    }
    r.tool = load_tool(cfg.require("tool"), sharp);
    r.theta_count = static_cast<int>(cfg.integer("theta_count", r.obstacle.ndim == 3 ? 15 : 36));
    r.phi_count = static_cast<int>(cfg.integer("phi_count", r.obstacle.ndim == 3 ? 15 : 0));
    r.closed = cfg.flag("closed_grid", r.obstacle.ndim == 2);
    r.seed = static_cast<std::uint64_t>(cfg.integer("seed", 0));
    r.tcfg.epochs = static_cast<int>(cfg.integer("epochs", 50));
    r.tcfg.lr0 = cfg.num("lr0", 5e-4);
    r.tcfg.lr_decay_per_epoch = cfg.num("lr_decay", 0.07);
    r.tcfg.weight_decay = cfg.num("weight_decay", 1e-6);
    r.tcfg.batch_size = static_cast<int>(cfg.integer("batch_size", 1024));
    r.tcfg.plan.density = cfg.num("density", 0.35);
    r.tcfg.plan.positive_fraction = cfg.num("positive_fraction", 0.75);
    r.tcfg.plan.wrap_theta = cfg.flag("wrap_theta", false);
    r.tcfg.plan.seed = r.seed;
    r.tcfg.seed = r.seed;
    r.tcfg.clamp_targets = cfg.flag("clamp_targets", false);
    r.hidden_layers = static_cast<int>(cfg.integer("hidden_layers", 5));
    r.hidden_width = static_cast<int>(cfg.integer("hidden_width", 512));
    r.skip_at = static_cast<int>(cfg.integer("skip_at", 2));
    r.omega0 = cfg.num("omega0", 30.0);
    r.out_dir = cfg.require("out_dir");
    return r;
}

void write_loss_log(const std::string& path, const std::vector<std::pair<std::string, std::string>>& resolved,
                    const std::vector<EpochLog>& log, const std::string& stage = "") {
    std::ofstream out(path, stage.empty() ? std::ios::trunc : std::ios::app);
    if (!out) throw FormatError("cannot open log file " + path);
    out << "# cmfield loss log" << (stage.empty() ? "" : " [" + stage + "]") << "\n";
    for (const auto& [k, v] : resolved) out << "# " << k << " = " << v << "\n";
    out << "# columns: epoch\tlr\tmean_l1\n";
    char buf[96];
    for (const EpochLog& e : log) {
        std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\n", e.epoch, e.lr, e.mean_loss);
        out << buf;
    }
}

std::vector<std::pair<std::string, std::string>> resolved_config(const CommonRun& r) {
    auto d = [](double v) {
        char b[48];
        std::snprintf(b, sizeof(b), "%.17g", v);
        return std::string(b);
    };
    return {{"epochs", std::to_string(r.tcfg.epochs)},
            {"lr0", d(r.tcfg.lr0)},
            {"lr_decay", d(r.tcfg.lr_decay_per_epoch)},
            {"weight_decay", d(r.tcfg.weight_decay)},
            {"batch_size", std::to_string(r.tcfg.batch_size)},
            {"density", d(r.tcfg.plan.density)},
            {"positive_fraction", d(r.tcfg.plan.positive_fraction)},
            {"wrap_theta", r.tcfg.plan.wrap_theta ? "true" : "false"},
            {"clamp_targets", r.tcfg.clamp_targets ? "true" : "false"},
            {"seed", std::to_string(r.seed)},
            {"theta_count", std::to_string(r.theta_count)},
            {"phi_count", std::to_string(r.phi_count)},
            {"closed_grid", r.closed ? "true" : "false"},
            {"hidden_layers", std::to_string(r.hidden_layers)},
            {"hidden_width", std::to_string(r.hidden_width)},
            {"skip_at", std::to_string(r.skip_at)},
            {"omega0", d(r.omega0)}};
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_gen_fixture(const std::string& kind, int n, const std::string& out) {
    VoxelGrid g;
    if (kind == "disk")
        g = fixtures::disk_obstacle(n);
    else if (kind == "lshape")
        g = fixtures::lshape_obstacle(n);
    else if (kind == "lshape-cut")
        g = fixtures::remove_feature(fixtures::lshape_obstacle(n), 0.08);
    else if (kind == "sphere-block")
        g = fixtures::sphere_block_obstacle(n);
    else if (kind == "square-tool")
        g = fixtures::square_tool(n).occupancy;
    else if (kind == "l-tool")
        g = fixtures::l_tool(n).occupancy;
    else if (kind == "elbow-tool")
        g = fixtures::elbow_tool(n).occupancy;
    else
        throw ConfigError("gen-fixture: unknown kind '" + kind + "'");
    write_voxf(out, g, "u8");
    std::cout << "wrote " << out << " (" << g.ndim << "D, " << occupied_count(g)
              << " occupied voxels)\n";
    return 0;
}

int cmd_compute_cmf(const std::string& obstacle_path, const std::string& fixtures_path,
                    const std::string& tool_path, const std::vector<std::string>& sharp,
                    int theta_count, int phi_count, bool closed, bool oracle, long long budget,
                    const std::string& out_dir) {
    VoxelGrid obstacle = load_obstacle(obstacle_path, fixtures_path);
    ToolAssembly tool = load_tool(tool_path, sharp);
    auto orients = make_orientations(theta_count, obstacle.ndim == 3 ? phi_count : 0, closed,
                                     obstacle.ndim);
    FieldStack stack;
    if (oracle) {
        for (const Orientation& o : orients)
            stack.sections.push_back(cmf_brute_force(obstacle, tool, o, budget));
        std::sort(stack.sections.begin(), stack.sections.end(),
                  [](const FieldCrossSection& a, const FieldCrossSection& b) {
                      return a.orientation < b.orientation;
                  });
    } else {
        stack = build_stack(obstacle, tool, orients);
    }
    write_stack(out_dir, stack);
    std::cout << "wrote " << stack.sections.size() << " sections to " << out_dir << "\n";
    return 0;
}

int cmd_imf(const std::string& stack_dir, const std::string& out, const std::string& png,
            const std::string& slice) {
    FieldStack stack = read_stack(stack_dir);
    VoxelGrid imf = imf_from_stack(stack);
    write_voxf(out, imf, "f64");
    std::cout << "wrote " << out << "\n";
    if (!png.empty()) {
        int axis = 2, index = 0;
        if (!slice.empty()) {
            std::size_t eq = slice.find('=');
            if (eq == std::string::npos) throw ConfigError("--slice: expected axis=index");
            std::string a = slice.substr(0, eq);
            if (a == "x" || a == "0") axis = 0;
            else if (a == "y" || a == "1") axis = 1;
            else if (a == "z" || a == "2") axis = 2;
            else throw ConfigError("--slice: bad axis '" + a + "'");
            try {
                index = std::stoi(slice.substr(eq + 1));
            } catch (const std::exception&) {
                throw ConfigError("--slice: bad index");
            }
        } else if (imf.ndim == 3) {
            index = imf.dims[2] / 2;
        }
        write_field_png(png, imf, axis, index);
        std::cout << "wrote " << png << "\n";
    }
    return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, bool expect_le, double tol) {
    VoxelGrid a = read_voxf(a_path);
    VoxelGrid b = read_voxf(b_path);
    std::printf("mse\t%.17g\n", mse(a, b));
    std::printf("mpe\t%.17g\n", mpe(a, b));
    if (expect_le) {
        for (std::size_t i = 0; i < a.data.size(); ++i)
            if (a.data[i] > b.data[i] + tol) {
                std::cerr << "compare: a exceeds b at voxel " << i << " (" << a.data[i] << " > "
                          << b.data[i] << ")\n";
                return 1;
            }
        std::cout << "a <= b pointwise (tol " << tol << ")\n";
    }
    return 0;
}

int cmd_train(const KvConfig& cfg, const std::string& resume) {
    CommonRun r = load_common(cfg);
    cfg.reject_unknown();
    fs::create_directories(r.out_dir);
    auto orients = make_orientations(r.theta_count, r.phi_count, r.closed, r.obstacle.ndim);
    FieldStack stack = build_stack(r.obstacle, r.tool, orients);

    int n_angles = r.obstacle.ndim == 3 ? 2 : 1;
    NeuralField net;
    if (resume.empty())
        net = init_network(r.obstacle.ndim + n_angles, r.hidden_layers, r.hidden_width, r.omega0,
                           r.seed, r.skip_at);
    else
        net = read_nfld(resume);
    std::vector<CoordMap> maps = normalize_coords(r.obstacle, n_angles);
    if (!resume.empty()) maps = net.norm;

    TrainResult res = train_single_resolution(stack, net, r.tcfg, &maps);
    print_warnings(res.warnings);
    write_nfld((fs::path(r.out_dir) / "model.nfld").string(), res.net);
    write_loss_log((fs::path(r.out_dir) / "loss.log").string(), resolved_config(r), res.log);
    std::cout << "trained " << res.adam_steps << " steps; model at " << r.out_dir
              << "/model.nfld\n";
    return 0;
}

int cmd_train_multires(const KvConfig& cfg) {
    CommonRun r = load_common(cfg);
    MultiResConfig m;
    m.base = r.tcfg;
    m.coarse_scale = cfg.num("coarse_scale", 0.65);
    m.coarse_theta = static_cast<int>(cfg.integer("coarse_theta", r.obstacle.ndim == 3 ? 30 : 90));
    m.coarse_phi = static_cast<int>(cfg.integer("coarse_phi", r.obstacle.ndim == 3 ? 30 : 0));
    m.coarse_epochs = static_cast<int>(cfg.integer("coarse_epochs", 20));
    m.fine_theta = static_cast<int>(cfg.integer("fine_theta", r.theta_count));
    m.fine_phi = static_cast<int>(cfg.integer("fine_phi", r.phi_count));
    m.fine_epochs = static_cast<int>(cfg.integer("fine_epochs", 25));
    m.persist_adam = cfg.flag("persist_adam", false);
    cfg.reject_unknown();
    fs::create_directories(r.out_dir);

    int n_angles = r.obstacle.ndim == 3 ? 2 : 1;
    NeuralField net = init_network(r.obstacle.ndim + n_angles, r.hidden_layers, r.hidden_width,
                                   r.omega0, r.seed, r.skip_at);
    MultiResResult res = train_multi_resolution(r.obstacle, r.tool, net, m);
    print_warnings(res.warnings);
    write_nfld((fs::path(r.out_dir) / "model.nfld").string(), res.net);
    auto rc = resolved_config(r);
    rc.push_back({"coarse_scale", std::to_string(m.coarse_scale)});
    rc.push_back({"coarse_theta", std::to_string(m.coarse_theta)});
    rc.push_back({"coarse_phi", std::to_string(m.coarse_phi)});
    rc.push_back({"coarse_epochs", std::to_string(m.coarse_epochs)});
    rc.push_back({"fine_epochs", std::to_string(m.fine_epochs)});
    write_loss_log((fs::path(r.out_dir) / "loss_coarse.log").string(), rc, res.coarse_log, "");
    write_loss_log((fs::path(r.out_dir) / "loss_fine.log").string(), rc, res.fine_log, "");
    std::cout << "trained " << res.adam_steps << " steps across two stages; model at " << r.out_dir
              << "/model.nfld\n";
    return 0;
}

int cmd_finetune(const KvConfig& cfg) {
    CommonRun r = load_common(cfg);
    WarmStartConfig w;
    w.base = r.tcfg;
    w.finetune_lr = cfg.num("finetune_lr", 1e-4);
    w.finetune_epochs = static_cast<int>(cfg.integer("finetune_epochs", 5));
    std::string base_path = cfg.require("base_model");
    cfg.reject_unknown();
    fs::create_directories(r.out_dir);

    NeuralField base = read_nfld(base_path);
    auto orients = make_orientations(r.theta_count, r.phi_count, r.closed, r.obstacle.ndim);
    FieldStack stack = build_stack(r.obstacle, r.tool, orients);
    TrainResult res = warm_start_finetune(stack, base, w);
    print_warnings(res.warnings);
    write_nfld((fs::path(r.out_dir) / "model.nfld").string(), res.net);
    auto rc = resolved_config(r);
    rc.push_back({"base_model", base_path});
    rc.push_back({"finetune_lr", std::to_string(w.finetune_lr)});
    rc.push_back({"finetune_epochs", std::to_string(w.finetune_epochs)});
    write_loss_log((fs::path(r.out_dir) / "loss.log").string(), rc, res.log);
    std::cout << "finetuned " << res.adam_steps << " steps; model at " << r.out_dir
              << "/model.nfld\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& obstacle_path,
             const std::string& fixtures_path, const std::string& tool_path,
             const std::vector<std::string>& sharp, int theta_count, int phi_count, bool closed,
             int dense_theta, int dense_phi, double oos_theta, double oos_phi,
             const std::string& out_path) {
    NeuralField net = read_nfld(model_path);
    VoxelGrid obstacle = load_obstacle(obstacle_path, fixtures_path);
    ToolAssembly tool = load_tool(tool_path, sharp);
    int n_angles = obstacle.ndim == 3 ? 2 : 1;
    if (net.input_dim != obstacle.ndim + n_angles)
        throw StructuralError("eval: model input_dim does not match geometry");

    auto train_orients = make_orientations(theta_count, phi_count, closed, obstacle.ndim);
    auto dense_orients = make_orientations(dense_theta, dense_phi, closed, obstacle.ndim);
    Orientation in_sample = train_orients.front();
    Orientation oos = obstacle.ndim == 3 ? Orientation::spherical(oos_theta, oos_phi)
                                         : Orientation::planar(oos_theta);

    FieldCrossSection truth_in = cmf_cross_section(obstacle, tool, in_sample);
    FieldCrossSection truth_oos = cmf_cross_section(obstacle, tool, oos);
    FieldStack truth_train = build_stack(obstacle, tool, train_orients);
    FieldStack truth_dense = build_stack(obstacle, tool, dense_orients);

    FieldStack pred_in = evaluate_field(net, obstacle, {in_sample});
    FieldStack pred_oos = evaluate_field(net, obstacle, {oos});
    FieldStack pred_train = evaluate_field(net, obstacle, train_orients);
    FieldStack pred_dense = evaluate_field(net, obstacle, dense_orients);

    double vals[8] = {
        mse(pred_in.sections[0].field, truth_in.field),
        mpe(pred_in.sections[0].field, truth_in.field),
        mse(pred_oos.sections[0].field, truth_oos.field),
        mpe(pred_oos.sections[0].field, truth_oos.field),
        mse(imf_from_stack(pred_train), imf_from_stack(truth_train)),
        mpe(imf_from_stack(pred_train), imf_from_stack(truth_train)),
        mse(imf_from_stack(pred_dense), imf_from_stack(truth_dense)),
        mpe(imf_from_stack(pred_dense), imf_from_stack(truth_dense)),
    };
    std::string header =
        "in_sample_mse\tin_sample_mpe\toos_mse\toos_mpe\timf_train_mse\timf_train_mpe\timf_dense_"
        "mse\timf_dense_mpe";
    char row[512];
    std::snprintf(row, sizeof(row), "%.9e\t%.9e\t%.9e\t%.9e\t%.9e\t%.9e\t%.9e\t%.9e", vals[0],
                  vals[1], vals[2], vals[3], vals[4], vals[5], vals[6], vals[7]);
    std::cout << header << "\n" << row << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw FormatError("eval: cannot open " + out_path);
        out << header << "\n" << row << "\n";
    }
    return 0;
}

int cmd_compare_baselines(const std::string& obstacle_path, const std::string& fixtures_path,
                          const std::string& tool_path, const std::vector<std::string>& sharp,
                          int knots, int targets, const std::string& model_path, int dnn_epochs,
                          int dnn_width, int dnn_depth, double density, std::uint64_t seed,
                          const std::string& out_path) {
    VoxelGrid obstacle = load_obstacle(obstacle_path, fixtures_path);
    if (obstacle.ndim != 2)
        throw ConfigError("compare-baselines: 2D geometry only");
    ToolAssembly tool = load_tool(tool_path, sharp);

    std::vector<Orientation> knot_orients;
    for (double a : periodic_knot_angles(knots)) knot_orients.push_back(Orientation::planar(a));
    std::vector<double> target_angles = periodic_knot_angles(targets);
    std::vector<Orientation> target_orients;
    for (double a : target_angles) target_orients.push_back(Orientation::planar(a));

    FieldStack knot_stack = build_stack(obstacle, tool, knot_orients);
    FieldStack truth = build_stack(obstacle, tool, target_orients);
    VoxelGrid truth_imf = imf_from_stack(truth);

    struct Row {
        std::string name;
        double imf_mse, imf_mpe, stack_mse, stack_mpe;
    };
    std::vector<Row> rows;

    NeuralField net;
    if (!model_path.empty()) {
        net = read_nfld(model_path);
    } else {
        TrainConfig cfg;
        cfg.epochs = dnn_epochs;
        cfg.plan.density = density;
        cfg.plan.seed = seed;
        cfg.seed = seed;
        NeuralField init = init_network(3, dnn_depth, dnn_width, 30.0, seed,
                                        std::min(2, dnn_depth));
        TrainResult tr = train_single_resolution(knot_stack, init, cfg);
        print_warnings(tr.warnings);
        net = std::move(tr.net);
    }
    FieldStack dnn_stack = evaluate_field(net, obstacle, target_orients);
    rows.push_back({"dnn", mse(imf_from_stack(dnn_stack), truth_imf),
                    mpe(imf_from_stack(dnn_stack), truth_imf), stack_mse(dnn_stack, truth),
                    stack_mpe(dnn_stack, truth)});

    for (auto [kind, name] : {std::pair{InterpKind::trig, "trig"},
                              std::pair{InterpKind::cubic, "cubic"},
                              std::pair{InterpKind::linear, "linear"}}) {
        AngularInterpolant it = fit_interpolant(knot_stack, kind);
        FieldStack raw = upsample_stack(it, target_angles, false);
        FieldStack clamped = upsample_stack(it, target_angles, true);
        rows.push_back({name, mse(imf_from_stack(clamped), truth_imf),
                        mpe(imf_from_stack(clamped), truth_imf), stack_mse(raw, truth),
                        stack_mpe(raw, truth)});
    }

    std::ostringstream rep;
    rep << "method\timf_mse\timf_mpe\tstack_mse\tstack_mpe\n";
    char buf[256];
    for (const Row& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s\t%.9e\t%.9e\t%.9e\t%.9e\n", r.name.c_str(), r.imf_mse,
                      r.imf_mpe, r.stack_mse, r.stack_mpe);
        rep << buf;
    }
    std::cout << rep.str();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw FormatError("compare-baselines: cannot open " + out_path);
        out << rep.str();
    }
    return 0;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string part = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!part.empty()) {
            try {
                out.push_back(std::stod(part));
            } catch (const std::exception&) {
                throw ConfigError(what + ": bad list entry '" + part + "'");
            }
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw ConfigError(what + ": empty list");
    return out;
}

int cmd_ablate(const KvConfig& cfg) {
    CommonRun r = load_common(cfg);
    auto densities = parse_list(cfg.str("densities", "0.10,0.50"), "densities");
    auto widths = parse_list(cfg.str("widths", "256,512"), "widths");
    auto depths = parse_list(cfg.str("depths", "4,5,6"), "depths");
    int dense_theta = static_cast<int>(cfg.integer("dense_theta", r.obstacle.ndim == 3 ? 25 : 4 * r.theta_count));
    int dense_phi = static_cast<int>(cfg.integer("dense_phi", r.obstacle.ndim == 3 ? 25 : 0));
    cfg.reject_unknown();
    fs::create_directories(r.out_dir);

    std::vector<AblationCell> cells;
    for (double d : densities)
        for (double w : widths)
            for (double dep : depths)
                cells.push_back({d, static_cast<int>(w), static_cast<int>(dep)});

    auto train_orients = make_orientations(r.theta_count, r.phi_count, r.closed, r.obstacle.ndim);
    auto dense_orients = make_orientations(dense_theta, dense_phi, r.closed, r.obstacle.ndim);
    auto rows = ablation_run(r.obstacle, r.tool, cells, r.tcfg, train_orients, dense_orients,
                             r.omega0, r.seed, r.skip_at);

    std::ostringstream rep;
    rep << "density\twidth\tdepth\tfinal_l1\timf_train_mse\timf_train_mpe\timf_dense_mse\timf_"
           "dense_mpe\n";
    char buf[256];
    for (const AblationRow& row : rows) {
        std::snprintf(buf, sizeof(buf), "%.2f\t%d\t%d\t%.9e\t%.9e\t%.9e\t%.9e\t%.9e\n",
                      row.cell.density, row.cell.width, row.cell.depth, row.final_loss,
                      row.mse_imf_train, row.mpe_imf_train, row.mse_imf_dense, row.mpe_imf_dense);
        rep << buf;
    }
    std::cout << rep.str();
    std::ofstream out(fs::path(r.out_dir) / "ablation.tsv");
    if (!out) throw FormatError("ablate: cannot open report file");
    out << rep.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"collision measure fields on voxel grids: FFT ground truth, neural implicit "
                 "compression, angular-interpolation baselines"};
    app.require_subcommand(1);

    std::string kind, out, obstacle, fixtures, tool, stack_dir, png, slice, model, config_path,
        resume, a_path, b_path;
    std::vector<std::string> sharp{"tip"};
    int n = 48, theta_count = 36, phi_count = 0, dense_theta = 0, dense_phi = 0;
    int dnn_epochs = 200, dnn_width = 128, dnn_depth = 3;
    int knots = 37, targets = 145;
    bool closed = false, oracle = false, expect_le = false;
    long long budget = 100000000;
    double tol = 0.0, oos_theta = 12.0, oos_phi = 6.0, density = 0.35;
    long long seed = 0;

    auto* gen = app.add_subcommand("gen-fixture", "write a procedural test geometry as VOXF");
    gen->add_option("--kind", kind,
                    "disk|lshape|lshape-cut|sphere-block|square-tool|l-tool|elbow-tool")
        ->required();
    gen->add_option("--n", n, "lattice size (tools: footprint size)");
    gen->add_option("--out", out, "output VOXF path")->required();

    auto* ccmf = app.add_subcommand("compute-cmf", "compute collision measure cross-sections");
    ccmf->add_option("--obstacle", obstacle, "obstacle VOXF (indicator)")->required();
    ccmf->add_option("--fixtures", fixtures, "optional fixtures VOXF, same lattice");
    ccmf->add_option("--tool", tool, "tool occupancy VOXF")->required();
    ccmf->add_option("--sharp", sharp, "'tip' or voxel index i,j[,k] (repeatable)");
    ccmf->add_option("--theta-count", theta_count, "orientation count about z")->required();
    ccmf->add_option("--phi-count", phi_count, "3D: orientation count in elevation");
    ccmf->add_flag("--closed", closed, "2D: closed angle counting (n on [0,360] = n-1 distinct)");
    ccmf->add_flag("--oracle", oracle, "brute-force counting path (small instances)");
    ccmf->add_option("--budget", budget, "oracle operation budget");
    ccmf->add_option("--out", out, "output stack directory")->required();

    auto* imf = app.add_subcommand("imf", "reduce a stack to its pointwise minimum");
    imf->add_option("--stack", stack_dir, "stack directory with manifest.json")->required();
    imf->add_option("--out", out, "output VOXF path")->required();
    imf->add_option("--png", png, "also export a grayscale image");
    imf->add_option("--slice", slice, "3D PNG slice as axis=index (x|y|z|0|1|2)");

    auto* cmp = app.add_subcommand("compare", "error metrics between two VOXF fields");
    cmp->add_option("--a", a_path, "first field")->required();
    cmp->add_option("--b", b_path, "second field")->required();
    cmp->add_flag("--expect-le", expect_le, "fail unless a <= b pointwise");
    cmp->add_option("--tol", tol, "tolerance for --expect-le");

    auto* train = app.add_subcommand("train", "single-resolution training from a config file");
    train->add_option("--config", config_path, "key=value run configuration")->required();
    train->add_option("--resume", resume, "continue from an NFLD checkpoint");

    auto* multires = app.add_subcommand("train-multires", "coarse-to-fine training");
    multires->add_option("--config", config_path, "key=value run configuration")->required();

    auto* finetune = app.add_subcommand("finetune", "warm-start transfer to new geometry");
    finetune->add_option("--config", config_path, "key=value run configuration")->required();

    auto* eval = app.add_subcommand("eval", "error report for a trained model");
    eval->add_option("--model", model, "NFLD model")->required();
    eval->add_option("--obstacle", obstacle, "obstacle VOXF")->required();
    eval->add_option("--fixtures", fixtures, "optional fixtures VOXF");
    eval->add_option("--tool", tool, "tool occupancy VOXF")->required();
    eval->add_option("--sharp", sharp, "'tip' or voxel index i,j[,k] (repeatable)");
    eval->add_option("--theta-count", theta_count, "training orientation count");
    eval->add_option("--phi-count", phi_count, "3D training orientation count");
    eval->add_flag("--closed", closed, "2D closed angle counting");
    eval->add_option("--dense-theta", dense_theta, "dense evaluation count (default 4x / 25)");
    eval->add_option("--dense-phi", dense_phi, "3D dense evaluation count");
    eval->add_option("--oos-theta", oos_theta, "out-of-sample theta in degrees");
    eval->add_option("--oos-phi", oos_phi, "out-of-sample phi in degrees (3D)");
    eval->add_option("--out", out, "also write the report here");

    auto* cbl = app.add_subcommand("compare-baselines",
                                   "angular interpolation baselines vs the network (2D)");
    cbl->add_option("--obstacle", obstacle, "obstacle VOXF")->required();
    cbl->add_option("--fixtures", fixtures, "optional fixtures VOXF");
    cbl->add_option("--tool", tool, "tool occupancy VOXF")->required();
    cbl->add_option("--sharp", sharp, "'tip' or voxel index i,j (repeatable)");
    cbl->add_option("--knots", knots, "closed knot count over one turn (37 = 10 deg apart)");
    cbl->add_option("--targets", targets, "closed target count over one turn");
    cbl->add_option("--model", model, "pretrained NFLD (otherwise trains inline)");
    cbl->add_option("--dnn-epochs", dnn_epochs, "inline training epochs");
    cbl->add_option("--dnn-width", dnn_width, "inline network width");
    cbl->add_option("--dnn-depth", dnn_depth, "inline network depth");
    cbl->add_option("--density", density, "inline training sample density");
    cbl->add_option("--seed", seed, "inline training seed");
    cbl->add_option("--out", out, "also write the report here");

    auto* ablate = app.add_subcommand("ablate", "density/width/depth sweep from a config file");
    ablate->add_option("--config", config_path, "key=value run configuration")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_fixture(kind, n, out);
        if (ccmf->parsed())
            return cmd_compute_cmf(obstacle, fixtures, tool, sharp, theta_count, phi_count, closed,
                                   oracle, budget, out);
        if (imf->parsed()) return cmd_imf(stack_dir, out, png, slice);
        if (cmp->parsed()) return cmd_compare(a_path, b_path, expect_le, tol);
        if (train->parsed()) return cmd_train(KvConfig{parse_kv_file(config_path)}, resume);
        if (multires->parsed()) return cmd_train_multires(KvConfig{parse_kv_file(config_path)});
        if (finetune->parsed()) return cmd_finetune(KvConfig{parse_kv_file(config_path)});
        if (eval->parsed()) {
            if (dense_theta == 0) dense_theta = closed ? 4 * (theta_count - 1) + 1 : 4 * theta_count;
            return cmd_eval(model, obstacle, fixtures, tool, sharp, theta_count, phi_count, closed,
                            dense_theta, dense_phi, oos_theta, oos_phi, out);
        }
        if (cbl->parsed())
            return cmd_compare_baselines(obstacle, fixtures, tool, sharp, knots, targets, model,
                                         dnn_epochs, dnn_width, dnn_depth, density,
                                         static_cast<std::uint64_t>(seed), out);
        if (ablate->parsed()) return cmd_ablate(KvConfig{parse_kv_file(config_path)});
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const RangeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const StructuralError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ResourceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const TrainingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
