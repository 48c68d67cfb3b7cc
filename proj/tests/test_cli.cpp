#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "cmfield/cmfield.hpp"

using namespace cmfield;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    fs::path d = fs::temp_directory_path() / "cmfield_cli_tests";
    fs::create_directories(d);
    return d;
}

std::string at(const std::string& name) { return (work_dir() / name).string(); }

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

RunResult run(const std::string& args) {
    static int counter = 0;
    fs::path so = work_dir() / ("out_" + std::to_string(counter) + ".txt");
    fs::path se = work_dir() / ("err_" + std::to_string(counter) + ".txt");
    ++counter;
    std::string cmd = std::string(CMFIELD_CLI_PATH) + " " + args + " >" + so.string() + " 2>" +
                      se.string();
    int rc = std::system(cmd.c_str());
    RunResult r;
    if (WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

void write_config(const std::string& path, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream out(path);
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

std::vector<double> parse_row(const std::string& line) {
    std::vector<double> vals;
    std::istringstream ls(line);
    for (std::string tok; ls >> tok;) {
        try {
            vals.push_back(std::stod(tok));
        } catch (const std::exception&) {
        }
    }
    return vals;
}

// fixtures shared by the cases below; generated once through the CLI itself
struct Workspace {
    std::string disk = at("disk.voxf");
    std::string sq = at("sq.voxf");

    Workspace() {
        REQUIRE(run("gen-fixture --kind disk --n 16 --out " + disk).code == 0);
        REQUIRE(run("gen-fixture --kind square-tool --n 3 --out " + sq).code == 0);
    }
};

const Workspace& ws() {
    static Workspace w;
    return w;
}

}  // namespace

TEST_CASE("gen-fixture writes loadable indicator grids") {
    RunResult r = run("gen-fixture --kind lshape --n 24 --out " + at("lshape.voxf"));
    CHECK(r.code == 0);
    CHECK(r.out.find("occupied") != std::string::npos);
    VoxelGrid g = read_voxf(at("lshape.voxf"));
    CHECK(g.ndim == 2);
    CHECK(is_indicator(g));
    CHECK(occupied_count(g) > 0);

    CHECK(run("gen-fixture --kind wedge --n 8 --out " + at("x.voxf")).code == 2);
    CHECK(run("gen-fixture --kind disk --n 8").code == 2);  // missing --out
    CHECK(run("no-such-command").code == 2);
}

TEST_CASE("compute-cmf emits a stack that matches the library") {
    std::string dir = at("stack_open");
    RunResult r = run("compute-cmf --obstacle " + ws().disk + " --tool " + ws().sq +
                      " --theta-count 5 --out " + dir);
    REQUIRE(r.code == 0);

    FieldStack got = read_stack(dir);
    REQUIRE(got.sections.size() == 5);
    FieldStack want = build_stack(read_voxf(ws().disk), make_tool_tip(read_voxf(ws().sq)),
                                  equispaced_orientations(5));
    for (std::size_t s = 0; s < 5; ++s) {
        CHECK(got.sections[s].orientation == want.sections[s].orientation);
        CHECK(got.sections[s].field.data == want.sections[s].field.data);
    }

    std::string closed_dir = at("stack_closed");
    REQUIRE(run("compute-cmf --obstacle " + ws().disk + " --tool " + ws().sq +
                " --theta-count 5 --closed --out " + closed_dir)
                .code == 0);
    FieldStack closed = read_stack(closed_dir);
    REQUIRE(closed.sections.size() == 4);  // 5 on the closed circle = 4 distinct
    CHECK(closed.sections[1].orientation.theta_deg == 90.0);
}

TEST_CASE("the oracle path agrees with the transform path") {
    std::string fdir = at("fft_stack");
    std::string odir = at("oracle_stack");
    REQUIRE(run("compute-cmf --obstacle " + ws().disk + " --tool " + ws().sq +
                " --theta-count 3 --out " + fdir)
                .code == 0);
    REQUIRE(run("compute-cmf --obstacle " + ws().disk + " --tool " + ws().sq +
                " --theta-count 3 --oracle --out " + odir)
                .code == 0);
    FieldStack fft = read_stack(fdir);
    FieldStack oracle = read_stack(odir);
    CHECK(stack_mpe(fft, oracle) <= 1e-9);

    CHECK(run("compute-cmf --obstacle " + ws().disk + " --theta-count 3 --out " + at("no_tool"))
              .code == 2);
    CHECK(run("compute-cmf --obstacle " + at("ghost.voxf") + " --tool " + ws().sq +
              " --theta-count 3 --out " + at("ghost_stack"))
              .code == 3);
    CHECK(run("compute-cmf --obstacle " + ws().disk + " --tool " + ws().sq +
              " --theta-count 3 --oracle --budget 10 --out " + at("tiny_budget"))
              .code == 4);
}

TEST_CASE("imf reduces a stack directory and renders it") {
    std::string dir = at("imf_stack");
    REQUIRE(run("compute-cmf --obstacle " + ws().disk + " --tool " + ws().sq +
                " --theta-count 4 --out " + dir)
                .code == 0);
    RunResult r = run("imf --stack " + dir + " --out " + at("imf.voxf") + " --png " + at("imf.png"));
    REQUIRE(r.code == 0);

    VoxelGrid imf = read_voxf(at("imf.voxf"));
    VoxelGrid want = imf_from_stack(read_stack(dir));
    CHECK(imf.data == want.data);

    auto png = slurp(at("imf.png"));
    REQUIRE(png.size() > 33);
    CHECK(static_cast<unsigned char>(png[0]) == 0x89);
    CHECK(png.substr(1, 3) == "PNG");
    auto be32 = [&](std::size_t off) {
        return (std::uint32_t(static_cast<unsigned char>(png[off])) << 24) |
               (std::uint32_t(static_cast<unsigned char>(png[off + 1])) << 16) |
               (std::uint32_t(static_cast<unsigned char>(png[off + 2])) << 8) |
               std::uint32_t(static_cast<unsigned char>(png[off + 3]));
    };
    CHECK(be32(16) == static_cast<std::uint32_t>(want.dims[0]));
    CHECK(be32(20) == static_cast<std::uint32_t>(want.dims[1]));

    std::string bad = at("bad_stack");
    fs::create_directories(bad);
    std::ofstream(fs::path(bad) / "manifest.json") << "{broken";
    CHECK(run("imf --stack " + bad + " --out " + at("nope.voxf")).code == 3);
}

TEST_CASE("compare reports metrics and enforces pointwise ordering") {
    VoxelGrid a(2, {2, 2, 1}, 1.0, {0.5, 0.5, 0});
    VoxelGrid b = a;
    a.at(0, 0) = 0.2;
    a.at(1, 0) = 0.3;  // exceeds b here
    b.at(0, 0) = 0.5;
    b.at(1, 1) = 0.1;
    write_voxf(at("cmp_a.voxf"), a, "f64");
    write_voxf(at("cmp_b.voxf"), b, "f64");

    RunResult r = run("compare --a " + at("cmp_a.voxf") + " --b " + at("cmp_b.voxf"));
    CHECK(r.code == 0);
    CHECK(r.out.find("mse\t") != std::string::npos);
    CHECK(r.out.find("mpe\t") != std::string::npos);

    CHECK(run("compare --a " + at("cmp_a.voxf") + " --b " + at("cmp_b.voxf") + " --expect-le")
              .code == 1);
    CHECK(run("compare --a " + at("cmp_b.voxf") + " --b " + at("cmp_a.voxf") + " --expect-le")
              .code == 1);
    CHECK(run("compare --a " + at("cmp_a.voxf") + " --b " + at("cmp_b.voxf") +
              " --expect-le --tol 1.0")
              .code == 0);
}

TEST_CASE("train writes a model, a log, and is reproducible") {
    std::string cfg1 = at("train1.cfg");
    std::vector<std::pair<std::string, std::string>> base{
        {"obstacle", ws().disk}, {"tool", ws().sq},       {"out_dir", at("run1")},
        {"theta_count", "6"},    {"closed_grid", "false"}, {"epochs", "2"},
        {"hidden_width", "16"},  {"hidden_layers", "2"},   {"density", "0.5"},
        {"batch_size", "64"},    {"seed", "9"}};
    write_config(cfg1, base);
    RunResult r = run("train --config " + cfg1);
    REQUIRE(r.code == 0);

    NeuralField net = read_nfld(at("run1") + "/model.nfld");
    CHECK(net.input_dim == 3);
    CHECK(net.hidden_width == 16);
    CHECK(net.hidden_layers == 2);
    REQUIRE(net.norm.size() == 3);

    std::string log = slurp(at("run1") + "/loss.log");
    CHECK(log.find("# epochs = 2") != std::string::npos);
    CHECK(log.find("# columns: epoch\tlr\tmean_l1") != std::string::npos);
    CHECK(log.find("\n0\t") != std::string::npos);
    CHECK(log.find("\n1\t") != std::string::npos);

    auto base2 = base;
    base2[2] = {"out_dir", at("run2")};
    write_config(at("train2.cfg"), base2);
    REQUIRE(run("train --config " + at("train2.cfg")).code == 0);
    CHECK(slurp(at("run1") + "/model.nfld") == slurp(at("run2") + "/model.nfld"));
}

TEST_CASE("resuming with zero epochs copies the checkpoint exactly") {
    std::vector<std::pair<std::string, std::string>> kv{
        {"obstacle", ws().disk}, {"tool", ws().sq},       {"out_dir", at("resume_run")},
        {"theta_count", "6"},    {"closed_grid", "false"}, {"epochs", "0"},
        {"density", "0.5"},      {"batch_size", "64"}};
    write_config(at("resume.cfg"), kv);
    REQUIRE(run("train --config " + at("resume.cfg") + " --resume " + at("run1") + "/model.nfld")
                .code == 0);
    CHECK(slurp(at("resume_run") + "/model.nfld") == slurp(at("run1") + "/model.nfld"));
}

TEST_CASE("config mistakes map to the documented exit codes") {
    write_config(at("unknown.cfg"), {{"obstacle", ws().disk},
                                     {"tool", ws().sq},
                                     {"out_dir", at("u_run")},
                                     {"bogus", "1"}});
    CHECK(run("train --config " + at("unknown.cfg")).code == 2);

    std::ofstream(at("noeq.cfg")) << "this line has no equals sign\n";
    CHECK(run("train --config " + at("noeq.cfg")).code == 3);

    write_config(at("nokey.cfg"), {{"tool", ws().sq}, {"out_dir", at("n_run")}});
    CHECK(run("train --config " + at("nokey.cfg")).code == 2);

    CHECK(run("train --config " + at("never_written.cfg")).code == 3);
    CHECK(run("train").code == 2);  // missing --config
}

TEST_CASE("eval prints the eight-column error report") {
    RunResult r = run("eval --model " + at("run1") + "/model.nfld --obstacle " + ws().disk +
                      " --tool " + ws().sq +
                      " --theta-count 6 --dense-theta 8 --oos-theta 15 --out " + at("report.tsv"));
    REQUIRE(r.code == 0);

    std::istringstream out(r.out);
    std::string header, row;
    REQUIRE(std::getline(out, header));
    REQUIRE(std::getline(out, row));
    CHECK(header ==
          "in_sample_mse\tin_sample_mpe\toos_mse\toos_mpe\timf_train_mse\timf_train_mpe\timf_"
          "dense_mse\timf_dense_mpe");
    auto vals = parse_row(row);
    REQUIRE(vals.size() == 8);
    for (double v : vals) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
    }
    CHECK(slurp(at("report.tsv")) == header + "\n" + row + "\n");

    CHECK(run("eval --model " + at("run1") + "/model.nfld --obstacle " + ws().disk).code == 2);
}

TEST_CASE("compare-baselines ranks all four methods on planar geometry") {
    RunResult r = run("compare-baselines --obstacle " + ws().disk + " --tool " + ws().sq +
                      " --knots 7 --targets 13 --dnn-epochs 2 --dnn-width 16 --dnn-depth 2"
                      " --density 0.5 --seed 4 --out " + at("baselines.tsv"));
    REQUIRE(r.code == 0);
    CHECK(count_lines(r.out) == 5);

    std::istringstream out(r.out);
    std::string line;
    std::getline(out, line);
    CHECK(line == "method\timf_mse\timf_mpe\tstack_mse\tstack_mpe");
    const char* names[4] = {"dnn", "trig", "cubic", "linear"};
    for (const char* name : names) {
        REQUIRE(std::getline(out, line));
        CHECK(line.substr(0, line.find('\t')) == name);
        auto vals = parse_row(line);
        REQUIRE(vals.size() == 4);
        for (double v : vals) CHECK(std::isfinite(v));
    }
    CHECK(slurp(at("baselines.tsv")) == r.out);

    REQUIRE(run("gen-fixture --kind sphere-block --n 8 --out " + at("solid.voxf")).code == 0);
    REQUIRE(run("gen-fixture --kind elbow-tool --n 3 --out " + at("elbow.voxf")).code == 0);
    CHECK(run("compare-baselines --obstacle " + at("solid.voxf") + " --tool " + at("elbow.voxf"))
              .code == 2);
}

TEST_CASE("train-multires runs both stages from one config") {
    write_config(at("multires.cfg"),
                 {{"obstacle", ws().disk},
                  {"tool", ws().sq},
                  {"out_dir", at("mr_run")},
                  {"theta_count", "4"},
                  {"closed_grid", "false"},
                  {"hidden_width", "8"},
                  {"hidden_layers", "2"},
                  {"density", "0.5"},
                  {"batch_size", "128"},
                  {"coarse_scale", "0.8"},
                  {"coarse_theta", "4"},
                  {"coarse_epochs", "1"},
                  {"fine_epochs", "1"}});
    RunResult r = run("train-multires --config " + at("multires.cfg"));
    REQUIRE(r.code == 0);
    CHECK_NOTHROW(read_nfld(at("mr_run") + "/model.nfld"));
    CHECK(slurp(at("mr_run") + "/loss_coarse.log").find("# coarse_epochs = 1") != std::string::npos);
    CHECK(slurp(at("mr_run") + "/loss_fine.log").find("\n0\t") != std::string::npos);
}

TEST_CASE("finetune continues a checkpoint on altered geometry") {
    REQUIRE(run("gen-fixture --kind disk --n 16 --out " + at("disk_alt.voxf")).code == 0);
    write_config(at("finetune.cfg"), {{"obstacle", at("disk_alt.voxf")},
                                      {"tool", ws().sq},
                                      {"out_dir", at("ft_run")},
                                      {"theta_count", "6"},
                                      {"closed_grid", "false"},
                                      {"density", "0.5"},
                                      {"batch_size", "64"},
                                      {"base_model", at("run1") + "/model.nfld"},
                                      {"finetune_epochs", "1"}});
    REQUIRE(run("finetune --config " + at("finetune.cfg")).code == 0);
    NeuralField net = read_nfld(at("ft_run") + "/model.nfld");
    NeuralField base = read_nfld(at("run1") + "/model.nfld");
    REQUIRE(net.norm.size() == base.norm.size());
    for (std::size_t a = 0; a < net.norm.size(); ++a) {
        CHECK(net.norm[a].lo == base.norm[a].lo);
        CHECK(net.norm[a].hi == base.norm[a].hi);
    }

    write_config(at("ft_nobase.cfg"), {{"obstacle", ws().disk},
                                       {"tool", ws().sq},
                                       {"out_dir", at("ft2_run")},
                                       {"density", "0.5"}});
    CHECK(run("finetune --config " + at("ft_nobase.cfg")).code == 2);
}

TEST_CASE("ablate sweeps the requested grid into a report") {
    write_config(at("ablate.cfg"), {{"obstacle", ws().disk},
                                    {"tool", ws().sq},
                                    {"out_dir", at("ab_run")},
                                    {"theta_count", "4"},
                                    {"closed_grid", "false"},
                                    {"epochs", "1"},
                                    {"density", "0.5"},
                                    {"batch_size", "128"},
                                    {"densities", "0.5"},
                                    {"widths", "8,12"},
                                    {"depths", "2"},
                                    {"dense_theta", "8"}});
    RunResult r = run("ablate --config " + at("ablate.cfg"));
    REQUIRE(r.code == 0);
    std::string tsv = slurp(at("ab_run") + "/ablation.tsv");
    CHECK(count_lines(tsv) == 3);  // header + 2 cells
    CHECK(tsv.find("density\twidth\tdepth") == 0);
    CHECK(tsv.find("\t8\t2\t") != std::string::npos);
    CHECK(tsv.find("\t12\t2\t") != std::string::npos);
}
