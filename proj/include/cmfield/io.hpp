#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmfield/common.hpp"
#include "cmfield/cspace.hpp"
#include "cmfield/neural_field.hpp"
#include "cmfield/voxel_grid.hpp"

namespace cmfield {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw FormatError(what + ": trailing characters in number '" + s + "'");
        return v;
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception&) {
        throw FormatError(what + ": bad number '" + s + "'");
    }
}

inline std::int64_t parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw FormatError(what + ": trailing characters in integer '" + s + "'");
        return v;
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception&) {
        throw FormatError(what + ": bad integer '" + s + "'");
    }
}

}  // namespace detail

/// Writes a grid as VOXF: one ASCII header line, then the raw little-endian
/// row-major payload. dtype "u8" stores indicators one byte per voxel,
/// "f64" stores doubles.
inline void write_voxf(const std::string& path, const VoxelGrid& g, std::string dtype = "") {
    g.validate();
    if (dtype.empty()) dtype = is_indicator(g) ? "u8" : "f64";
    if (dtype != "u8" && dtype != "f64") throw FormatError("write_voxf: dtype must be u8 or f64");
    if (dtype == "u8") require_indicator(g, "write_voxf[u8]");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("write_voxf: cannot open " + path);
    out << "VOXF 1 " << g.ndim;
    for (int a = 0; a < g.ndim; ++a) out << ' ' << g.dims[a];
    out << ' ' << detail::fmt_double(g.spacing);
    for (int a = 0; a < g.ndim; ++a) out << ' ' << detail::fmt_double(g.origin[a]);
    out << ' ' << dtype << '\n';

    if (dtype == "u8") {
        std::vector<unsigned char> buf(g.data.size());
        for (std::size_t i = 0; i < g.data.size(); ++i)
            buf[i] = g.data[i] != 0.0 ? 1 : 0;
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    } else {
        std::vector<unsigned char> buf(g.data.size() * 8);
        for (std::size_t i = 0; i < g.data.size(); ++i) store_le_f64(buf.data() + 8 * i, g.data[i]);
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw FormatError("write_voxf: write failed for " + path);
}

inline VoxelGrid read_voxf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("read_voxf: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw FormatError("read_voxf: missing header in " + path);
    std::istringstream hs(header);
    std::vector<std::string> tok;
    for (std::string t; hs >> t;) tok.push_back(t);
    if (tok.size() < 2 || tok[0] != "VOXF") throw FormatError("read_voxf: not a VOXF file: " + path);
    if (tok[1] != "1") throw FormatError("read_voxf: unsupported VOXF version " + tok[1]);
    if (tok.size() < 3) throw FormatError("read_voxf: truncated header in " + path);
    int ndim = static_cast<int>(detail::parse_int(tok[2], "read_voxf ndim"));
    if (ndim != 2 && ndim != 3) throw FormatError("read_voxf: ndim must be 2 or 3");
    std::size_t want = 3 + static_cast<std::size_t>(ndim) + 1 + static_cast<std::size_t>(ndim) + 1;
    if (tok.size() != want) throw FormatError("read_voxf: header field count mismatch in " + path);

    VoxelGrid g;
    g.ndim = ndim;
    std::size_t p = 3;
    for (int a = 0; a < ndim; ++a)
        g.dims[a] = static_cast<int>(detail::parse_int(tok[p++], "read_voxf dims"));
    g.spacing = detail::parse_double(tok[p++], "read_voxf spacing");
    for (int a = 0; a < ndim; ++a) g.origin[a] = detail::parse_double(tok[p++], "read_voxf origin");
    std::string dtype = tok[p];
    if (dtype != "u8" && dtype != "f64") throw FormatError("read_voxf: unknown dtype " + dtype);
    for (int a = 0; a < ndim; ++a)
        if (g.dims[a] < 1) throw FormatError("read_voxf: non-positive dims in " + path);
    if (!(g.spacing > 0.0)) throw FormatError("read_voxf: non-positive spacing in " + path);

    std::int64_t n = g.n_voxels();
    g.data.resize(static_cast<std::size_t>(n));
    std::size_t bytes = static_cast<std::size_t>(n) * (dtype == "u8" ? 1 : 8);
    std::vector<unsigned char> buf(bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes)
        throw FormatError("read_voxf: truncated payload in " + path);
    if (dtype == "u8") {
        for (std::int64_t i = 0; i < n; ++i) {
            unsigned char b = buf[static_cast<std::size_t>(i)];
            if (b > 1) throw FormatError("read_voxf: u8 payload not an indicator in " + path);
            g.data[static_cast<std::size_t>(i)] = b;
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i)
            g.data[static_cast<std::size_t>(i)] = load_le_f64(buf.data() + 8 * i);
    }
    g.validate();
    return g;
}

/// NFLD model file: plain-text header, then all parameters as little-endian
/// f64 in layer order (weights row-major, then bias, per layer).
inline void write_nfld(const std::string& path, const NeuralField& net) {
    net.validate();
    if (net.norm.empty()) throw StructuralError("write_nfld: net carries no normalization maps");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("write_nfld: cannot open " + path);
    out << "NFLD 1\n";
    out << "input_dim " << net.input_dim << '\n';
    out << "hidden_layers " << net.hidden_layers << '\n';
    out << "hidden_width " << net.hidden_width << '\n';
    out << "skip_at " << net.skip_at << '\n';
    out << "omega0 " << detail::fmt_double(net.omega0) << '\n';
    for (int a = 0; a < net.input_dim; ++a)
        out << "norm " << a << ' ' << detail::fmt_double(net.norm[static_cast<std::size_t>(a)].lo)
            << ' ' << detail::fmt_double(net.norm[static_cast<std::size_t>(a)].hi) << '\n';
    out << "params " << net.parameter_count() << '\n';
    out << "END\n";

    std::vector<unsigned char> buf;
    buf.reserve(static_cast<std::size_t>(net.parameter_count()) * 8);
    unsigned char scratch[8];
    auto push = [&](double v) {
        store_le_f64(scratch, v);
        buf.insert(buf.end(), scratch, scratch + 8);
    };
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const Eigen::MatrixXd& W = net.weights[l];
        for (Eigen::Index r = 0; r < W.rows(); ++r)
            for (Eigen::Index c = 0; c < W.cols(); ++c) push(W(r, c));
        for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) push(net.biases[l](r));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw FormatError("write_nfld: write failed for " + path);
}

inline NeuralField read_nfld(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("read_nfld: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "NFLD 1")
        throw FormatError("read_nfld: not an NFLD v1 file: " + path);

    NeuralField net;
    net.norm.clear();
    std::int64_t declared_params = -1;
    std::map<std::string, bool> seen;
    while (std::getline(in, line)) {
        if (line == "END") break;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "input_dim" || key == "hidden_layers" || key == "hidden_width" ||
            key == "skip_at") {
            std::string v;
            ls >> v;
            int x = static_cast<int>(detail::parse_int(v, "read_nfld " + key));
            if (key == "input_dim") net.input_dim = x;
            if (key == "hidden_layers") net.hidden_layers = x;
            if (key == "hidden_width") net.hidden_width = x;
            if (key == "skip_at") net.skip_at = x;
        } else if (key == "omega0") {
            std::string v;
            ls >> v;
            net.omega0 = detail::parse_double(v, "read_nfld omega0");
        } else if (key == "norm") {
            std::string axis, lo, hi;
            ls >> axis >> lo >> hi;
            CoordMap m{detail::parse_double(lo, "read_nfld norm lo"),
                       detail::parse_double(hi, "read_nfld norm hi")};
            if (static_cast<std::size_t>(detail::parse_int(axis, "read_nfld norm axis")) !=
                net.norm.size())
                throw FormatError("read_nfld: norm axes out of order in " + path);
            net.norm.push_back(m);
        } else if (key == "params") {
            std::string v;
            ls >> v;
            declared_params = detail::parse_int(v, "read_nfld params");
        } else {
            throw FormatError("read_nfld: unknown header key '" + key + "' in " + path);
        }
        seen[key] = true;
    }
    if (line != "END") throw FormatError("read_nfld: missing END in " + path);
    for (const char* k : {"input_dim", "hidden_layers", "hidden_width", "skip_at", "omega0", "params"})
        if (!seen.count(k)) throw FormatError(std::string("read_nfld: missing header key ") + k);
    if (static_cast<int>(net.norm.size()) != net.input_dim)
        throw FormatError("read_nfld: normalization map count mismatch in " + path);

    net.weights.clear();
    net.biases.clear();
    for (int l = 0; l <= net.hidden_layers; ++l) {
        net.weights.emplace_back(net.layer_out_width(l), net.layer_in_width(l));
        net.biases.emplace_back(net.layer_out_width(l));
    }
    if (declared_params != net.parameter_count())
        throw FormatError("read_nfld: declared parameter count does not match layout in " + path);

    std::vector<unsigned char> buf(static_cast<std::size_t>(declared_params) * 8);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size())
        throw FormatError("read_nfld: truncated parameter payload in " + path);
    std::size_t off = 0;
    auto pull = [&]() {
        double v = load_le_f64(buf.data() + off);
        off += 8;
        return v;
    };
    for (int l = 0; l <= net.hidden_layers; ++l) {
        Eigen::MatrixXd& W = net.weights[static_cast<std::size_t>(l)];
        for (Eigen::Index r = 0; r < W.rows(); ++r)
            for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = pull();
        Eigen::VectorXd& b = net.biases[static_cast<std::size_t>(l)];
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = pull();
    }
    net.validate();
    return net;
}

/// Writes a stack as a directory: manifest.json naming angles and relative
/// section files, one VOXF per section.
inline void write_stack(const std::string& dir, const FieldStack& stack,
                        const std::string& prefix = "section") {
    stack.validate();
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "cmf-stack";
    manifest["version"] = 1;
    manifest["ndim"] = stack.sections.front().orientation.ndim;
    manifest["sections"] = nlohmann::json::array();
    for (std::size_t s = 0; s < stack.sections.size(); ++s) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%04zu.voxf", prefix.c_str(), s);
        write_voxf((std::filesystem::path(dir) / name).string(), stack.sections[s].field, "f64");
        nlohmann::json e;
        e["theta"] = stack.sections[s].orientation.theta_deg;
        if (stack.sections[s].orientation.ndim == 3)
            e["phi"] = stack.sections[s].orientation.phi_deg;
        e["file"] = name;
        manifest["sections"].push_back(e);
    }
    std::ofstream out(std::filesystem::path(dir) / "manifest.json");
    if (!out) throw FormatError("write_stack: cannot open manifest in " + dir);
    out << manifest.dump(2) << '\n';
}

inline FieldStack read_stack(const std::string& dir) {
    std::ifstream in(std::filesystem::path(dir) / "manifest.json");
    if (!in) throw FormatError("read_stack: cannot open manifest in " + dir);
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const std::exception& e) {
        throw FormatError(std::string("read_stack: malformed manifest: ") + e.what());
    }
    if (!manifest.contains("sections") || !manifest["sections"].is_array() ||
        manifest["sections"].empty())
        throw FormatError("read_stack: manifest has no sections array in " + dir);
    int ndim = manifest.value("ndim", 2);
    FieldStack stack;
    for (const auto& e : manifest["sections"]) {
        if (!e.contains("theta") || !e.contains("file"))
            throw FormatError("read_stack: section entry missing theta/file in " + dir);
        FieldCrossSection sec;
        if (ndim == 3)
            sec.orientation = Orientation::spherical(e["theta"].get<double>(),
                                                     e.value("phi", 0.0));
        else
            sec.orientation = Orientation::planar(e["theta"].get<double>());
        sec.field =
            read_voxf((std::filesystem::path(dir) / e["file"].get<std::string>()).string());
        stack.sections.push_back(std::move(sec));
    }
    std::sort(stack.sections.begin(), stack.sections.end(),
              [](const FieldCrossSection& a, const FieldCrossSection& b) {
                  return a.orientation < b.orientation;
              });
    stack.validate();
    return stack;
}

namespace detail {

inline std::uint32_t crc32(const unsigned char* data, std::size_t n, std::uint32_t crc = 0) {
    static std::uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            table[i] = c;
        }
        init = true;
    }
    crc ^= 0xFFFFFFFFu;
    for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

inline std::uint32_t adler32(const unsigned char* data, std::size_t n) {
    std::uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        a = (a + data[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

inline void push_be32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

inline void png_chunk(std::vector<unsigned char>& out, const char type[4],
                      const std::vector<unsigned char>& payload) {
    push_be32(out, static_cast<std::uint32_t>(payload.size()));
    std::vector<unsigned char> body(type, type + 4);
    body.insert(body.end(), payload.begin(), payload.end());
    out.insert(out.end(), body.begin(), body.end());
    push_be32(out, crc32(body.data(), body.size()));
}

}  // namespace detail

/// 8-bit grayscale PNG (zlib stream with stored-deflate blocks). `pixels`
/// is row-major, rows of `width`, top row first.
inline void write_png_gray(const std::string& path, const std::vector<unsigned char>& pixels,
                           int width, int height) {
    if (width < 1 || height < 1 ||
        pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw FormatError("write_png_gray: pixel buffer does not match dims");

    std::vector<unsigned char> raw;
    raw.reserve(pixels.size() + static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r) {
        raw.push_back(0);  // filter: none
        raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(r) * width,
                   pixels.begin() + static_cast<std::ptrdiff_t>(r + 1) * width);
    }

    std::vector<unsigned char> z;
    z.push_back(0x78);
    z.push_back(0x01);
    std::size_t off = 0;
    while (off < raw.size()) {
        std::size_t chunk = std::min<std::size_t>(65535, raw.size() - off);
        bool last = off + chunk == raw.size();
        z.push_back(last ? 1 : 0);
        z.push_back(static_cast<unsigned char>(chunk & 0xFF));
        z.push_back(static_cast<unsigned char>(chunk >> 8));
        z.push_back(static_cast<unsigned char>(~chunk & 0xFF));
        z.push_back(static_cast<unsigned char>((~chunk >> 8) & 0xFF));
        z.insert(z.end(), raw.begin() + static_cast<std::ptrdiff_t>(off),
                 raw.begin() + static_cast<std::ptrdiff_t>(off + chunk));
        off += chunk;
    }
    detail::push_be32(z, detail::adler32(raw.data(), raw.size()));

    std::vector<unsigned char> png{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    std::vector<unsigned char> ihdr;
    detail::push_be32(ihdr, static_cast<std::uint32_t>(width));
    detail::push_be32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    detail::png_chunk(png, "IHDR", ihdr);
    detail::png_chunk(png, "IDAT", z);
    detail::png_chunk(png, "IEND", {});

    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("write_png_gray: cannot open " + path);
    out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
    if (!out) throw FormatError("write_png_gray: write failed for " + path);
}

/// Renders a 2D field (or one axis-aligned slice of a 3D field) to
/// grayscale: 0 maps to black, 1 to white, linearly; larger values are
/// never darker. Slice axis/index apply to 3D grids only.
inline void write_field_png(const std::string& path, const VoxelGrid& g, int slice_axis = 2,
                            int slice_index = 0) {
    g.validate();
    int ax0, ax1;
    std::array<int, 3> fixed{0, 0, 0};
    if (g.ndim == 2) {
        ax0 = 0;
        ax1 = 1;
    } else {
        if (slice_axis < 0 || slice_axis > 2) throw ConfigError("write_field_png: bad slice axis");
        if (slice_index < 0 || slice_index >= g.dims[slice_axis])
            throw RangeError("write_field_png: slice index out of range");
        ax0 = (slice_axis == 0) ? 1 : 0;
        ax1 = (slice_axis == 2) ? 1 : 2;
        fixed[slice_axis] = slice_index;
    }
    int w = g.dims[ax0];
    int h = g.dims[ax1];
    std::vector<unsigned char> px(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::array<int, 3> idx = fixed;
            idx[ax0] = x;
            idx[ax1] = h - 1 - y;  // image top row = highest axis-1 coordinate
            double v = clamp01(g.at(idx[0], idx[1], idx[2]));
            px[static_cast<std::size_t>(y) * w + x] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    write_png_gray(path, px, w, h);
}

/// Parses `key = value` lines; '#' starts a comment, blank lines ignored.
/// Duplicate keys are rejected.
inline std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto strip = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            std::size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = strip(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("config: line " + std::to_string(ln) + " has no '=' in " + path);
        std::string key = strip(line.substr(0, eq));
        std::string val = strip(line.substr(eq + 1));
        if (key.empty()) throw FormatError("config: empty key at line " + std::to_string(ln));
        if (kv.count(key)) throw FormatError("config: duplicate key '" + key + "'");
        kv[key] = val;
    }
    return kv;
}

}  // namespace cmfield
