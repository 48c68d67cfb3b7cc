#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "cmfield/cspace.hpp"

namespace cmfield {

inline double mse(const VoxelGrid& a, const VoxelGrid& b) {
    if (!same_lattice(a, b, 1e-12)) throw StructuralError("mse: lattice mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

inline double mpe(const VoxelGrid& a, const VoxelGrid& b) {
    if (!same_lattice(a, b, 1e-12)) throw StructuralError("mpe: lattice mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

inline double stack_mse(const FieldStack& a, const FieldStack& b) {
    if (a.sections.size() != b.sections.size()) throw StructuralError("stack_mse: size mismatch");
    double acc = 0.0;
    for (std::size_t s = 0; s < a.sections.size(); ++s)
        acc += mse(a.sections[s].field, b.sections[s].field);
    return acc / static_cast<double>(a.sections.size());
}

inline double stack_mpe(const FieldStack& a, const FieldStack& b) {
    if (a.sections.size() != b.sections.size()) throw StructuralError("stack_mpe: size mismatch");
    double m = 0.0;
    for (std::size_t s = 0; s < a.sections.size(); ++s)
        m = std::max(m, mpe(a.sections[s].field, b.sections[s].field));
    return m;
}

enum class InterpKind { linear, cubic, trig };

/// Per-voxel periodic interpolant along the rotation angle, fit to a 2D
/// stack's sections. Linear and cubic work on any strictly increasing knot
/// set; the trigonometric kind requires equispaced knots (its coefficients
/// are plain DFT sums).
struct AngularInterpolant {
    InterpKind kind = InterpKind::linear;
    std::vector<double> knots;  // degrees, strictly increasing in [0,360)
    VoxelGrid lattice;          // descriptor for emitted sections
    Eigen::MatrixXd values;     // knot values, n_knots x n_voxels
    Eigen::MatrixXd m2;         // cubic: periodic-spline second derivatives
    Eigen::MatrixXd trig;       // trig: rows a0, (a_k, b_k)..., [nyquist]
};

namespace detail {

inline int knot_interval(const std::vector<double>& knots, double t) {
    // interval i covers [knots[i], knots[i+1]) with the last wrapping to
    // knots[0] + 360
    int n = static_cast<int>(knots.size());
    if (t < knots.front() || t >= knots.back()) return n - 1;
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        (t >= knots[static_cast<std::size_t>(mid)] ? lo : hi) = mid;
    }
    return lo;
}

inline double wrap_deg(double t) {
    double r = std::fmod(t, 360.0);
    if (r < 0.0) r += 360.0;
    return r;
}

}  // namespace detail

inline AngularInterpolant fit_interpolant(const FieldStack& stack, InterpKind kind) {
    stack.validate();
    if (stack.sections.front().orientation.ndim != 2)
        throw StructuralError("fit_interpolant: only planar stacks are supported");
    int n = static_cast<int>(stack.sections.size());
    if (n < 2) throw ConfigError("fit_interpolant: need at least 2 knots");

    AngularInterpolant it;
    it.kind = kind;
    it.lattice = stack.sections.front().field;
    std::int64_t nv = it.lattice.n_voxels();
    it.knots.resize(static_cast<std::size_t>(n));
    it.values.resize(n, nv);
    for (int i = 0; i < n; ++i) {
        it.knots[static_cast<std::size_t>(i)] = stack.sections[static_cast<std::size_t>(i)].orientation.theta_deg;
        for (std::int64_t v = 0; v < nv; ++v)
            it.values(i, v) = stack.sections[static_cast<std::size_t>(i)].field.data[static_cast<std::size_t>(v)];
    }
    for (int i = 1; i < n; ++i)
        if (!(it.knots[static_cast<std::size_t>(i)] > it.knots[static_cast<std::size_t>(i - 1)]))
            throw StructuralError("fit_interpolant: knots not strictly increasing");

    if (kind == InterpKind::cubic) {
        // periodic C2 spline: cyclic tridiagonal system in the second
        // derivatives, one factorization shared by every voxel
        std::vector<double> h(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            double next = (i + 1 < n) ? it.knots[static_cast<std::size_t>(i + 1)]
                                      : it.knots[0] + 360.0;
            h[static_cast<std::size_t>(i)] = next - it.knots[static_cast<std::size_t>(i)];
        }
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXd B(n, nv);
        for (int i = 0; i < n; ++i) {
            int im = (i + n - 1) % n;
            int ip = (i + 1) % n;
            A(i, im) += h[static_cast<std::size_t>(im)] / 6.0;
            A(i, i) += (h[static_cast<std::size_t>(im)] + h[static_cast<std::size_t>(i)]) / 3.0;
            A(i, ip) += h[static_cast<std::size_t>(i)] / 6.0;
            B.row(i) = (it.values.row(ip) - it.values.row(i)) / h[static_cast<std::size_t>(i)] -
                       (it.values.row(i) - it.values.row(im)) / h[static_cast<std::size_t>(im)];
        }
        it.m2 = Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(B);
    } else if (kind == InterpKind::trig) {
        double step = 360.0 / n;
        for (int i = 0; i < n; ++i)
            if (std::abs(it.knots[static_cast<std::size_t>(i)] - (it.knots[0] + i * step)) > 1e-9)
                throw ConfigError("fit_interpolant: trig kind needs equispaced knots");
        int k_max = (n - 1) / 2;
        int rows = 1 + 2 * k_max + (n % 2 == 0 ? 1 : 0);
        it.trig.resize(rows, nv);
        for (std::int64_t v = 0; v < nv; ++v) {
            it.trig(0, v) = it.values.col(v).mean();
            for (int k = 1; k <= k_max; ++k) {
                double ca = 0.0, sa = 0.0;
                for (int j = 0; j < n; ++j) {
                    double x = 2.0 * std::numbers::pi * k * j / n;
                    ca += it.values(j, v) * std::cos(x);
                    sa += it.values(j, v) * std::sin(x);
                }
                it.trig(1 + 2 * (k - 1), v) = 2.0 * ca / n;
                it.trig(2 + 2 * (k - 1), v) = 2.0 * sa / n;
            }
            if (n % 2 == 0) {
                double cn = 0.0;
                for (int j = 0; j < n; ++j)
                    cn += it.values(j, v) * ((j % 2 == 0) ? 1.0 : -1.0);
                it.trig(rows - 1, v) = cn / n;
            }
        }
    }
    return it;
}

/// Evaluates one voxel's interpolant at angle t (degrees, any real).
inline double eval_interpolant(const AngularInterpolant& it, std::int64_t voxel, double t) {
    int n = static_cast<int>(it.knots.size());
    double td = detail::wrap_deg(t);
    if (it.kind == InterpKind::trig) {
        double x = (td - it.knots[0]) * std::numbers::pi / 180.0;
        int k_max = (n - 1) / 2;
        double s = it.trig(0, voxel);
        for (int k = 1; k <= k_max; ++k)
            s += it.trig(1 + 2 * (k - 1), voxel) * std::cos(k * x) +
                 it.trig(2 + 2 * (k - 1), voxel) * std::sin(k * x);
        if (n % 2 == 0) s += it.trig(it.trig.rows() - 1, voxel) * std::cos(0.5 * n * x);
        return s;
    }
    int i = detail::knot_interval(it.knots, td);
    int j = (i + 1) % n;
    double t0 = it.knots[static_cast<std::size_t>(i)];
    double t1 = (i + 1 < n) ? it.knots[static_cast<std::size_t>(j)] : it.knots[0] + 360.0;
    if (td < t0) td += 360.0;  // wrapped interval, t below knots[0]
    double hspan = t1 - t0;
    double vi = it.values(i, voxel);
    double vj = it.values(j, voxel);
    if (it.kind == InterpKind::linear) {
        double w = (td - t0) / hspan;
        double raw = vi + w * (vj - vi);
        // endpoint range law, exact: no value escapes [min(vi,vj), max(vi,vj)]
        return std::clamp(raw, std::min(vi, vj), std::max(vi, vj));
    }
    double mi = it.m2(i, voxel);
    double mj = it.m2(j, voxel);
    double a = t1 - td, b = td - t0;
    return mi * a * a * a / (6.0 * hspan) + mj * b * b * b / (6.0 * hspan) +
           (vi / hspan - mi * hspan / 6.0) * a + (vj / hspan - mj * hspan / 6.0) * b;
}

inline VoxelGrid eval_section(const AngularInterpolant& it, double theta_deg) {
    VoxelGrid out = it.lattice;
    std::int64_t nv = out.n_voxels();
    for (std::int64_t v = 0; v < nv; ++v)
        out.data[static_cast<std::size_t>(v)] = eval_interpolant(it, v, theta_deg);
    return out;
}

/// One section per target angle. `clamp_unit` clips every value to [0,1]
/// (linear output already respects the endpoint range and needs no clip;
/// cubic and trig overshoots stay visible when the flag is off).
inline FieldStack upsample_stack(const AngularInterpolant& it,
                                 const std::vector<double>& target_angles_deg,
                                 bool clamp_unit = false) {
    if (target_angles_deg.empty()) throw ConfigError("upsample_stack: no target angles");
    std::vector<double> targets = target_angles_deg;
    std::sort(targets.begin(), targets.end());
    for (double t : targets)
        if (t < 0.0 || t >= 360.0)
            throw RangeError("upsample_stack: target angles must lie in [0, 360)");
    FieldStack out;
    for (double t : targets) {
        FieldCrossSection sec;
        sec.orientation = Orientation::planar(t);
        sec.field = eval_section(it, t);
        if (clamp_unit)
            for (double& v : sec.field.data) v = clamp01(v);
        out.sections.push_back(std::move(sec));
    }
    return out;
}

}  // namespace cmfield
