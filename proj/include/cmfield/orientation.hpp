#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "cmfield/common.hpp"

namespace cmfield {

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Sine/cosine of an angle given in degrees, with exact values at multiples
/// of 90 so axis-aligned rotations stay lattice-exact.
inline void sincos_deg(double deg, double& s, double& c) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    if (r == 0.0) {
        s = 0.0; c = 1.0;
    } else if (r == 90.0) {
        s = 1.0; c = 0.0;
    } else if (r == 180.0) {
        s = 0.0; c = -1.0;
    } else if (r == 270.0) {
        s = -1.0; c = 0.0;
    } else {
        s = std::sin(deg_to_rad(r));
        c = std::cos(deg_to_rad(r));
    }
}

/// A tool orientation. Planar: rotation by theta about the out-of-plane
/// axis. Spherical: rotation about z by theta composed after rotation about
/// y by phi (R = Rz(theta) * Ry(phi)). Angles in degrees.
struct Orientation {
    int ndim = 2;
    double theta_deg = 0.0;
    double phi_deg = 0.0;

    static Orientation planar(double theta_deg) {
        Orientation o;
        o.ndim = 2;
        o.theta_deg = theta_deg;
        o.validate();
        return o;
    }

    static Orientation spherical(double theta_deg, double phi_deg) {
        Orientation o;
        o.ndim = 3;
        o.theta_deg = theta_deg;
        o.phi_deg = phi_deg;
        o.validate();
        return o;
    }

    void validate() const {
        if (ndim != 2 && ndim != 3) throw StructuralError("Orientation: ndim must be 2 or 3");
        if (theta_deg < 0.0 || theta_deg >= 360.0)
            throw RangeError("Orientation: theta must lie in [0, 360)");
        if (ndim == 2) {
            if (phi_deg != 0.0) throw RangeError("Orientation: planar phi must be 0");
        } else {
            if (phi_deg < 0.0 || phi_deg > 180.0)
                throw RangeError("Orientation: phi must lie in [0, 180]");
        }
    }

    /// Row-major 3x3 rotation matrix (2D uses the upper-left 2x2 block).
    std::array<std::array<double, 3>, 3> matrix() const {
        double st, ct, sp, cp;
        sincos_deg(theta_deg, st, ct);
        sincos_deg(ndim == 3 ? phi_deg : 0.0, sp, cp);
        // Rz(theta) * Ry(phi)
        return {{{ct * cp, -st, ct * sp},
                 {st * cp, ct, st * sp},
                 {-sp, 0.0, cp}}};
    }

    bool operator==(const Orientation& o) const {
        return ndim == o.ndim && theta_deg == o.theta_deg && phi_deg == o.phi_deg;
    }

    /// Lexicographic by (phi, theta); gives stacks a canonical order.
    bool operator<(const Orientation& o) const {
        if (phi_deg != o.phi_deg) return phi_deg < o.phi_deg;
        return theta_deg < o.theta_deg;
    }
};

inline std::array<double, 3> apply_rotation(const std::array<std::array<double, 3>, 3>& R,
                                            const std::array<double, 3>& v) {
    return {R[0][0] * v[0] + R[0][1] * v[1] + R[0][2] * v[2],
            R[1][0] * v[0] + R[1][1] * v[1] + R[1][2] * v[2],
            R[2][0] * v[0] + R[2][1] * v[1] + R[2][2] * v[2]};
}

inline std::array<std::array<double, 3>, 3> transpose(
    const std::array<std::array<double, 3>, 3>& R) {
    return {{{R[0][0], R[1][0], R[2][0]},
             {R[0][1], R[1][1], R[2][1]},
             {R[0][2], R[1][2], R[2][2]}}};
}

/// Planar: `count` angles at 360/count separation starting at 0 (half-open
/// circle). Spherical: the tensor grid of count_theta such angles with
/// count_phi values evenly spanning the closed arc [0, 180].
inline std::vector<Orientation> equispaced_orientations(int count_theta, int count_phi = 0) {
    if (count_theta < 1) throw ConfigError("equispaced_orientations: count_theta must be >= 1");
    std::vector<Orientation> out;
    if (count_phi <= 0) {
        out.reserve(static_cast<std::size_t>(count_theta));
        for (int i = 0; i < count_theta; ++i)
            out.push_back(Orientation::planar(360.0 * i / count_theta));
        return out;
    }
    out.reserve(static_cast<std::size_t>(count_theta) * count_phi);
    for (int j = 0; j < count_phi; ++j) {
        double phi = (count_phi == 1) ? 0.0 : 180.0 * j / (count_phi - 1);
        for (int i = 0; i < count_theta; ++i)
            out.push_back(Orientation::spherical(360.0 * i / count_theta, phi));
    }
    return out;
}

/// Knot angles for periodic angular interpolation specified as a closed
/// count over one full turn: `count` nominal samples on [0, 360] collapse to
/// count-1 distinct angles at 360/(count-1) separation (the endpoint repeats
/// the start). E.g. 37 -> 36 angles every 10 degrees.
inline std::vector<double> periodic_knot_angles(int count) {
    if (count < 2) throw ConfigError("periodic_knot_angles: count must be >= 2");
    int n = count - 1;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = 360.0 * i / n;
    return out;
}

}  // namespace cmfield
