#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "cmfield/common.hpp"

namespace cmfield {

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) {
        if (p > (1 << 29)) throw ResourceError("next_pow2: transform size overflow");
        p <<= 1;
    }
    return p;
}

/// Iterative radix-2 Cooley-Tukey; length must be a power of two.
inline void fft_pow2(std::complex<double>* a, int n, bool inverse) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * std::numbers::pi / len * (inverse ? 1.0 : -1.0);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int j = 0; j < len / 2; ++j) {
                std::complex<double> u = a[i + j];
                std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (int i = 0; i < n; ++i) a[i] /= static_cast<double>(n);
}

/// In-place FFT along each axis of a row-major nd array with pow2 dims.
inline void fft_nd(std::vector<std::complex<double>>& a, const std::array<int, 3>& dims, int ndim,
                   bool inverse) {
    std::int64_t total = static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
    std::vector<std::complex<double>> line;
    std::array<std::int64_t, 3> stride{static_cast<std::int64_t>(dims[1]) * dims[2], dims[2], 1};
    for (int axis = 0; axis < ndim; ++axis) {
        int n = dims[axis];
        if (n == 1) continue;
        line.resize(static_cast<std::size_t>(n));
        std::int64_t st = stride[axis];
        std::int64_t n_lines = total / n;
        for (std::int64_t l = 0; l < n_lines; ++l) {
            // base offset of the l-th line perpendicular to `axis`
            std::int64_t rem = l, base = 0;
            for (int ax = 2; ax >= 0; --ax) {
                if (ax == axis) continue;
                std::int64_t d = dims[ax];
                base += (rem % d) * stride[ax];
                rem /= d;
            }
            for (int i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(base + i * st)];
            fft_pow2(line.data(), n, inverse);
            for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(base + i * st)] = line[static_cast<std::size_t>(i)];
        }
    }
}

/// Full linear convolution of two real row-major nd arrays (output dims =
/// da + db - 1 per axis). Both inputs ride one complex transform: a in the
/// real channel, b in the imaginary channel; their spectra separate by
/// Hermitian symmetry, so the whole product costs two transforms.
inline std::vector<double> fft_convolve_full(const std::vector<double>& a,
                                             const std::array<int, 3>& da,
                                             const std::vector<double>& b,
                                             const std::array<int, 3>& db, int ndim,
                                             std::array<int, 3>* out_dims = nullptr) {
    std::array<int, 3> dc{1, 1, 1}, pad{1, 1, 1};
    std::int64_t n_pad = 1;
    for (int ax = 0; ax < ndim; ++ax) {
        dc[ax] = da[ax] + db[ax] - 1;
        pad[ax] = next_pow2(dc[ax]);
        n_pad *= pad[ax];
    }
    if (n_pad > (std::int64_t{1} << 26))
        throw ResourceError("fft_convolve_full: padded transform exceeds the size cap");

    std::vector<std::complex<double>> z(static_cast<std::size_t>(n_pad), {0.0, 0.0});
    auto pack = [&](const std::vector<double>& src, const std::array<int, 3>& d, bool imag) {
        for (int i = 0; i < d[0]; ++i)
            for (int j = 0; j < d[1]; ++j)
                for (int k = 0; k < d[2]; ++k) {
                    double v = src[static_cast<std::size_t>((static_cast<std::int64_t>(i) * d[1] + j) * d[2] + k)];
                    auto& dst = z[static_cast<std::size_t>((static_cast<std::int64_t>(i) * pad[1] + j) * pad[2] + k)];
                    if (imag)
                        dst.imag(dst.imag() + v);
                    else
                        dst.real(dst.real() + v);
                }
    };
    pack(a, da, false);
    pack(b, db, true);
    fft_nd(z, pad, ndim, false);

    // FA(k) = (Z(k) + conj(Z(-k)))/2, FB(k) = (Z(k) - conj(Z(-k)))/(2i);
    // FA*FB = (Z(k)^2 - conj(Z(-k))^2) / 4i
    std::vector<std::complex<double>> prod(static_cast<std::size_t>(n_pad));
    for (int i = 0; i < pad[0]; ++i)
        for (int j = 0; j < pad[1]; ++j)
            for (int k = 0; k < pad[2]; ++k) {
                std::int64_t idx = (static_cast<std::int64_t>(i) * pad[1] + j) * pad[2] + k;
                int ni = (pad[0] - i) % pad[0];
                int nj = (pad[1] - j) % pad[1];
                int nk = (pad[2] - k) % pad[2];
                std::int64_t nidx = (static_cast<std::int64_t>(ni) * pad[1] + nj) * pad[2] + nk;
                std::complex<double> zk = z[static_cast<std::size_t>(idx)];
                std::complex<double> znc = std::conj(z[static_cast<std::size_t>(nidx)]);
                std::complex<double> num = zk * zk - znc * znc;
                prod[static_cast<std::size_t>(idx)] =
                    std::complex<double>(num.imag() * 0.25, -num.real() * 0.25);
            }
    fft_nd(prod, pad, ndim, true);

    std::int64_t n_out = static_cast<std::int64_t>(dc[0]) * dc[1] * dc[2];
    std::vector<double> out(static_cast<std::size_t>(n_out));
    for (int i = 0; i < dc[0]; ++i)
        for (int j = 0; j < dc[1]; ++j)
            for (int k = 0; k < dc[2]; ++k)
                out[static_cast<std::size_t>((static_cast<std::int64_t>(i) * dc[1] + j) * dc[2] + k)] =
                    prod[static_cast<std::size_t>((static_cast<std::int64_t>(i) * pad[1] + j) * pad[2] + k)].real();
    if (out_dims) *out_dims = dc;
    return out;
}

}  // namespace cmfield
