#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cmfield {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numeric argument is outside its legal domain (bad angle, NaN, ...).
struct RangeError : Error {
    using Error::Error;
};

/// Shapes, lattices or dimensions do not line up.
struct StructuralError : Error {
    using Error::Error;
};

/// Invalid configuration value or inconsistent run description.
struct ConfigError : Error {
    using Error::Error;
};

/// An operation would exceed a size or work budget.
struct ResourceError : Error {
    using Error::Error;
};

/// Training diverged or produced non-finite values.
struct TrainingError : Error {
    using Error::Error;
};

/// A file or stream does not match its declared format.
struct FormatError : Error {
    using Error::Error;
};

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// ---- little-endian binary helpers (file payloads are LE regardless of host) ----

inline void store_le64(unsigned char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
}

inline std::uint64_t load_le64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

inline void store_le_f64(unsigned char* p, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    store_le64(p, v);
}

inline double load_le_f64(const unsigned char* p) {
    std::uint64_t v = load_le64(p);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; results
/// must be written to per-index slots so the outcome is independent of
/// scheduling. threads == 0 picks the hardware count.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn, unsigned threads = 0) {
    if (n <= 0) return;
    unsigned hw = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    if (hw <= 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    unsigned workers = static_cast<unsigned>(std::min<std::int64_t>(hw, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::int64_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::int64_t lo = w * chunk;
        std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace cmfield
