#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mdrclt {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Counter-mode seed for replication `index` under `master`. Two rounds so that
// neighbouring masters do not produce overlapping streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

using Engine = std::mt19937_64;

// Uniform on [0,1) from the top 53 bits. std::uniform_real_distribution is
// not specified bit-for-bit across standard libraries; this is.
inline double uniform01(Engine& eng) noexcept {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller. Only used by self-tests of the KS machinery.
inline double standard_normal(Engine& eng) noexcept {
    double u1 = uniform01(eng);
    while (u1 <= 0.0) u1 = uniform01(eng);
    const double u2 = uniform01(eng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace mdrclt
