#pragma once

#include <array>
#include <cmath>
#include <cstdint>

/// Counter-based random numbers (Philox4x32-10).
///
/// Every draw is a pure function of (seed; stream, a, b, axis), so a given
/// particle/step/axis always sees the same variate no matter how work is
/// split across threads, and particle i keeps its noise stream when the
/// ensemble size or the recording layout changes.
namespace chaoslab::rng {

/// Logical sub-streams.  Keeping purposes disjoint at the counter level
/// means e.g. bootstrap resampling can never collide with step noise.
enum class Stream : uint32_t {
    Init      = 0, ///< initial-condition sampling       (a = particle, axis)
    StepNoise = 1, ///< Brownian increments              (a = particle, b = step, axis)
    Bootstrap = 2, ///< resampling indices               (a = replicate, b = draw)
    Slice     = 3, ///< random projection directions     (a = slice, axis)
    Reference = 4, ///< sampling from reference measures (a = sample, axis)
    Scratch   = 5  ///< anything local to one algorithm
};

namespace detail {

inline void mulhilo32(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = uint64_t(a) * uint64_t(b);
    hi = uint32_t(p >> 32);
    lo = uint32_t(p);
}

} // namespace detail

/// One Philox4x32-10 block: 128 bits of counter -> 128 pseudo-random bits.
inline std::array<uint32_t, 4> philox4x32(uint64_t key, std::array<uint32_t, 4> ctr) {
    constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    uint32_t k0 = uint32_t(key), k1 = uint32_t(key >> 32);
    for (int round = 0; round < 10; ++round) {
        uint32_t hi0, lo0, hi1, lo1;
        detail::mulhilo32(M0, ctr[0], hi0, lo0);
        detail::mulhilo32(M1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += W0;
        k1 += W1;
    }
    return ctr;
}

/// SplitMix64 — used to derive independent sub-seeds (per run, per study).
inline uint64_t mix(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace detail {

inline std::array<uint32_t, 4> block(uint64_t seed, Stream s, uint32_t a, uint32_t b,
                                     uint32_t axis) {
    return philox4x32(seed, {uint32_t(s), a, b, axis});
}

inline uint64_t to_u64(uint32_t hi, uint32_t lo) { return (uint64_t(hi) << 32) | lo; }

} // namespace detail

/// Uniform draw in [0, 1) with 53 random bits.
inline double uniform(uint64_t seed, Stream s, uint32_t a, uint32_t b, uint32_t axis = 0) {
    auto r = detail::block(seed, s, a, b, axis);
    return double(detail::to_u64(r[0], r[1]) >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline uint64_t uniform_index(uint64_t seed, Stream s, uint32_t a, uint32_t b, uint64_t n) {
    auto r = detail::block(seed, s, a, b, 0);
    // Multiply-shift reduction; the modulo bias at n << 2^64 is negligible.
    return uint64_t((static_cast<unsigned __int128>(detail::to_u64(r[0], r[1])) * n) >> 64);
}

/// Standard normal draw (Box–Muller, cosine branch of one Philox block).
inline double normal(uint64_t seed, Stream s, uint32_t a, uint32_t b, uint32_t axis = 0) {
    auto r = detail::block(seed, s, a, b, axis);
    // u1 in (0, 1] so the log is finite; u2 in [0, 1).
    double u1 = double((detail::to_u64(r[0], r[1]) >> 11) + 1) * 0x1.0p-53;
    double u2 = double(detail::to_u64(r[2], r[3]) >> 11) * 0x1.0p-53;
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

} // namespace chaoslab::rng
