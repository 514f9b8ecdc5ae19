#pragma once
#include <cmath>
#include <cstdint>

namespace gsinfonce::rng {

// Counter-based random stream built on the SplitMix64 finalizer
// (Steele, Lea & Flood / Vigna). Every draw is a pure function of
// (seed, index), so streams can be sampled in any order, sliced for
// parallel work, and reproduced exactly from a logged seed. No global
// or platform-default generator is ever used.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kDeriveSalt = 0xD1B54A32D192ED03ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Draw `index` of the stream keyed by `seed`.
constexpr std::uint64_t bits_at(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed + (index + 1) * kGolden);
}

// Derive an independent child seed from (seed, tag, index). Used for the
// trainer's per-step streams and the probe's per-repeat streams.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t tag,
                               std::uint64_t index = 0) {
    return mix64(mix64(seed ^ (tag + 1) * kGolden) + (index + 1) * kDeriveSalt);
}

// Uniform double in [0, 1), 53-bit resolution.
inline double uniform_at(std::uint64_t seed, std::uint64_t index) {
    return static_cast<double>(bits_at(seed, index) >> 11) * 0x1.0p-53;
}

// Uniform double in (0, 1]; safe as a log() argument.
inline double uniform_pos_at(std::uint64_t seed, std::uint64_t index) {
    return static_cast<double>((bits_at(seed, index) >> 11) + 1) * 0x1.0p-53;
}

// Standard normal draw via the Box-Muller transform (cosine branch).
// Draw k consumes stream indices 2k and 2k+1.
inline double normal_at(std::uint64_t seed, std::uint64_t index) {
    const double u1 = uniform_pos_at(seed, 2 * index);
    const double u2 = uniform_at(seed, 2 * index + 1);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Uniform integer in [0, n). Modulo bias is below 2^-32 for the desk-scale
// n used here.
inline std::uint64_t uniform_index_at(std::uint64_t seed, std::uint64_t index,
                                      std::uint64_t n) {
    return bits_at(seed, index) % n;
}

} // namespace gsinfonce::rng
