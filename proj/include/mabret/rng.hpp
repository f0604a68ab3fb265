#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mabret {

// All randomness flows through these helpers so that a run is reproducible
// bit-for-bit from a single master seed. Distinct consumers (split, init,
// shuffle, bandit, clustering, ...) derive independent streams by name, so
// swapping one strategy never perturbs another's draws.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive a child seed from (master, purpose, index). FNV-1a over the purpose
/// string mixed through splitmix64; stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = a ^ h;
    std::uint64_t b = splitmix64(s);
    s = b + (index * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

/// Uniform double in [0,1) using the top 53 bits; avoids libstdc++-specific
/// distribution internals so sequences are portable.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n). n must be >= 1.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    // Multiply-shift; bias is negligible for the n used here (<< 2^32) but we
    // still reject the tail to keep draws exactly uniform.
    std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
        std::uint64_t r = rng();
        if (r >= threshold) return r % n;
    }
}

/// Standard normal via Box-Muller (cosine branch only, deterministic).
inline double normal01(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

template <typename T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace mabret
