#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace ose {

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream key from a parent seed and a path of
/// integer labels (trial index, column index, purpose tag, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t key = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t label : path) key = mix64(key ^ mix64(label + 0x9e3779b97f4a7c15ULL));
    return key;
}

/// Stream labels used across modules so that independent draws never share
/// a key by accident.
namespace stream {
inline constexpr std::uint64_t column = 0x636f6c;     // "col"
inline constexpr std::uint64_t v_indices = 0x76;      // "v"
inline constexpr std::uint64_t signs = 0x736967;      // "sig"
inline constexpr std::uint64_t mixture = 0x6d6978;    // "mix"
inline constexpr std::uint64_t retry = 0x727479;      // "rty"
inline constexpr std::uint64_t trial = 0x74726c;      // "trl"
inline constexpr std::uint64_t sketch = 0x736b74;     // "skt"
inline constexpr std::uint64_t instance = 0x696e73;   // "ins"
inline constexpr std::uint64_t subspace = 0x737562;   // "sub"
inline constexpr std::uint64_t attack = 0x61746b;     // "atk"
inline constexpr std::uint64_t family = 0x66616d;     // "fam"
} // namespace stream

/// Counter-based generator: the i-th output is mix64(key + (i+1)·γ), so a
/// stream is fully determined by its 64-bit key and position. All draws are
/// implemented here rather than through <random> distributions so results are
/// identical across standard libraries.
class Rng {
public:
    explicit constexpr Rng(std::uint64_t key) noexcept : state_(key) {}

    constexpr std::uint64_t next_u64() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform integer in [0, bound); bound must be positive. Lemire's
    /// multiply-shift with rejection, unbiased.
    std::uint64_t uniform_index(std::uint64_t bound) noexcept {
        std::uint64_t x = next_u64();
        __uint128_t prod = static_cast<__uint128_t>(x) * bound;
        auto low = static_cast<std::uint64_t>(prod);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = next_u64();
                prod = static_cast<__uint128_t>(x) * bound;
                low = static_cast<std::uint64_t>(prod);
            }
        }
        return static_cast<std::uint64_t>(prod >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Rademacher sign.
    int sign() noexcept { return (next_u64() >> 63) != 0 ? -1 : 1; }

    /// Standard normal via the Marsaglia polar method (one value per call).
    double normal() noexcept {
        double u = 0.0;
        double v = 0.0;
        double s = 0.0;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        return u * std::sqrt(-2.0 * std::log(s) / s);
    }

private:
    std::uint64_t state_;
};

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(seed, path));
}

} // namespace ose
