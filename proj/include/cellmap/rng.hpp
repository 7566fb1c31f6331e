#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>

namespace cellmap {

/// SplitMix64 step (Steele, Lea & Flood constants). Used to expand seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Folds a base seed and a list of stream identifiers into one seed.
/// derive_seed(s, {a, b}) is stable across platforms and builds.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream);

/// xoshiro256** 1.0 seeded through SplitMix64.
///
/// All derived draws (uniform reals, bounded integers, normals, shuffles) are
/// implemented here rather than through <random> distributions, whose output
/// is implementation-defined. Every plan and synthetic slide therefore
/// reproduces bit-for-bit on any conforming compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();

    /// Uniform on [0, 1) with 53 random mantissa bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n); rejection sampling, no modulo bias. n > 0.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via the Box-Muller transform (one draw per call).
    double normal();
    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    std::array<std::uint64_t, 4> s_{};
};

/// Fisher-Yates shuffle walking from the back.
template <typename T>
void shuffle(std::span<T> items, Rng& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

} // namespace cellmap
