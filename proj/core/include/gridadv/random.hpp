#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace gridadv {

/// Deterministic random source.
///
/// The generator is std::mt19937_64, whose transition function and output
/// are fixed by the C++ standard, so a seed yields the same raw stream on
/// every conforming platform. Distribution sampling is done here rather than
/// through <random> distributions, whose algorithms are implementation
/// defined:
///
///   uniform()     = (next() >> 11) * 2^-53                  in [0, 1)
///   normal()      = Box-Muller on two uniform() draws, no caching
///   below(n)      = rejection sampling on next() for an unbiased [0, n)
///
/// A source is single-owner. Use child() to hand independent streams to
/// other threads or subsystems.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next();
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    double normal(double mean, double sigma);
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);
    /// Uniform integer in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi);

    /// Independent source seeded with derive_seed(seed(), label).
    RandomSource child(std::string_view label) const;
    RandomSource child(std::string_view label, std::uint64_t index) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// splitmix64 finaliser; a bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t x);

/// Child seed = mix64(parent ^ mix64(fnv1a64(label))).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index);

/// Fisher-Yates permutation of 0..n-1 driven by rng.
std::vector<std::size_t> seeded_shuffle(std::size_t n, RandomSource& rng);

}  // namespace gridadv
