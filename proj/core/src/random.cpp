#include "gridadv/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "gridadv/error.hpp"

namespace gridadv {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
    return mix64(parent ^ mix64(fnv1a64(label)));
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index) {
    return mix64(derive_seed(parent, label) ^ mix64(index));
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t RandomSource::next() { return engine_(); }

double RandomSource::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double RandomSource::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RandomSource::normal() {
    // 1 - uniform() lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomSource::normal(double mean, double sigma) { return mean + sigma * normal(); }

std::uint64_t RandomSource::below(std::uint64_t n) {
    if (n == 0) throw BoundsError("RandomSource::below(0)");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
}

std::int64_t RandomSource::between(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw BoundsError("RandomSource::between: empty range");
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

RandomSource RandomSource::child(std::string_view label) const {
    return RandomSource(derive_seed(seed_, label));
}

RandomSource RandomSource::child(std::string_view label, std::uint64_t index) const {
    return RandomSource(derive_seed(seed_, label, index));
}

std::vector<std::size_t> seeded_shuffle(std::size_t n, RandomSource& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

}  // namespace gridadv
