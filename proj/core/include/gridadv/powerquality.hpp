#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>

#include "gridadv/random.hpp"
#include "gridadv/tensor.hpp"
#include "gridadv/train.hpp"

namespace gridadv::pq {

/// One-hot order is the enumerator order.
enum class SignalClass : std::size_t { normal = 0, sag = 1, impulse = 2, distortion = 3 };

inline constexpr std::size_t kClassCount = 4;
inline constexpr std::array<std::string_view, kClassCount> kClassNames{"normal", "sag", "impulse",
                                                                       "distortion"};

struct Range {
    double lo;
    double hi;
};

/// Waveform generator settings. Amplitudes are per-unit.
struct SignalParams {
    std::size_t length = 256;
    std::size_t cycle_length = 64;
    Range amplitude{0.95, 1.05};
    /// Phase of the fundamental at n = 0, radians. Windows start at a
    /// positive-going zero crossing by default.
    Range phase{0.0, 0.0};
    double noise_sigma = 0.01;

    Range sag_depth{0.3, 0.8};
    /// Sag duration in fundamental cycles.
    Range sag_cycles{0.5, 2.0};

    std::size_t impulse_count_min = 1;
    std::size_t impulse_count_max = 3;
    Range impulse_magnitude{0.8, 1.5};
    std::size_t impulse_width_min = 4;
    std::size_t impulse_width_max = 8;

    /// Every listed odd harmonic is added with its own coefficient and phase.
    std::array<std::size_t, 3> harmonics{3, 5, 7};
    Range harmonic_coefficient{0.05, 0.2};
};

/// Throws ConfigError on inverted ranges, a length that is not a whole number
/// of cycles, or a sag depth of 1 or more.
void validate(const SignalParams& params);

/// One waveform of `cls`:
///
///   normal      v[n] = A sin(2 pi n / cycle + phi) + noise[n]
///   sag         normal * (1 - alpha * [n1 <= n < n2])
///   impulse     normal + random-sign rectangular spikes
///   distortion  normal + sum_h A c_h sin(2 pi h n / cycle + phi_h)
///
/// A, phi and the noise are drawn first, so a disturbance whose magnitude is
/// forced to zero reproduces the normal waveform from the same rng state.
Tensor gen_signal(SignalClass cls, const SignalParams& params, RandomSource& rng);

/// 4 * n_per_class samples in class-major order with one-hot targets. Each
/// signal uses its own child stream of `seed`.
Dataset gen_dataset(std::size_t n_per_class, const SignalParams& params, std::uint64_t seed);

/// `# gridadv-pq v1 L=<length>` then `label_index,v_0,...,v_{L-1}` per row,
/// values in shortest round-trip decimal form.
void write_csv(std::ostream& out, const Dataset& ds);
Dataset read_csv(std::string_view text);

}  // namespace gridadv::pq
