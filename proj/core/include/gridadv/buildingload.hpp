#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridadv/normalization.hpp"
#include "gridadv/tensor.hpp"
#include "gridadv/train.hpp"

namespace gridadv::building {

/// Parametric office-building simulator at 10-minute resolution.
///
/// Feature columns, in order:
///   0           outdoor temperature [degC]
///   1           solar radiation, normalised to [0, 1]
///   2           occupancy fraction [0, 1]
///   3..3+Z-1    zone heating/cooling setpoints [degC]
///   3+Z, 4+Z    hour-of-day phase (sin, cos)
///
/// Load [kW] at step t:
///   base + hvac_gain * |T_out - mean setpoint| * (occupancy + 0.2)
///        + plug_gain * occupancy + N(0, load_noise)
///
/// Temperature and occupancy noise are AR(1) processes with the given
/// marginal standard deviations; load noise is white.
struct BuildingParams {
    std::size_t steps = 52'560;
    std::size_t steps_per_day = 144;
    std::size_t zones = 4;

    double annual_mean_c = 12.0;
    double annual_swing_c = 8.0;
    double diurnal_swing_c = 5.0;
    double temp_noise_c = 0.8;
    double temp_noise_corr = 0.95;

    double occupancy_peak = 0.9;
    double weekend_peak = 0.15;
    double occupancy_floor = 0.05;
    double occupancy_noise = 0.03;
    double occupancy_noise_corr = 0.9;

    double setpoint_occupied_c = 22.0;
    double setpoint_unoccupied_c = 18.0;
    double zone_offset_c = 0.5;

    double base_load_kw = 200.0;
    double hvac_gain_kw_per_c = 15.0;
    double plug_gain_kw = 600.0;
    double load_noise_kw = 10.0;

    std::size_t feature_count() const { return 5 + zones; }
};

void validate(const BuildingParams& params);

std::vector<std::string> feature_names(const BuildingParams& params);
std::size_t occupancy_column();
std::vector<std::size_t> setpoint_columns(const BuildingParams& params);

struct BuildingTable {
    Tensor features;  // [N x F]
    std::vector<double> load;
    std::vector<std::string> names;
};

/// Deterministic in `seed`. Day 0 is a Monday.
BuildingTable simulate_year(const BuildingParams& params, std::uint64_t seed);

/// Nominal occupancy schedule without noise at a step.
double scheduled_occupancy(const BuildingParams& params, std::size_t step);

/// Sliding windows of raw (physical-unit) features and their next-step load.
struct SequenceDataset {
    std::size_t steps = 0;
    Tensor windows;  // [W x T x F]
    Tensor targets;  // [W]
    std::vector<std::size_t> window_start;
    Normalization norm;

    std::size_t size() const { return window_start.size(); }
    /// Inputs and targets mapped through `norm`.
    Dataset normalized() const;
};

/// Windows of length T at stride 1; window i covers steps i..i+T-1 and its
/// target is load[i+T], giving N - T windows. With `fit_normalization` the
/// min-max record is fitted on these windows, otherwise it is the identity.
SequenceDataset make_windows(const BuildingTable& table, std::size_t steps,
                             bool fit_normalization = true);

Normalization fit_normalization(const Tensor& windows, const Tensor& targets);

/// Shuffles windows with the seed, takes floor(W * fraction) as the test side,
/// and refits normalization on the train side for both halves.
std::pair<SequenceDataset, SequenceDataset> holdout_split(const SequenceDataset& ds,
                                                          double test_fraction,
                                                          std::uint64_t seed);

Tensor normalize_windows(const Tensor& windows, const Normalization& norm);
Tensor denormalize_windows(const Tensor& windows, const Normalization& norm);
Tensor normalize_targets(const Tensor& targets, const Normalization& norm);
Tensor denormalize_targets(const Tensor& targets, const Normalization& norm);

/// Flat positions of `columns` at every timestep of a [T x F] window.
std::vector<std::size_t> window_mask(const std::vector<std::size_t>& columns, std::size_t steps,
                                     std::size_t features);

/// `# gridadv-building v1 F=<F> features=<names>` then
/// `step,feat_0,...,feat_{F-1},load` and one row per step.
void write_csv(std::ostream& out, const BuildingTable& table);
BuildingTable read_csv(std::string_view text);

}  // namespace gridadv::building
