#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridadv/attack.hpp"
#include "gridadv/buildingload.hpp"
#include "gridadv/powerquality.hpp"
#include "gridadv/train.hpp"

namespace gridadv {

enum class Task { power_quality, building_load };

std::string_view to_string(Task task);
Task task_from_string(std::string_view name);

/// Model shape and training recipe for either the victim or the surrogate.
struct ModelConfig {
    /// MLP hidden widths (power-quality task).
    std::vector<std::size_t> hidden;
    /// RNN hidden width and readout widths (building-load task).
    std::size_t rnn_hidden = 0;
    std::vector<std::size_t> readout;
    double dropout = 0.0;
    Hyperparams hyper;
    /// Explicit seed; when absent it is derived from the root seed.
    std::optional<std::uint64_t> seed;
};

struct ExperimentConfig {
    Task task = Task::power_quality;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    unsigned threads = 1;

    // [data]
    pq::SignalParams signal;
    std::size_t n_per_class = 200;
    building::BuildingParams building;
    std::size_t window = 12;
    double test_fraction = 0.25;

    ModelConfig model;
    ModelConfig surrogate;

    // [attack]
    double epsilon = 0.1;
    double gamma = 0.4;
    Kernel kernel = Kernel::gradient_sign;
    RankBy rank = RankBy::absolute;
    /// Attackable feature groups for sequence inputs: "occupancy", "setpoints".
    std::vector<std::string> attack_features;
    bool clip = false;
    /// Number of test samples to perturb; 0 means all of them.
    std::size_t n_adv = 0;

    // [sweep]
    std::vector<double> epsilon_list;
    std::vector<double> gamma_list;
    std::size_t sweep_seeds = 5;
};

/// Defaults for a task before any key is applied.
ExperimentConfig default_config(Task task);

/// Parses the line-oriented format
///
///   # comment
///   task = power-quality
///   seed = 7
///   [sweep]
///   epsilon_list = 0.01,0.03,0.05,0.1
///
/// Keys before the first section header are top-level. Unknown keys,
/// duplicate keys, and malformed values raise ParseError with the line
/// number. `task` must be present; everything else falls back to the task
/// defaults.
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::string& path);

/// Help text listing every key with its defaults for both tasks.
std::string config_reference();

/// Fully resolved configuration, used for provenance and config hashing.
/// `threads` and `output_dir` are left out: they never change results.
nlohmann::json config_to_json(const ExperimentConfig& config);

}  // namespace gridadv
