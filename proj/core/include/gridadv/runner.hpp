#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridadv/attack.hpp"
#include "gridadv/config.hpp"
#include "gridadv/metrics.hpp"
#include "gridadv/normalization.hpp"
#include "gridadv/train.hpp"

namespace gridadv {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitThreshold = 4;

inline constexpr double kGradcheckThreshold = 1e-4;

/// Every stream the pipeline draws from, all derived from the root seed.
struct SeedPlan {
    std::uint64_t root = 0;
    std::uint64_t data = 0;
    std::uint64_t split = 0;
    std::uint64_t victim = 0;
    std::uint64_t surrogate = 0;
    std::vector<std::uint64_t> sweep;
};

SeedPlan plan_seeds(const ExperimentConfig& config);
nlohmann::json seeds_to_json(const SeedPlan& seeds);

/// Model-facing train/test split. `norm` is set for the building-load task,
/// whose inputs and targets are min-max scaled with training statistics.
struct TaskData {
    Dataset train;
    Dataset test;
    std::optional<Normalization> norm;
};

/// Raw dataset for the power-quality task.
Dataset generate_pq(const ExperimentConfig& config, const SeedPlan& seeds);
/// Raw simulated year for the building-load task.
building::BuildingTable generate_building(const ExperimentConfig& config, const SeedPlan& seeds);

TaskData split_pq(const ExperimentConfig& config, const SeedPlan& seeds, const Dataset& raw);
TaskData split_building(const ExperimentConfig& config, const SeedPlan& seeds,
                        const building::BuildingTable& raw);
/// Generates and splits in memory.
TaskData prepare_task_data(const ExperimentConfig& config, const SeedPlan& seeds);

Architecture model_architecture(const ExperimentConfig& config, const ModelConfig& model);
/// The model's hyperparameters with its explicit seed, or `derived` when unset.
Hyperparams model_hyper(const ExperimentConfig& config, const ModelConfig& model,
                        std::uint64_t derived);

TrainedModel train_victim(const ExperimentConfig& config, const SeedPlan& seeds,
                          const TaskData& data);
Model train_attacker_surrogate(const ExperimentConfig& config, std::uint64_t seed,
                               const TaskData& data);

/// Attack spec with the configured mask and clip box resolved for the task.
AttackSpec base_attack_spec(const ExperimentConfig& config, const TaskData& data);
/// Input-deviation groups reported for the task (empty for power quality).
std::vector<FeatureGroup> deviation_groups(const ExperimentConfig& config);

/// Clean and adversarial victim metrics for a crafted set, plus deviations.
nlohmann::json evaluate_attack(const ExperimentConfig& config, const Model& victim,
                               const TaskData& data, const Tensor& adversarial_inputs);

/// Sweep with one surrogate per sweep seed, each trained once and reused.
SweepResult sweep_experiment(const ExperimentConfig& config, const SeedPlan& seeds,
                             const Model& victim, const TaskData& data);

struct ManifestEntry {
    std::string path;
    std::string sha256;
};

/// Writes manifest.json listing every other regular file in `dir`, sorted.
nlohmann::json write_manifest(const std::filesystem::path& dir, const ExperimentConfig& config,
                              const SeedPlan& seeds, std::string_view subcommand);

/// SHA-256 of the canonical resolved config.
std::string config_sha256(const ExperimentConfig& config);

std::string_view tool_version();

const std::vector<std::string_view>& subcommands();

/// Runs one subcommand against `config.output_dir`. Results go to `out`,
/// progress lines and errors to `log`. Returns one of the kExit* codes.
int run(std::string_view subcommand, const ExperimentConfig& config, std::ostream& out,
        std::ostream& log);

}  // namespace gridadv
