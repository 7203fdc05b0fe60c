#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridadv/attack.hpp"
#include "gridadv/nn.hpp"
#include "gridadv/normalization.hpp"
#include "gridadv/train.hpp"

namespace gridadv {

/// 100 * matches / total. Throws ContractError on empty or unequal inputs.
double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

struct MapeResult {
    double percent = 0.0;
    std::size_t used = 0;
    /// Entries skipped because |var| < threshold.
    std::size_t skipped = 0;
};

/// (1/N) sum |var* - var| / |var| * 100 over entries with |var| >= threshold.
/// Throws DegenerateInputError when every entry is below the threshold.
MapeResult mape(std::span<const double> var_star, std::span<const double> var,
                double threshold = 1e-8);
MapeResult mape(const Tensor& var_star, const Tensor& var, double threshold = 1e-8);

/// Clean-or-adversarial score of a victim on `inputs` paired with
/// `test.targets`: accuracy [%] for one-hot targets, otherwise MAPE [%] of
/// predictions against targets, both mapped back through `target_scale`
/// when it is given.
double evaluate_metric(const Model& victim, const Tensor& inputs, const Dataset& test,
                       const std::optional<MinMax>& target_scale = std::nullopt);

/// A named set of feature columns whose input deviation is reported.
struct FeatureGroup {
    std::string name;
    std::vector<std::size_t> columns;
};

/// MAPE between adversarial and clean inputs over the group's columns, in
/// physical units when `scale` is given. Inputs are [N x ... x F].
MapeResult feature_deviation(const Tensor& adversarial, const Tensor& clean,
                             const FeatureGroup& group, const std::vector<MinMax>* scale);

struct SweepConfig {
    std::string task;
    std::vector<double> epsilons;
    std::vector<double> gammas;
    std::vector<std::uint64_t> seeds;
    /// Kernel, mask, clip and rank for every cell; epsilon and gamma are
    /// replaced per cell.
    AttackSpec base_spec;
    std::vector<FeatureGroup> groups;
    /// Present for regression tasks: targets and features are scored in
    /// physical units.
    std::optional<Normalization> norm;
    unsigned threads = 1;
};

struct SweepCell {
    double epsilon = 0.0;
    double gamma = 0.0;
    std::vector<double> per_seed;
    double metric = 0.0;
    /// Mean input-deviation MAPE per feature group.
    std::map<std::string, double> deviation;
};

struct SweepResult {
    std::string task;
    std::string metric_name;
    std::vector<double> epsilons;
    std::vector<double> gammas;
    std::vector<std::uint64_t> seeds;
    std::size_t samples = 0;
    double clean_metric = 0.0;
    /// Row-major over (epsilon, gamma).
    std::vector<SweepCell> cells;

    const SweepCell& at(std::size_t eps_index, std::size_t gamma_index) const {
        return cells[eps_index * gammas.size() + gamma_index];
    }
};

/// Produces adversarial versions of every test input for one attack spec and
/// seed. It must be safe to call concurrently.
using CraftFn = std::function<Tensor(const AttackSpec& spec, std::uint64_t seed)>;

/// Crafts and scores every (epsilon, gamma, seed) combination. Cells run on
/// up to config.threads workers and are merged by coordinate, so the result
/// does not depend on the thread count. Errors are rethrown with the cell
/// coordinates attached.
SweepResult run_sweep(const Model& victim, const CraftFn& craft, const Dataset& test,
                      const SweepConfig& config);

/// `epsilon,gamma,seed_count,metric,feature_deviation_json` rows.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
nlohmann::json sweep_to_json(const SweepResult& result, const nlohmann::json& provenance);
/// gnuplot "matrix nonuniform" layout: first row is <n_gamma> gammas..., then
/// one row per epsilon starting with the epsilon value.
void write_sweep_matrix(std::ostream& out, const SweepResult& result);

}  // namespace gridadv
