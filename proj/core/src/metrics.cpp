#include "gridadv/metrics.hpp"

#include <cmath>
#include <ostream>

#include "gridadv/csv.hpp"
#include "gridadv/error.hpp"
#include "gridadv/parallel.hpp"

namespace gridadv {

using nlohmann::json;

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
    if (predicted.size() != truth.size()) {
        throw ContractError("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                            std::to_string(truth.size()) + " labels");
    }
    if (predicted.empty()) throw ContractError("accuracy of an empty set is undefined");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return 100.0 * static_cast<double>(hits) / static_cast<double>(truth.size());
}

MapeResult mape(std::span<const double> var_star, std::span<const double> var, double threshold) {
    if (var_star.size() != var.size()) {
        throw ShapeError("mape: " + std::to_string(var_star.size()) + " vs " +
                         std::to_string(var.size()) + " entries");
    }
    if (var.empty()) throw ContractError("mape of an empty set is undefined");
    MapeResult r;
    double sum = 0.0;
    for (std::size_t i = 0; i < var.size(); ++i) {
        if (std::abs(var[i]) < threshold) {
            ++r.skipped;
            continue;
        }
        sum += std::abs(var_star[i] - var[i]) / std::abs(var[i]);
        ++r.used;
    }
    if (r.used == 0) {
        throw DegenerateInputError("mape: all " + std::to_string(var.size()) +
                                   " reference values are below " + format_double(threshold));
    }
    r.percent = 100.0 * sum / static_cast<double>(r.used);
    return r;
}

MapeResult mape(const Tensor& var_star, const Tensor& var, double threshold) {
    return mape(var_star.data(), var.data(), threshold);
}

double evaluate_metric(const Model& victim, const Tensor& inputs, const Dataset& test,
                       const std::optional<MinMax>& target_scale) {
    const Tensor out = predict(victim, inputs);
    if (test.is_classification()) {
        const auto truth = labels_of(test);
        return accuracy(argmax_rows(out), truth);
    }
    Tensor pred = out;
    Tensor truth = test.targets;
    if (target_scale) {
        for (double& v : pred.data()) v = target_scale->denormalize(v);
        for (double& v : truth.data()) v = target_scale->denormalize(v);
    }
    return mape(pred, truth).percent;
}

MapeResult feature_deviation(const Tensor& adversarial, const Tensor& clean,
                             const FeatureGroup& group, const std::vector<MinMax>* scale) {
    require_same_shape(adversarial, clean, "feature_deviation");
    const std::size_t f = clean.shape().back();
    std::vector<double> adv, ref;
    for (std::size_t i = 0; i < clean.size(); i += f) {
        for (std::size_t c : group.columns) {
            if (c >= f) throw ConfigError("feature group '" + group.name + "' column out of range");
            double a = adversarial[i + c], r = clean[i + c];
            if (scale) {
                a = (*scale)[c].denormalize(a);
                r = (*scale)[c].denormalize(r);
            }
            adv.push_back(a);
            ref.push_back(r);
        }
    }
    return mape(adv, ref);
}

SweepResult run_sweep(const Model& victim, const CraftFn& craft, const Dataset& test,
                      const SweepConfig& config) {
    if (config.epsilons.empty() || config.gammas.empty() || config.seeds.empty()) {
        throw ConfigError("sweep needs nonempty epsilon, gamma and seed lists");
    }
    validate(test);
    std::optional<MinMax> target_scale;
    if (config.norm) target_scale = config.norm->target;
    const std::vector<MinMax>* feature_scale = config.norm ? &config.norm->features : nullptr;

    SweepResult result;
    result.task = config.task;
    result.metric_name = test.is_classification() ? "accuracy_percent" : "mape_percent";
    result.epsilons = config.epsilons;
    result.gammas = config.gammas;
    result.seeds = config.seeds;
    result.samples = test.size();
    result.clean_metric = evaluate_metric(victim, test.inputs, test, target_scale);

    const std::size_t n_eps = config.epsilons.size();
    const std::size_t n_gamma = config.gammas.size();
    const std::size_t n_seed = config.seeds.size();
    struct Run {
        double metric = 0.0;
        std::vector<double> deviation;
    };
    std::vector<Run> runs(n_eps * n_gamma * n_seed);

    parallel_for(runs.size(), config.threads, [&](std::size_t k) {
        const std::size_t s = k % n_seed;
        const std::size_t g = (k / n_seed) % n_gamma;
        const std::size_t e = k / (n_seed * n_gamma);
        AttackSpec spec = config.base_spec;
        spec.epsilon = config.epsilons[e];
        spec.gamma = config.gammas[g];
        try {
            const Tensor adv = craft(spec, config.seeds[s]);
            runs[k].metric = evaluate_metric(victim, adv, test, target_scale);
            for (const auto& group : config.groups) {
                runs[k].deviation.push_back(
                    feature_deviation(adv, test.inputs, group, feature_scale).percent);
            }
        } catch (const Error& err) {
            throw Error("sweep cell (epsilon=" + format_double(spec.epsilon) +
                        ", gamma=" + format_double(spec.gamma) +
                        ", seed=" + std::to_string(config.seeds[s]) + "): " + err.what());
        }
    });

    result.cells.resize(n_eps * n_gamma);
    for (std::size_t e = 0; e < n_eps; ++e) {
        for (std::size_t g = 0; g < n_gamma; ++g) {
            SweepCell& cell = result.cells[e * n_gamma + g];
            cell.epsilon = config.epsilons[e];
            cell.gamma = config.gammas[g];
            std::vector<double> dev_sum(config.groups.size(), 0.0);
            double sum = 0.0;
            for (std::size_t s = 0; s < n_seed; ++s) {
                const Run& run = runs[(e * n_gamma + g) * n_seed + s];
                cell.per_seed.push_back(run.metric);
                sum += run.metric;
                for (std::size_t j = 0; j < dev_sum.size(); ++j) dev_sum[j] += run.deviation[j];
            }
            cell.metric = sum / static_cast<double>(n_seed);
            for (std::size_t j = 0; j < dev_sum.size(); ++j) {
                cell.deviation[config.groups[j].name] = dev_sum[j] / static_cast<double>(n_seed);
            }
        }
    }
    return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "epsilon,gamma,seed_count,metric,feature_deviation_json\n";
    for (const auto& cell : result.cells) {
        std::string dev = json(cell.deviation).dump();
        std::string quoted;
        for (char c : dev) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        out << format_double(cell.epsilon) << ',' << format_double(cell.gamma) << ','
            << cell.per_seed.size() << ',' << format_double(cell.metric) << ",\"" << quoted
            << "\"\n";
    }
}

json sweep_to_json(const SweepResult& result, const json& provenance) {
    json cells = json::array();
    for (const auto& cell : result.cells) {
        cells.push_back({{"epsilon", cell.epsilon},
                         {"gamma", cell.gamma},
                         {"metric", cell.metric},
                         {"per_seed", cell.per_seed},
                         {"feature_deviation", cell.deviation}});
    }
    return {{"task", result.task},
            {"metric", result.metric_name},
            {"epsilons", result.epsilons},
            {"gammas", result.gammas},
            {"seeds", result.seeds},
            {"samples", result.samples},
            {"clean_metric", result.clean_metric},
            {"cells", cells},
            {"config", provenance}};
}

void write_sweep_matrix(std::ostream& out, const SweepResult& result) {
    out << "# " << result.metric_name << " rows=epsilon cols=gamma\n";
    out << result.gammas.size();
    for (double g : result.gammas) out << ' ' << format_double(g);
    out << '\n';
    for (std::size_t e = 0; e < result.epsilons.size(); ++e) {
        out << format_double(result.epsilons[e]);
        for (std::size_t g = 0; g < result.gammas.size(); ++g) {
            out << ' ' << format_double(result.at(e, g).metric);
        }
        out << '\n';
    }
}

}  // namespace gridadv
