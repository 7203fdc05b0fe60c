#include "gridadv/runner.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include "gridadv/buildingload.hpp"
#include "gridadv/checkpoint.hpp"
#include "gridadv/csv.hpp"
#include "gridadv/digest.hpp"
#include "gridadv/error.hpp"
#include "gridadv/parallel.hpp"
#include "gridadv/powerquality.hpp"
#include "gridadv/random.hpp"

#ifndef GRIDADV_VERSION
#define GRIDADV_VERSION "0.0.0"
#endif

namespace gridadv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kPqDataset = "pq_dataset.csv";
constexpr std::string_view kBuildingData = "building.csv";
constexpr std::string_view kVictim = "victim.json";
constexpr std::string_view kHistory = "history.csv";
constexpr std::string_view kSurrogate = "surrogate.json";
constexpr std::string_view kGradcheck = "gradcheck.json";
constexpr std::string_view kAdversarialCsv = "adversarial.csv";
constexpr std::string_view kAdversarialJson = "adversarial.json";
constexpr std::string_view kMetrics = "metrics.json";
constexpr std::string_view kSweepCsv = "sweep.csv";
constexpr std::string_view kSweepJson = "sweep.json";
constexpr std::string_view kSweepMatrix = "sweep_matrix.dat";
constexpr std::string_view kManifest = "manifest.json";

constexpr std::string_view kArtifacts[] = {kPqDataset,     kBuildingData,    kVictim,
                                           kHistory,       kSurrogate,       kGradcheck,
                                           kAdversarialCsv, kAdversarialJson, kMetrics,
                                           kSweepCsv,      kSweepJson,       kSweepMatrix};

bool is_pq(const ExperimentConfig& c) { return c.task == Task::power_quality; }

std::vector<std::size_t> attacked_columns(const ExperimentConfig& c) {
    std::vector<std::size_t> cols;
    for (const auto& name : c.attack_features) {
        if (name == "occupancy") {
            cols.push_back(building::occupancy_column());
        } else {
            const auto sp = building::setpoint_columns(c.building);
            cols.insert(cols.end(), sp.begin(), sp.end());
        }
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    return cols;
}

Dataset first_rows(const Dataset& ds, std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return subset(ds, idx);
}

std::size_t adversarial_count(const ExperimentConfig& c, const TaskData& data) {
    if (c.n_adv == 0) return data.test.size();
    if (c.n_adv > data.test.size()) {
        throw ConfigError("attack.n_adv = " + std::to_string(c.n_adv) + " exceeds the " +
                          std::to_string(data.test.size()) + " test samples");
    }
    return c.n_adv;
}

}  // namespace

SeedPlan plan_seeds(const ExperimentConfig& config) {
    SeedPlan s;
    s.root = config.seed;
    s.data = derive_seed(config.seed, "data");
    s.split = derive_seed(config.seed, "split");
    s.victim = derive_seed(config.seed, "victim");
    s.surrogate = derive_seed(config.seed, "surrogate");
    for (std::size_t i = 0; i < config.sweep_seeds; ++i) {
        s.sweep.push_back(derive_seed(config.seed, "sweep", i));
    }
    return s;
}

json seeds_to_json(const SeedPlan& s) {
    return {{"root", s.root},   {"data", s.data},           {"split", s.split},
            {"victim", s.victim}, {"surrogate", s.surrogate}, {"sweep", s.sweep}};
}

Dataset generate_pq(const ExperimentConfig& config, const SeedPlan& seeds) {
    return pq::gen_dataset(config.n_per_class, config.signal, seeds.data);
}

building::BuildingTable generate_building(const ExperimentConfig& config, const SeedPlan& seeds) {
    return building::simulate_year(config.building, seeds.data);
}

TaskData split_pq(const ExperimentConfig& config, const SeedPlan& seeds, const Dataset& raw) {
    RandomSource rng(seeds.split);
    auto [train, test] = split_dataset(raw, config.test_fraction, rng);
    return {std::move(train), std::move(test), std::nullopt};
}

TaskData split_building(const ExperimentConfig& config, const SeedPlan& seeds,
                        const building::BuildingTable& raw) {
    const auto windows = building::make_windows(raw, config.window, false);
    const auto [train, test] = building::holdout_split(windows, config.test_fraction, seeds.split);
    return {train.normalized(), test.normalized(), train.norm};
}

TaskData prepare_task_data(const ExperimentConfig& config, const SeedPlan& seeds) {
    if (is_pq(config)) return split_pq(config, seeds, generate_pq(config, seeds));
    return split_building(config, seeds, generate_building(config, seeds));
}

Architecture model_architecture(const ExperimentConfig& config, const ModelConfig& model) {
    if (is_pq(config)) {
        return MlpArchitecture{config.signal.length, model.hidden, pq::kClassCount, model.dropout};
    }
    return RnnArchitecture{config.building.feature_count(), model.rnn_hidden, model.readout,
                           config.window};
}

Hyperparams model_hyper(const ExperimentConfig& config, const ModelConfig& model,
                        std::uint64_t derived) {
    Hyperparams h = model.hyper;
    h.loss = is_pq(config) ? LossKind::cross_entropy : LossKind::mse;
    h.seed = model.seed.value_or(derived);
    return h;
}

TrainedModel train_victim(const ExperimentConfig& config, const SeedPlan& seeds,
                          const TaskData& data) {
    return train_model(model_architecture(config, config.model), data.train,
                       model_hyper(config, config.model, seeds.victim));
}

Model train_attacker_surrogate(const ExperimentConfig& config, std::uint64_t seed,
                               const TaskData& data) {
    return train_surrogate(data.train, {model_architecture(config, config.surrogate),
                                        model_hyper(config, config.surrogate, seed)});
}

AttackSpec base_attack_spec(const ExperimentConfig& config, const TaskData& data) {
    AttackSpec spec;
    spec.epsilon = config.epsilon;
    spec.gamma = config.gamma;
    spec.kernel = config.kernel;
    spec.rank = config.rank;
    const std::size_t entries = data.train.inputs.size() / std::max<std::size_t>(1, data.train.size());
    if (is_pq(config)) {
        if (config.clip) {
            const auto [lo, hi] = std::minmax_element(data.train.inputs.data().begin(),
                                                      data.train.inputs.data().end());
            spec.clip = ClipBounds::uniform(entries, *lo, *hi);
        }
    } else {
        if (!config.attack_features.empty()) {
            spec.mask = building::window_mask(attacked_columns(config), config.window,
                                              config.building.feature_count());
        }
        if (config.clip) spec.clip = ClipBounds::uniform(entries, 0.0, 1.0);
    }
    validate(spec, entries);
    return spec;
}

std::vector<FeatureGroup> deviation_groups(const ExperimentConfig& config) {
    if (is_pq(config)) return {};
    std::vector<FeatureGroup> groups{
        {"setpoints", building::setpoint_columns(config.building)},
        {"occupancy", {building::occupancy_column()}},
    };
    auto cols = attacked_columns(config);
    if (cols.empty()) {
        for (std::size_t c = 0; c < config.building.feature_count(); ++c) cols.push_back(c);
    }
    groups.push_back({"attacked", cols});
    return groups;
}

json evaluate_attack(const ExperimentConfig& config, const Model& victim, const TaskData& data,
                     const Tensor& adversarial_inputs) {
    const std::size_t n = adversarial_inputs.rank() ? adversarial_inputs.dim(0) : 0;
    if (n == 0 || n > data.test.size()) {
        throw ContractError("adversarial set has " + std::to_string(n) + " rows for " +
                            std::to_string(data.test.size()) + " test samples");
    }
    const Dataset attacked = first_rows(data.test, n);
    std::optional<MinMax> target_scale;
    if (data.norm) target_scale = data.norm->target;

    json out;
    out["task"] = to_string(config.task);
    out["metric"] = data.test.is_classification() ? "accuracy_percent" : "mape_percent";
    out["test_samples"] = data.test.size();
    out["adversarial_samples"] = n;
    out["clean"] = evaluate_metric(victim, data.test.inputs, data.test, target_scale);
    out["clean_on_attacked"] = evaluate_metric(victim, attacked.inputs, attacked, target_scale);
    out["adversarial"] = evaluate_metric(victim, adversarial_inputs, attacked, target_scale);
    json dev = json::object();
    const std::vector<MinMax>* scale = data.norm ? &data.norm->features : nullptr;
    for (const auto& g : deviation_groups(config)) {
        dev[g.name] = feature_deviation(adversarial_inputs, attacked.inputs, g, scale).percent;
    }
    out["feature_deviation_percent"] = dev;
    return out;
}

SweepResult sweep_experiment(const ExperimentConfig& config, const SeedPlan& seeds,
                             const Model& victim, const TaskData& data) {
    std::vector<Model> surrogates(seeds.sweep.size());
    parallel_for(seeds.sweep.size(), config.threads, [&](std::size_t i) {
        surrogates[i] = train_attacker_surrogate(config, seeds.sweep[i], data);
    });

    SweepConfig sc;
    sc.task = std::string(to_string(config.task));
    sc.epsilons = config.epsilon_list;
    sc.gammas = config.gamma_list;
    sc.seeds = seeds.sweep;
    sc.base_spec = base_attack_spec(config, data);
    sc.groups = deviation_groups(config);
    sc.norm = data.norm;
    sc.threads = config.threads;

    const CraftFn craft = [&](const AttackSpec& spec, std::uint64_t seed) {
        const auto it = std::find(seeds.sweep.begin(), seeds.sweep.end(), seed);
        if (it == seeds.sweep.end()) throw ContractError("sweep seed without a surrogate");
        const Model& surrogate = surrogates[static_cast<std::size_t>(it - seeds.sweep.begin())];
        return craft_with_surrogate(surrogate, data.test, spec, data.test.size(), 1)
            .adversarial_inputs();
    };
    return run_sweep(victim, craft, data.test, sc);
}

std::string config_sha256(const ExperimentConfig& config) {
    return sha256_hex(config_to_json(config).dump());
}

json write_manifest(const fs::path& dir, const ExperimentConfig& config, const SeedPlan& seeds,
                    std::string_view subcommand) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name != kManifest) names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    json artifacts = json::array();
    for (const auto& name : names) {
        artifacts.push_back({{"path", name}, {"sha256", sha256_file((dir / name).string())}});
    }
    json manifest = {{"config_sha256", config_sha256(config)},
                     {"root_seed", seeds.root},
                     {"seeds", seeds_to_json(seeds)},
                     {"subcommand", subcommand},
                     {"artifacts", artifacts},
                     {"tool_version", tool_version()}};
    std::ofstream out(dir / kManifest, std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) throw Error("cannot write " + (dir / kManifest).string());
    return manifest;
}

std::string_view tool_version() { return GRIDADV_VERSION; }

const std::vector<std::string_view>& subcommands() {
    static const std::vector<std::string_view> names{"gen-pq", "gen-building", "train", "gradcheck",
                                                     "attack", "evaluate",     "sweep"};
    return names;
}

namespace {

// File-backed pipeline state for one run. Upstream artifacts already present
// in the output directory are reused; missing ones are produced and written.
class Pipeline {
public:
    Pipeline(const ExperimentConfig& config, std::ostream& out, std::ostream& log)
        : config_(config), seeds_(plan_seeds(config)), dir_(config.output_dir), out_(out), log_(log) {
        fs::create_directories(dir_);
        discard_stale_artifacts();
    }

    const SeedPlan& seeds() const { return seeds_; }
    const fs::path& dir() const { return dir_; }

    void gen_pq() {
        write_text(kPqDataset, [&](std::ostream& o) { pq::write_csv(o, generate_pq(config_, seeds_)); });
    }

    void gen_building() {
        write_text(kBuildingData, [&](std::ostream& o) {
            building::write_csv(o, generate_building(config_, seeds_));
        });
    }

    const TaskData& data() {
        if (data_) return *data_;
        if (is_pq(config_)) {
            if (!exists(kPqDataset)) gen_pq();
            data_ = split_pq(config_, seeds_, pq::read_csv(read_file(path(kPqDataset))));
        } else {
            if (!exists(kBuildingData)) gen_building();
            data_ = split_building(config_, seeds_, building::read_csv(read_file(path(kBuildingData))));
        }
        note("data: " + std::to_string(data_->train.size()) + " train, " +
             std::to_string(data_->test.size()) + " test samples");
        return *data_;
    }

    const Model& train() {
        const TaskData& d = data();
        note("training victim");
        TrainedModel trained = train_victim(config_, seeds_, d);
        save_checkpoint(path(kVictim), {trained.model, d.norm});
        write_text(kHistory, [&](std::ostream& o) { write_history_csv(o, trained.history); });
        victim_ = std::move(trained.model);
        return *victim_;
    }

    const Model& victim() {
        if (victim_) return *victim_;
        if (!exists(kVictim)) return train();
        victim_ = load_checkpoint(path(kVictim)).model;
        return *victim_;
    }

    const Model& surrogate() {
        if (surrogate_) return *surrogate_;
        if (exists(kSurrogate)) {
            surrogate_ = load_checkpoint(path(kSurrogate)).model;
        } else {
            note("training surrogate");
            surrogate_ = train_attacker_surrogate(config_, seeds_.surrogate, data());
            save_checkpoint(path(kSurrogate), {*surrogate_, data().norm});
        }
        return *surrogate_;
    }

    Tensor attack() {
        const TaskData& d = data();
        const Model& sur = surrogate();
        const std::size_t n = adversarial_count(config_, d);
        note("crafting " + std::to_string(n) + " adversarial samples");
        const AdversarialSet set =
            craft_with_surrogate(sur, d.test, base_attack_spec(config_, d), n, config_.threads);
        write_text(kAdversarialCsv, [&](std::ostream& o) { write_adversarial_csv(o, set); });
        write_json(kAdversarialJson, adversarial_summary(set));
        return set.adversarial_inputs();
    }

    Tensor adversarial_inputs() {
        if (!exists(kAdversarialCsv)) return attack();
        return read_adversarial_csv(read_file(path(kAdversarialCsv))).inputs;
    }

    json evaluate() {
        const Model& v = victim();
        const Tensor adv = adversarial_inputs();
        json metrics = evaluate_attack(config_, v, data(), adv);
        metrics["attack"] = attack_spec_to_json(base_attack_spec(config_, data()));
        write_json(kMetrics, metrics);
        return metrics;
    }

    int gradcheck() {
        const TaskData& d = data();
        RandomSource rng = RandomSource(seeds_.victim).child("init");
        const Model model = init_model(model_architecture(config_, config_.model), rng);
        const std::size_t n = std::min<std::size_t>(4, d.train.size());
        const Dataset probe = first_rows(d.train, n);
        const double err = grad_check(model, probe.inputs, probe.targets, default_loss(model));
        const bool pass = err <= kGradcheckThreshold;
        write_json(kGradcheck, {{"max_relative_error", err},
                                {"threshold", kGradcheckThreshold},
                                {"samples", n},
                                {"passed", pass}});
        out_ << "max relative error " << format_double(err) << (pass ? " (ok)" : " (FAILED)") << '\n';
        return pass ? kExitOk : kExitThreshold;
    }

    void sweep() {
        const Model& v = victim();
        note("sweeping " + std::to_string(config_.epsilon_list.size()) + " x " +
             std::to_string(config_.gamma_list.size()) + " cells over " +
             std::to_string(seeds_.sweep.size()) + " seeds");
        const SweepResult result = sweep_experiment(config_, seeds_, v, data());
        write_text(kSweepCsv, [&](std::ostream& o) { write_sweep_csv(o, result); });
        write_json(kSweepJson, sweep_to_json(result, config_to_json(config_)));
        write_text(kSweepMatrix, [&](std::ostream& o) { write_sweep_matrix(o, result); });
        for (const auto& cell : result.cells) {
            out_ << "epsilon=" << format_double(cell.epsilon) << " gamma=" << format_double(cell.gamma)
                 << ' ' << result.metric_name << '=' << format_double(cell.metric) << '\n';
        }
    }

    void print_json(const json& j) { out_ << j.dump(2) << '\n'; }

    void finish(std::string_view subcommand) {
        write_manifest(dir_, config_, seeds_, subcommand);
        note("wrote " + (dir_ / kManifest).string());
    }

private:
    std::string path(std::string_view name) const { return (dir_ / name).string(); }
    bool exists(std::string_view name) const { return fs::is_regular_file(dir_ / name); }
    void note(const std::string& line) { log_ << "[gridadv] " << line << '\n'; }

    template <class Fn>
    void write_text(std::string_view name, Fn&& body) {
        std::ofstream o(path(name), std::ios::binary);
        if (!o) throw Error("cannot open " + path(name) + " for writing");
        body(o);
        if (!o) throw Error("write failed for " + path(name));
    }

    void write_json(std::string_view name, const json& j) {
        write_text(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    }

    // Artifacts left by a run with a different config would be silently
    // reused or misattributed in the new manifest; drop them first.
    void discard_stale_artifacts() {
        if (!exists(kManifest)) return;
        std::string previous;
        try {
            previous = json::parse(read_file(path(kManifest))).value("config_sha256", "");
        } catch (const json::exception&) {
        }
        if (previous == config_sha256(config_)) return;
        note("config changed since the last run; discarding previous artifacts");
        for (auto name : kArtifacts) fs::remove(dir_ / name);
        fs::remove(dir_ / kManifest);
    }

    const ExperimentConfig& config_;
    SeedPlan seeds_;
    fs::path dir_;
    std::ostream& out_;
    std::ostream& log_;
    std::optional<TaskData> data_;
    std::optional<Model> victim_;
    std::optional<Model> surrogate_;
};

int dispatch(std::string_view sub, Pipeline& p) {
    if (sub == "gen-pq") {
        p.gen_pq();
    } else if (sub == "gen-building") {
        p.gen_building();
    } else if (sub == "train") {
        p.train();
    } else if (sub == "gradcheck") {
        return p.gradcheck();
    } else if (sub == "attack") {
        p.attack();
    } else if (sub == "evaluate") {
        p.print_json(p.evaluate());
    } else if (sub == "sweep") {
        p.sweep();
    }
    return kExitOk;
}

}  // namespace

int run(std::string_view subcommand, const ExperimentConfig& config, std::ostream& out,
        std::ostream& log) {
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), subcommand) == names.end()) {
        log << "gridadv: unknown subcommand '" << subcommand << "'\n";
        return kExitConfig;
    }
    const std::string ctx = "gridadv " + std::string(subcommand) + ": ";
    try {
        Pipeline pipeline(config, out, log);
        const int code = dispatch(subcommand, pipeline);
        pipeline.finish(subcommand);
        return code;
    } catch (const ConfigError& e) {
        log << ctx << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParseError& e) {
        log << ctx << "parse error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        log << ctx << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace gridadv
