#include "gridadv/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "gridadv/csv.hpp"
#include "gridadv/error.hpp"

namespace gridadv {

using nlohmann::json;

std::string_view to_string(Task task) {
    return task == Task::power_quality ? "power-quality" : "building-load";
}

Task task_from_string(std::string_view name) {
    if (name == "power-quality") return Task::power_quality;
    if (name == "building-load") return Task::building_load;
    throw ConfigError("unknown task '" + std::string(name) +
                      "' (expected power-quality or building-load)");
}

ExperimentConfig default_config(Task task) {
    ExperimentConfig c;
    c.task = task;
    if (task == Task::power_quality) {
        c.test_fraction = 0.25;
        c.model.hidden = {64, 32};
        c.model.dropout = 0.1;
        c.model.hyper = {0.02, 32, 300, LossKind::cross_entropy, 0};
        c.surrogate = c.model;
        c.surrogate.hidden = {48, 24};
        c.epsilon = 0.1;
        c.gamma = 0.4;
        c.clip = false;
        c.epsilon_list = {0.01, 0.03, 0.05, 0.1};
        c.gamma_list = {0.1, 0.2, 0.4};
    } else {
        c.test_fraction = 1.0 / 6.0;
        c.model.rnn_hidden = 32;
        c.model.readout = {32, 16};
        c.model.dropout = 0.0;
        c.model.hyper = {0.01, 32, 30, LossKind::mse, 0};
        c.surrogate = c.model;
        c.surrogate.rnn_hidden = 24;
        c.surrogate.readout = {24, 12};
        c.epsilon = 0.03;
        c.gamma = 0.1;
        c.attack_features = {"occupancy", "setpoints"};
        c.clip = true;
        c.epsilon_list = {0.0, 0.01, 0.03, 0.05};
        c.gamma_list = {0.1};
    }
    return c;
}

namespace {

std::uint64_t to_u64(std::string_view v, std::size_t line) {
    v = trim(v);
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ParseError("expected an unsigned integer, got '" + std::string(v) + "'", line);
    }
    return out;
}

std::size_t to_size(std::string_view v, std::size_t line) { return parse_size(v, line); }
double to_double(std::string_view v, std::size_t line) { return parse_double(v, line); }

bool to_bool(std::string_view v, std::size_t line) {
    v = trim(v);
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw ParseError("expected a boolean, got '" + std::string(v) + "'", line);
}

template <class T, class Fn>
std::vector<T> to_list(std::string_view v, std::size_t line, Fn&& one) {
    std::vector<T> out;
    if (trim(v).empty()) return out;
    for (auto item : split(v, ',')) out.push_back(one(item, line));
    return out;
}

std::vector<std::string> to_words(std::string_view v) {
    std::vector<std::string> out;
    if (trim(v).empty()) return out;
    for (auto item : split(v, ',')) out.emplace_back(trim(item));
    return out;
}

template <class T>
std::string show_list(const std::vector<T>& xs) {
    std::ostringstream out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out << ',';
        if constexpr (std::is_same_v<T, double>) {
            out << format_double(xs[i]);
        } else {
            out << xs[i];
        }
    }
    return out.str();
}

// Wraps a value-level error with the offending line.
template <class Fn>
auto at_line(std::size_t line, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(e.what(), line);
    }
}

struct KeySpec {
    std::string name;
    std::string help;
    std::function<void(ExperimentConfig&, std::string_view, std::size_t)> apply;
    std::function<std::string(const ExperimentConfig&)> show;
};

void add_model_keys(std::vector<KeySpec>& keys, const std::string& section,
                    ModelConfig ExperimentConfig::*member, const std::string& who) {
    auto m = [member](ExperimentConfig& c) -> ModelConfig& { return c.*member; };
    auto cm = [member](const ExperimentConfig& c) -> const ModelConfig& { return c.*member; };
    keys.push_back({section + ".hidden", who + " MLP hidden widths",
                    [m](auto& c, auto v, auto l) { m(c).hidden = to_list<std::size_t>(v, l, to_size); },
                    [cm](const auto& c) { return show_list(cm(c).hidden); }});
    keys.push_back({section + ".rnn_hidden", who + " RNN hidden width",
                    [m](auto& c, auto v, auto l) { m(c).rnn_hidden = to_size(v, l); },
                    [cm](const auto& c) { return std::to_string(cm(c).rnn_hidden); }});
    keys.push_back({section + ".readout", who + " RNN readout widths",
                    [m](auto& c, auto v, auto l) { m(c).readout = to_list<std::size_t>(v, l, to_size); },
                    [cm](const auto& c) { return show_list(cm(c).readout); }});
    keys.push_back({section + ".dropout", who + " hidden-layer dropout rate",
                    [m](auto& c, auto v, auto l) { m(c).dropout = to_double(v, l); },
                    [cm](const auto& c) { return format_double(cm(c).dropout); }});
    keys.push_back({section + ".learning_rate", who + " SGD learning rate",
                    [m](auto& c, auto v, auto l) { m(c).hyper.learning_rate = to_double(v, l); },
                    [cm](const auto& c) { return format_double(cm(c).hyper.learning_rate); }});
    keys.push_back({section + ".batch_size", who + " mini-batch size",
                    [m](auto& c, auto v, auto l) { m(c).hyper.batch_size = to_size(v, l); },
                    [cm](const auto& c) { return std::to_string(cm(c).hyper.batch_size); }});
    keys.push_back({section + ".epochs", who + " training epochs",
                    [m](auto& c, auto v, auto l) { m(c).hyper.epochs = to_size(v, l); },
                    [cm](const auto& c) { return std::to_string(cm(c).hyper.epochs); }});
    keys.push_back({section + ".seed", who + " seed (default: derived from the root seed)",
                    [m](auto& c, auto v, auto l) { m(c).seed = to_u64(v, l); },
                    [cm](const auto& c) {
                        return cm(c).seed ? std::to_string(*cm(c).seed) : std::string("derived");
                    }});
}

const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> keys = [] {
        std::vector<KeySpec> k;
        k.push_back({"task", "power-quality | building-load (required)",
                     [](auto& c, auto v, auto) { c.task = task_from_string(trim(v)); },
                     [](const auto& c) { return std::string(to_string(c.task)); }});
        k.push_back({"seed", "root seed; every other seed derives from it",
                     [](auto& c, auto v, auto l) { c.seed = to_u64(v, l); },
                     [](const auto& c) { return std::to_string(c.seed); }});
        k.push_back({"output_dir", "directory for artifacts and manifest.json",
                     [](auto& c, auto v, auto) { c.output_dir = std::string(trim(v)); },
                     [](const auto& c) { return c.output_dir; }});
        k.push_back({"threads", "worker cap for crafting and sweep cells",
                     [](auto& c, auto v, auto l) { c.threads = static_cast<unsigned>(to_size(v, l)); },
                     [](const auto& c) { return std::to_string(c.threads); }});

        k.push_back({"data.n_per_class", "power-quality signals per class",
                     [](auto& c, auto v, auto l) { c.n_per_class = to_size(v, l); },
                     [](const auto& c) { return std::to_string(c.n_per_class); }});
        k.push_back({"data.signal_length", "samples per signal",
                     [](auto& c, auto v, auto l) { c.signal.length = to_size(v, l); },
                     [](const auto& c) { return std::to_string(c.signal.length); }});
        k.push_back({"data.cycle_length", "samples per fundamental cycle",
                     [](auto& c, auto v, auto l) { c.signal.cycle_length = to_size(v, l); },
                     [](const auto& c) { return std::to_string(c.signal.cycle_length); }});
        k.push_back({"data.noise_sigma", "measurement noise [p.u.]",
                     [](auto& c, auto v, auto l) { c.signal.noise_sigma = to_double(v, l); },
                     [](const auto& c) { return format_double(c.signal.noise_sigma); }});
        k.push_back({"data.phase_max", "fundamental phase drawn from [0, phase_max] rad",
                     [](auto& c, auto v, auto l) { c.signal.phase = {0.0, to_double(v, l)}; },
                     [](const auto& c) { return format_double(c.signal.phase.hi); }});
        k.push_back({"data.impulse_width_min", "shortest impulse [samples]",
                     [](auto& c, auto v, auto l) { c.signal.impulse_width_min = to_size(v, l); },
                     [](const auto& c) { return std::to_string(c.signal.impulse_width_min); }});
        k.push_back({"data.impulse_width_max", "longest impulse [samples]",
                     [](auto& c, auto v, auto l) { c.signal.impulse_width_max = to_size(v, l); },
                     [](const auto& c) { return std::to_string(c.signal.impulse_width_max); }});
        k.push_back({"data.test_fraction", "held-out fraction",
                     [](auto& c, auto v, auto l) { c.test_fraction = to_double(v, l); },
                     [](const auto& c) { return format_double(c.test_fraction); }});
        k.push_back({"data.steps", "simulated building steps (10-minute resolution)",
                     [](auto& c, auto v, auto l) { c.building.steps = to_size(v, l); },
                     [](const auto& c) { return std::to_string(c.building.steps); }});
        k.push_back({"data.zones", "building zones (one setpoint column each)",
                     [](auto& c, auto v, auto l) { c.building.zones = to_size(v, l); },
                     [](const auto& c) { return std::to_string(c.building.zones); }});
        k.push_back({"data.window", "RNN memory length [steps]",
                     [](auto& c, auto v, auto l) { c.window = to_size(v, l); },
                     [](const auto& c) { return std::to_string(c.window); }});

        add_model_keys(k, "model", &ExperimentConfig::model, "victim");
        add_model_keys(k, "surrogate", &ExperimentConfig::surrogate, "surrogate");

        k.push_back({"attack.epsilon", "per-entry perturbation magnitude",
                     [](auto& c, auto v, auto l) { c.epsilon = to_double(v, l); },
                     [](const auto& c) { return format_double(c.epsilon); }});
        k.push_back({"attack.gamma", "fraction of entries that may change",
                     [](auto& c, auto v, auto l) { c.gamma = to_double(v, l); },
                     [](const auto& c) { return format_double(c.gamma); }});
        k.push_back({"attack.kernel", "gradient-sign | scaled-gradient",
                     [](auto& c, auto v, auto) { c.kernel = kernel_from_string(trim(v)); },
                     [](const auto& c) { return std::string(to_string(c.kernel)); }});
        k.push_back({"attack.rank", "entry ranking: absolute | signed",
                     [](auto& c, auto v, auto l) {
                         const auto w = trim(v);
                         if (w == "absolute") c.rank = RankBy::absolute;
                         else if (w == "signed") c.rank = RankBy::signed_value;
                         else throw ParseError("rank must be absolute or signed", l);
                     },
                     [](const auto& c) {
                         return std::string(c.rank == RankBy::absolute ? "absolute" : "signed");
                     }});
        k.push_back({"attack.features", "attackable building features: occupancy,setpoints",
                     [](auto& c, auto v, auto l) {
                         c.attack_features = to_words(v);
                         for (const auto& f : c.attack_features) {
                             if (f != "occupancy" && f != "setpoints") {
                                 throw ParseError("unknown attack feature '" + f + "'", l);
                             }
                         }
                     },
                     [](const auto& c) { return show_list(c.attack_features); }});
        k.push_back({"attack.clip", "clip perturbed entries to the training range ([0, 1] once normalised)",
                     [](auto& c, auto v, auto l) { c.clip = to_bool(v, l); },
                     [](const auto& c) { return std::string(c.clip ? "true" : "false"); }});
        k.push_back({"attack.n_adv", "test samples to perturb (0 = all)",
                     [](auto& c, auto v, auto l) { c.n_adv = to_size(v, l); },
                     [](const auto& c) { return std::to_string(c.n_adv); }});

        k.push_back({"sweep.epsilon_list", "epsilon grid",
                     [](auto& c, auto v, auto l) { c.epsilon_list = to_list<double>(v, l, to_double); },
                     [](const auto& c) { return show_list(c.epsilon_list); }});
        k.push_back({"sweep.gamma_list", "gamma grid",
                     [](auto& c, auto v, auto l) { c.gamma_list = to_list<double>(v, l, to_double); },
                     [](const auto& c) { return show_list(c.gamma_list); }});
        k.push_back({"sweep.seeds", "surrogate seeds averaged per cell",
                     [](auto& c, auto v, auto l) { c.sweep_seeds = to_size(v, l); },
                     [](const auto& c) { return std::to_string(c.sweep_seeds); }});
        return k;
    }();
    return keys;
}

const KeySpec* find_key(std::string_view name) {
    for (const auto& k : key_table()) {
        if (k.name == name) return &k;
    }
    return nullptr;
}

void check_config(const ExperimentConfig& c) {
    if (c.threads == 0) throw ConfigError("threads must be at least 1");
    if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
        throw ConfigError("data.test_fraction must lie strictly between 0 and 1");
    }
    if (c.epsilon_list.empty() || c.gamma_list.empty()) {
        throw ConfigError("sweep epsilon_list and gamma_list must be nonempty");
    }
    if (c.sweep_seeds == 0) throw ConfigError("sweep.seeds must be at least 1");
    AttackSpec probe;
    probe.epsilon = c.epsilon;
    probe.gamma = c.gamma;
    validate(probe, 1);
    for (double e : c.epsilon_list) {
        if (!(e >= 0.0)) throw ConfigError("sweep epsilons must be >= 0");
    }
    for (double g : c.gamma_list) {
        if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("sweep gammas must lie in [0, 1]");
    }
    if (c.task == Task::power_quality) {
        pq::validate(c.signal);
        if (c.n_per_class == 0) throw ConfigError("data.n_per_class must be at least 1");
    } else {
        building::validate(c.building);
        if (c.window == 0) throw ConfigError("data.window must be at least 1");
    }
    validate(c.model.hyper);
    validate(c.surrogate.hyper);
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text) {
    struct Entry {
        std::string value;
        std::size_t line;
    };
    std::map<std::string, Entry> entries;
    std::string section;
    const auto lines = split(text, '\n');
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t ln = i + 1;
        auto line = lines[i];
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) throw ParseError("malformed section header", ln);
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", ln);
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("missing key before '='", ln);
        const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
        if (!find_key(full)) throw ParseError("unknown key '" + full + "'", ln);
        if (auto it = entries.find(full); it != entries.end()) {
            throw ParseError("duplicate key '" + full + "' (first set on line " +
                                 std::to_string(it->second.line) + ")",
                             ln);
        }
        entries.emplace(full, Entry{std::string(trim(line.substr(eq + 1))), ln});
    }

    const auto task_it = entries.find("task");
    if (task_it == entries.end()) throw ParseError("missing required key 'task'", 0);
    ExperimentConfig config =
        default_config(at_line(task_it->second.line, [&] { return task_from_string(task_it->second.value); }));
    for (const auto& [name, entry] : entries) {
        at_line(entry.line, [&] {
            find_key(name)->apply(config, entry.value, entry.line);
            return 0;
        });
    }
    check_config(config);
    return config;
}

ExperimentConfig parse_config(const std::string& path) { return parse_config_text(read_file(path)); }

std::string config_reference() {
    const ExperimentConfig pq_defaults = default_config(Task::power_quality);
    const ExperimentConfig bl_defaults = default_config(Task::building_load);
    std::ostringstream out;
    out << "Config file: `key = value` lines, `[section]` headers, `#` comments.\n"
        << "Defaults are shown as power-quality | building-load when they differ.\n";
    std::size_t width = 0;
    for (const auto& k : key_table()) width = std::max(width, k.name.size());
    std::string section;
    for (const auto& k : key_table()) {
        const auto dot = k.name.find('.');
        const std::string sec = dot == std::string::npos ? "" : k.name.substr(0, dot);
        if (sec != section) {
            section = sec;
            out << "\n  [" << section << "]\n";
        }
        const std::string key = dot == std::string::npos ? k.name : k.name.substr(dot + 1);
        std::string a = k.show(pq_defaults), b = k.show(bl_defaults);
        if (a.empty()) a = "(none)";
        if (b.empty()) b = "(none)";
        out << "  " << key << std::string(width + 2 - key.size(), ' ') << k.help << '\n';
        if (k.name == "task") continue;
        out << std::string(width + 4, ' ') << "default: " << (a == b ? a : a + " | " + b) << '\n';
    }
    return out.str();
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    for (const auto& k : key_table()) {
        if (k.name == "threads" || k.name == "output_dir") continue;
        j[k.name] = k.show(c);
    }
    return j;
}

}  // namespace gridadv
