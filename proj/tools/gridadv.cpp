#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gridadv/config.hpp"
#include "gridadv/error.hpp"
#include "gridadv/runner.hpp"

namespace {

struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
};

void add_common(CLI::App& sub, Flags& flags) {
    sub.add_option("--config", flags.config_path, "Experiment config file")->required();
    sub.add_option("--seed", flags.seed, "Root seed (overrides the config)");
    sub.add_option("--out", flags.out, "Output directory (overrides the config)");
    sub.add_option("--threads", flags.threads, "Worker cap; results do not depend on it")
        ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial-attack experiments on power-system classifiers and forecasters", "gridadv"};
    app.set_version_flag("--version", std::string(gridadv::tool_version()));
    app.require_subcommand(1);
    app.footer("\n" + gridadv::config_reference());

    Flags flags;
    const std::pair<const char*, const char*> commands[] = {
        {"gen-pq", "Generate the power-quality waveform dataset"},
        {"gen-building", "Simulate a year of building data"},
        {"train", "Train the victim model and write its checkpoint"},
        {"gradcheck", "Compare analytic gradients with finite differences"},
        {"attack", "Craft adversarial test samples on a surrogate model"},
        {"evaluate", "Score the victim on clean and adversarial samples"},
        {"sweep", "Evaluate the victim over the epsilon x gamma grid"},
    };
    for (const auto& [name, help] : commands) add_common(*app.add_subcommand(name, help), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? gridadv::kExitOk : gridadv::kExitConfig;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    gridadv::ExperimentConfig config;
    try {
        config = gridadv::parse_config(flags.config_path);
    } catch (const gridadv::Error& e) {
        std::cerr << "gridadv " << sub << ": " << flags.config_path << ": " << e.what() << '\n';
        return gridadv::kExitConfig;
    }
    if (flags.seed) config.seed = *flags.seed;
    if (flags.out) config.output_dir = *flags.out;
    if (flags.threads) config.threads = *flags.threads;

    return gridadv::run(sub, config, std::cout, std::cerr);
}
