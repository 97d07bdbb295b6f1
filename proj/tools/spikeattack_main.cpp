#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spikeattack/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Budget-constrained iterative adversarial attacks"};
    app.set_version_flag("--version", spikeattack::kVersion);

    spikeattack::ExperimentOptions options;
    app.add_option("task", options.task,
                   "one of: train, attack, pareto, redundancy, maskopt, advtrain")
        ->required();
    app.add_option("--config", options.config_path, "path to key = value config file")
        ->required();
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    std::string out_dir;
    auto* out_opt = app.add_option("--out", out_dir, "override the output directory");

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) options.seed = seed;
    if (*out_opt) options.out_dir = out_dir;

    try {
        return spikeattack::run_experiment(options);
    } catch (const std::exception& e) {
        std::cerr << "spikeattack: " << e.what() << '\n';
        return 1;
    }
}
