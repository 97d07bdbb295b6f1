#pragma once

#include <optional>
#include <string>

namespace spikeattack {

inline constexpr const char* kVersion = "spikeattack 0.1.0";

struct ExperimentOptions {
    std::string task;         // train | attack | pareto | redundancy | maskopt | advtrain
    std::string config_path;
    std::optional<std::uint64_t> seed;    // overrides config
    std::optional<std::string> out_dir;   // overrides config
};

// Dispatches a task, writes its CSV/JSON outputs plus manifest.json under the
// output directory. Returns 0 on success; throws on configuration errors.
// Failures of individual sweep points are recorded in the manifest and make
// the return code nonzero.
int run_experiment(const ExperimentOptions& options);

}  // namespace spikeattack
