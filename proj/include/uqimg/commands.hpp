#pragma once

#include <optional>

#include "uqimg/artifacts.hpp"
#include "uqimg/config.hpp"

namespace uqimg {

struct CommandOptions {
    bool deterministic = false;
    bool inject_spikes = false;
    std::size_t spike_count = 8;
    double spike_amplitude = 1.0;
    std::vector<std::size_t> select;
};

/// Experiment pipeline commands. Each writes its artifacts under
/// outputs.directory, records a manifest in manifests/<command>.json, and
/// returns that manifest. All commands are deterministic given the config.
RunManifest cmd_make_data(const ExperimentConfig& cfg, const CommandOptions& opts = {});
RunManifest cmd_train(const ExperimentConfig& cfg, const CommandOptions& opts = {});
RunManifest cmd_infer(const ExperimentConfig& cfg, const CommandOptions& opts = {});
RunManifest cmd_metrics(const ExperimentConfig& cfg, const CommandOptions& opts = {});
RunManifest cmd_coverage(const ExperimentConfig& cfg, const CommandOptions& opts = {});
RunManifest cmd_reducibility(const ExperimentConfig& cfg, const CommandOptions& opts = {});

}  // namespace uqimg
