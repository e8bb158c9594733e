#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "modmon/experiment.hpp"

namespace modmon {

// Everything the CLI can read from a config file, prefilled with the desk
// scale defaults. Command-line flags override these after parsing.
struct CliConfig {
    ScenarioSpec scenario;
    ModelConfig model;
    TrainConfig train;
    int replications = 20;
    double alpha = 0.2;
    std::uint64_t base_seed = 0;
    int parallelism = 1;
    TuneGrid tune;

    static CliConfig defaults();

    ExperimentConfig experiment() const;
};

// Strict parsing: unknown keys anywhere raise ParseError, as do mistyped
// values, so silently ignored typos cannot skew an experiment.
CliConfig parse_config_json(const nlohmann::json& j, const std::string& where);
CliConfig load_config_file(const std::string& path);

}  // namespace modmon
