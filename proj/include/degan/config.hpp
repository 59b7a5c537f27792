// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "degan/trainer.hpp"

namespace degan {

/// Schema violation; `path` is the dotted location of the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what);
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct ExperimentSpec {
    std::vector<double> table1_targets{1.0, 2.0, 4.0, 6.0};
    std::vector<double> table2_lambdas{1.0, 0.75, 0.5, 0.25, 0.05, 0.0};
    double table2_target = 2.0;

    bool operator==(const ExperimentSpec&) const = default;
};

struct RunConfig {
    /// Dataset container written by `ingest`; relative paths resolve against base_dir.
    std::string dataset;
    std::string output_dir = "run";
    std::uint64_t seed = 0;
    train::ModelSpec model;
    train::TrainSchedule schedule;
    train::RewardObjective reward;
    std::size_t eval_samples = 6400;
    std::size_t trials = 5;
    /// Write a checkpoint every k epochs; 0 writes only the final one.
    std::size_t checkpoint_every = 0;
    /// Share of the training split used, taken from its front.
    double data_fraction = 1.0;
    ExperimentSpec experiment;

    /// Directory of the config file; not part of the serialized form.
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& p) const;
    void validate() const;
};

/// Reads a config tree; every key is optional, unknown keys are errors.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

nlohmann::json to_json(const VocabSpec& vocab);
VocabSpec vocab_from_json(const nlohmann::json& j, const std::string& path = "vocab");
/// Model description stored in checkpoint metadata.
nlohmann::json to_json(const train::ModelSpec& spec);
train::ModelSpec model_from_json(const nlohmann::json& j);

/// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string config_hash(const RunConfig& config);

/// Desk-scale variant: epochs, data fraction and sample counts shrink by
/// `factor`; the pretraining share of the epochs is kept.
RunConfig scaled(const RunConfig& config, double factor);
/// max(1, round(n * factor)).
std::size_t scaled_count(std::size_t n, double factor);

}  // namespace degan
