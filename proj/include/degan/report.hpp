// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "degan/config.hpp"
#include "degan/graph.hpp"
#include "degan/trainer.hpp"

namespace degan::report {

struct EvalResult {
    std::size_t samples = 0;
    double percent_unique = 0.0;
    double mean_degree = 0.0;
};

EvalResult evaluate(std::span<const GraphSample> graphs);
/// One JSON object on a single line.
std::string eval_line(const EvalResult& r);

/// Undirected DOT graph; empty nodes are left out, labels are vocabulary symbols.
std::string to_dot(const GraphSample& g, const VocabSpec& vocab, const std::string& name);
/// Writes the first k graphs as <dir>/graph_<i>.dot; returns the paths.
std::vector<std::filesystem::path> export_dot(std::span<const GraphSample> graphs, const VocabSpec& vocab,
                                              std::size_t k, const std::filesystem::path& dir);

/// Bias sweeps the target degree d at lambda_main = 0; diversity sweeps
/// lambda_main at a fixed d.
enum class Table { Bias, Diversity };

const char* table_name(Table t);
const char* objective_name(Table t);

struct TrialOutcome {
    train::TrainResult training;
    EvalResult final_eval;
    EvalResult pretrain_eval;
};

/// Seed of trial k: master seed + k.
std::uint64_t trial_seed(const RunConfig& config, std::size_t trial);

/// Training subset of the split honoring config.data_fraction.
std::vector<GraphSample> training_graphs(const RunConfig& config, std::span<const GraphSample> train_split);

/// One training plus evaluation of the final and pretrain-phase generators
/// on config.eval_samples draws each.
TrialOutcome run_trial(const RunConfig& config, std::span<const GraphSample> train_graphs, std::uint64_t seed,
                       const train::EpochCallback& on_epoch = {});

struct TrialRow {
    double objective = 0.0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    EvalResult eval;
};

struct MeanRow {
    double objective = 0.0;
    std::size_t completed = 0;
    double percent_unique = 0.0;
    double mean_degree = 0.0;
};

struct ExperimentReport {
    Table table = Table::Bias;
    std::string config_hash;
    std::string code_version;
    std::vector<TrialRow> trials;

    /// Arithmetic mean of the completed trials of each objective, in sweep order.
    std::vector<MeanRow> means() const;
};

/// The sweep objectives of a table.
std::vector<double> sweep(const RunConfig& config, Table table);
/// config with the reward target and lambda_main of one cell.
RunConfig cell_config(const RunConfig& config, Table table, double objective);

using Progress = std::function<void(const TrialRow&)>;

/// Runs every cell for config.trials trials. A trial that throws is recorded
/// as failed and the sweep continues.
ExperimentReport run_experiment(Table table, const RunConfig& config, std::span<const GraphSample> train_split,
                                const Progress& progress = {});

/// Header, per-trial rows, then one mean row per objective.
void write_report_csv(std::ostream& out, const ExperimentReport& report);

}  // namespace degan::report
