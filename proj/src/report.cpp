// SPDX-License-Identifier: Apache-2.0
#include "degan/report.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "degan/version.hpp"

namespace degan::report {

EvalResult evaluate(std::span<const GraphSample> graphs) {
    return {graphs.size(), percent_unique(graphs), mean_degree_over_set(graphs)};
}

std::string eval_line(const EvalResult& r) {
    std::ostringstream out;
    out << std::setprecision(17) << "{\"samples\":" << r.samples << ",\"percent_unique\":" << r.percent_unique
        << ",\"mean_degree\":" << r.mean_degree << "}";
    return out.str();
}

namespace {

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string num(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace

std::string to_dot(const GraphSample& g, const VocabSpec& vocab, const std::string& name) {
    if (g.num_node_types() != vocab.num_node_types() || g.num_edge_types() != vocab.num_edge_types())
        throw std::invalid_argument("to_dot: graph does not match the vocabulary");
    std::ostringstream out;
    out << "graph " << quoted(name) << " {\n";
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
        if (!g.is_empty_node(i)) out << "  n" << i << " [label=" << quoted(vocab.node_types[g.node_type(i)]) << "];\n";
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
        for (std::size_t j = i + 1; j < g.num_nodes(); ++j) {
            const auto e = g.edge_type(i, j);
            if (e == vocab.no_edge_index || g.is_empty_node(i) || g.is_empty_node(j)) continue;
            out << "  n" << i << " -- n" << j << " [label=" << quoted(vocab.edge_types[e]) << "];\n";
        }
    out << "}\n";
    return out.str();
}

std::vector<std::filesystem::path> export_dot(std::span<const GraphSample> graphs, const VocabSpec& vocab,
                                              std::size_t k, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    for (std::size_t i = 0; i < std::min(k, graphs.size()); ++i) {
        const auto path = dir / ("graph_" + std::to_string(i) + ".dot");
        std::ofstream out(path, std::ios::binary);
        out << to_dot(graphs[i], vocab, "graph_" + std::to_string(i));
        if (!out) throw std::runtime_error("cannot write " + path.string());
        paths.push_back(path);
    }
    return paths;
}

const char* table_name(Table t) { return t == Table::Bias ? "table1" : "table2"; }
const char* objective_name(Table t) { return t == Table::Bias ? "d" : "lambda"; }

std::uint64_t trial_seed(const RunConfig& config, std::size_t trial) { return config.seed + trial; }

std::vector<GraphSample> training_graphs(const RunConfig& config, std::span<const GraphSample> train_split) {
    if (train_split.empty()) throw EmptySetError("training split is empty");
    const auto n = std::min(train_split.size(), scaled_count(train_split.size(), config.data_fraction));
    return {train_split.begin(), train_split.begin() + static_cast<std::ptrdiff_t>(n)};
}

TrialOutcome run_trial(const RunConfig& config, std::span<const GraphSample> train_graphs, std::uint64_t seed,
                       const train::EpochCallback& on_epoch) {
    TrialOutcome t;
    t.training = train::train(train_graphs, config.model, config.schedule, config.reward, seed, on_epoch);
    t.final_eval = evaluate(train::sample_graphs(t.training.params.generator, config.model, config.eval_samples, seed));
    t.pretrain_eval =
        evaluate(train::sample_graphs(t.training.pretrained.generator, config.model, config.eval_samples, seed));
    return t;
}

std::vector<MeanRow> ExperimentReport::means() const {
    std::vector<MeanRow> out;
    for (const auto& row : trials) {
        auto it = std::find_if(out.begin(), out.end(), [&](const MeanRow& m) { return m.objective == row.objective; });
        if (it == out.end()) {
            out.push_back({row.objective, 0, 0.0, 0.0});
            it = out.end() - 1;
        }
        if (!row.ok) continue;
        ++it->completed;
        it->percent_unique += row.eval.percent_unique;
        it->mean_degree += row.eval.mean_degree;
    }
    for (auto& m : out)
        if (m.completed > 0) {
            m.percent_unique /= static_cast<double>(m.completed);
            m.mean_degree /= static_cast<double>(m.completed);
        }
    return out;
}

std::vector<double> sweep(const RunConfig& config, Table table) {
    return table == Table::Bias ? config.experiment.table1_targets : config.experiment.table2_lambdas;
}

RunConfig cell_config(const RunConfig& config, Table table, double objective) {
    RunConfig c = config;
    if (table == Table::Bias) {
        c.reward.target_degree = objective;
        c.schedule.lambda_main = 0.0;
    } else {
        c.reward.target_degree = config.experiment.table2_target;
        c.schedule.lambda_main = objective;
    }
    return c;
}

ExperimentReport run_experiment(Table table, const RunConfig& config, std::span<const GraphSample> train_split,
                                const Progress& progress) {
    ExperimentReport report;
    report.table = table;
    report.config_hash = config_hash(config);
    report.code_version = kCodeVersion;
    const auto graphs = training_graphs(config, train_split);
    for (double objective : sweep(config, table)) {
        const RunConfig cell = cell_config(config, table, objective);
        for (std::size_t k = 0; k < config.trials; ++k) {
            TrialRow row;
            row.objective = objective;
            row.trial = k;
            row.seed = trial_seed(config, k);
            try {
                cell.validate();
                TrialOutcome t = run_trial(cell, graphs, row.seed);
                row.eval = t.final_eval;
                row.ok = true;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            if (progress) progress(row);
            report.trials.push_back(std::move(row));
        }
    }
    return report;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
    const std::string table = table_name(report.table);
    const std::string objective = objective_name(report.table);
    out << "table,objective_name,objective,trial,seed,status,percent_unique,mean_degree,config_hash,code_version,error\n";
    auto tail = [&](const std::string& error) {
        out << ',' << report.config_hash << ',' << report.code_version << ',' << csv_field(error) << '\n';
    };
    for (const auto& r : report.trials) {
        out << table << ',' << objective << ',' << num(r.objective) << ',' << r.trial << ',' << r.seed << ','
            << (r.ok ? "ok" : "failed") << ',';
        if (r.ok) out << num(r.eval.percent_unique) << ',' << num(r.eval.mean_degree);
        else out << ',';
        tail(r.error);
    }
    for (const auto& m : report.means()) {
        out << table << ',' << objective << ',' << num(m.objective) << ",mean,," << (m.completed ? "ok" : "failed")
            << ',';
        if (m.completed) out << num(m.percent_unique) << ',' << num(m.mean_degree);
        else out << ',';
        tail(m.completed ? "" : "no completed trials");
    }
}

}  // namespace degan::report
