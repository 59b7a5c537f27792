// SPDX-License-Identifier: Apache-2.0
// degan: ingest, train, sample, eval, export-dot, experiment.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "degan/config.hpp"
#include "degan/qm9.hpp"
#include "degan/report.hpp"
#include "degan/trainer.hpp"
#include "degan/version.hpp"

namespace fs = std::filesystem;
using namespace degan;

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kParseError = 2,
    kInsufficientData = 3,
    kConfigError = 4,
    kNumericalAbort = 5,
};

std::string checkpoint_metadata(const RunConfig& config, std::size_t epoch, const std::string& phase) {
    nlohmann::json j;
    j["model"] = to_json(config.model);
    j["epoch"] = epoch;
    j["phase"] = phase;
    j["config_hash"] = config_hash(config);
    j["code_version"] = kCodeVersion;
    return j.dump();
}

train::ModelSpec model_from_metadata(const std::string& metadata) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(metadata);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("checkpoint metadata is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("model")) throw FormatError("checkpoint metadata has no model description");
    return model_from_json(j["model"]);
}

RunConfig load_scaled(const std::string& path, double scale) {
    RunConfig c = load_config(path);
    return scale < 1.0 ? scaled(c, scale) : c;
}

qm9::DatasetSplit load_matching_dataset(const RunConfig& config) {
    if (config.dataset.empty()) throw ConfigError("dataset", "no dataset path given");
    auto split = qm9::load_dataset(config.resolve(config.dataset));
    if (!(split.vocab == config.model.vocab)) throw ConfigError("vocab", "does not match the dataset's vocabulary");
    return split;
}

int cmd_ingest(const std::string& sdf, const std::string& out, std::uint64_t seed, std::size_t train_n,
               std::size_t val_n) {
    const auto vocab = VocabSpec::qm9_default();
    const auto parsed = qm9::parse_sdf(fs::path(sdf), vocab);
    std::cout << "parsed=" << parsed.total << " kept=" << parsed.records.size()
              << " skipped_out_of_vocab=" << parsed.skipped_out_of_vocab
              << " skipped_too_large=" << parsed.skipped_too_large << '\n';
    const auto split = qm9::sample_split(parsed.records, vocab, train_n, val_n, seed);
    qm9::save_dataset(split, out);
    std::cout << "train=" << split.train.size() << " validation=" << split.validation.size() << " -> " << out << '\n';
    return kOk;
}

int cmd_train(const std::string& config_path, double scale) {
    const RunConfig config = load_scaled(config_path, scale);
    const auto split = load_matching_dataset(config);
    const auto graphs = report::training_graphs(config, split.train_graphs());
    const fs::path dir = config.resolve(config.output_dir);
    fs::create_directories(dir);

    std::ofstream log(dir / "log.csv", std::ios::binary | std::ios::trunc);
    train::write_log_header(log);
    const auto on_epoch = [&](const train::EpochLog& row, const ModelParams& params) {
        train::write_log_row(log, row);
        log.flush();
        std::cerr << "epoch " << row.epoch << " lambda=" << row.lambda << " d_loss=" << row.d_loss
                  << " g_loss=" << row.g_loss << " r_loss=" << row.r_loss << " val_mean_degree=" << row.val_mean_degree
                  << " val_pct_unique=" << row.val_pct_unique << '\n';
        const std::size_t done = row.epoch + 1;
        if (config.checkpoint_every > 0 && done % config.checkpoint_every == 0 && done < config.schedule.total_epochs)
            save_checkpoint(params, checkpoint_metadata(config, done, "periodic"),
                            dir / ("epoch_" + std::to_string(done) + ".ckpt"));
    };
    std::cerr << "training on " << graphs.size() << " graphs for " << config.schedule.total_epochs << " epochs\n";
    const auto result = train::train(graphs, config.model, config.schedule, config.reward,
                                     report::trial_seed(config, 0), on_epoch);
    save_checkpoint(result.pretrained, checkpoint_metadata(config, config.schedule.pretrain_epochs, "pretrain"),
                    dir / "pretrain.ckpt");
    save_checkpoint(result.params, checkpoint_metadata(config, config.schedule.total_epochs, "final"),
                    dir / "final.ckpt");
    std::cout << "wrote " << (dir / "final.ckpt").string() << '\n';
    return kOk;
}

int cmd_sample(const std::string& checkpoint, std::size_t n, std::uint64_t seed, const std::string& out) {
    std::string metadata;
    const auto params = load_checkpoint(checkpoint, &metadata);
    const auto spec = model_from_metadata(metadata);
    qm9::SampleSet set{spec.vocab, train::sample_graphs(params.generator, spec, n, seed)};
    qm9::save_samples(set, out);
    std::cout << "sampled=" << set.graphs.size() << " -> " << out << '\n';
    return kOk;
}

int cmd_eval(const std::string& samples) {
    const auto set = qm9::load_samples(samples);
    std::cout << report::eval_line(report::evaluate(set.graphs)) << '\n';
    return kOk;
}

int cmd_export_dot(const std::string& samples, std::size_t k, const std::string& out) {
    const auto set = qm9::load_samples(samples);
    const auto paths = report::export_dot(set.graphs, set.vocab, k, out);
    std::cout << "wrote " << paths.size() << " DOT files to " << out << '\n';
    return kOk;
}

int cmd_experiment(const std::string& which, const std::string& config_path, double scale, std::string out) {
    const report::Table table = which == "table1" ? report::Table::Bias : report::Table::Diversity;
    const RunConfig config = load_scaled(config_path, scale);
    const auto split = load_matching_dataset(config);
    if (out.empty()) out = (config.resolve(config.output_dir) / (which + ".csv")).string();
    const auto progress = [&](const report::TrialRow& r) {
        std::cerr << report::objective_name(table) << "=" << r.objective << " trial=" << r.trial << " seed=" << r.seed;
        if (r.ok)
            std::cerr << " percent_unique=" << r.eval.percent_unique << " mean_degree=" << r.eval.mean_degree << '\n';
        else
            std::cerr << " failed: " << r.error << '\n';
    };
    const auto rep = report::run_experiment(table, config, split.train_graphs(), progress);
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    std::ofstream csv(out, std::ios::binary | std::ios::trunc);
    report::write_report_csv(csv, rep);
    if (!csv) throw std::runtime_error("cannot write " + out);
    std::cout << "wrote " << out << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Degree-biased graph GAN: data ingestion, training, sampling and reports"};
    app.set_version_flag("--version", kCodeVersion);
    app.require_subcommand(1);

    std::string sdf, out, config_path, checkpoint, samples, table;
    std::uint64_t seed = 0;
    std::size_t train_n = 5000, val_n = 1664, n = 6400, k = 12;
    double scale = 1.0;

    auto* ingest = app.add_subcommand("ingest", "Parse an SDF file and write a train/validation dataset container");
    ingest->add_option("--sdf", sdf, "Input SDF file")->required();
    ingest->add_option("--out", out, "Output dataset file")->required();
    ingest->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    ingest->add_option("--train-n", train_n, "Training records")->capture_default_str();
    ingest->add_option("--val-n", val_n, "Validation records")->capture_default_str();

    auto* trainc = app.add_subcommand("train", "Train a model; writes log.csv and checkpoints into output_dir");
    trainc->add_option("--config", config_path, "Run configuration (JSON)")->required();
    trainc->add_option("--scale", scale, "Shrink epochs, data and sample counts by this factor")
        ->check(CLI::Range(1e-6, 1.0))
        ->capture_default_str();

    auto* sample = app.add_subcommand("sample", "Draw discrete graphs from a checkpoint's generator");
    sample->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    sample->add_option("--n", n, "Number of graphs")->capture_default_str();
    sample->add_option("--seed", seed, "Noise seed")->capture_default_str();
    sample->add_option("--out", out, "Output sample file")->required();

    auto* eval = app.add_subcommand("eval", "Print percent_unique and mean degree of a sample file as JSON");
    eval->add_option("--samples", samples, "Sample file")->required();

    auto* dot = app.add_subcommand("export-dot", "Write the first k graphs of a sample file as DOT files");
    dot->add_option("--samples", samples, "Sample file")->required();
    dot->add_option("--k", k, "Number of graphs")->capture_default_str();
    dot->add_option("--out", out, "Output directory")->required();

    auto* experiment = app.add_subcommand("experiment", "Run the target-degree (table1) or lambda (table2) sweep");
    experiment->add_option("table", table, "table1 or table2")->required()->check(CLI::IsMember({"table1", "table2"}));
    experiment->add_option("--config", config_path, "Run configuration (JSON)")->required();
    experiment->add_option("--scale", scale, "Shrink epochs, data and sample counts by this factor")
        ->check(CLI::Range(1e-6, 1.0))
        ->capture_default_str();
    experiment->add_option("--out", out, "Report CSV (default: <output_dir>/<table>.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kFailure;
    }

    try {
        if (*ingest) return cmd_ingest(sdf, out, seed, train_n, val_n);
        if (*trainc) return cmd_train(config_path, scale);
        if (*sample) return cmd_sample(checkpoint, n, seed, out);
        if (*eval) return cmd_eval(samples);
        if (*dot) return cmd_export_dot(samples, k, out);
        if (*experiment) return cmd_experiment(table, config_path, scale, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const qm9::InsufficientRecordsError& e) {
        std::cerr << "insufficient records: " << e.what() << '\n';
        return kInsufficientData;
    } catch (const train::NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kNumericalAbort;
    } catch (const FormatError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kParseError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
