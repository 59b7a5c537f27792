// SPDX-License-Identifier: Apache-2.0
#include "degan/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace degan {

using nlohmann::json;

ConfigError::ConfigError(std::string path, const std::string& what)
    : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
}

std::uint64_t as_unsigned(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        if (v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        throw ConfigError(path, "must not be negative");
    }
    throw ConfigError(path, "expected a non-negative integer");
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
}

template <typename T, typename F>
std::vector<T> as_list(const json& v, const std::string& path, F element) {
    if (!v.is_array()) throw ConfigError(path, "expected a list");
    std::vector<T> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(element(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

// Walks one object; keys not consumed by the time of finish() are errors.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    std::string at(const std::string& key) const { return join(path_, key); }

    void number(const std::string& key, double& out) {
        if (auto v = find(key)) out = as_number(*v, at(key));
    }
    template <typename U>
    void count(const std::string& key, U& out) {
        if (auto v = find(key)) out = static_cast<U>(as_unsigned(*v, at(key)));
    }
    void string(const std::string& key, std::string& out) {
        if (auto v = find(key)) out = as_string(*v, at(key));
    }
    void sizes(const std::string& key, std::vector<std::size_t>& out) {
        if (auto v = find(key))
            out = as_list<std::size_t>(*v, at(key),
                                       [](const json& e, const std::string& p) { return as_unsigned(e, p); });
    }
    void numbers(const std::string& key, std::vector<double>& out) {
        if (auto v = find(key))
            out = as_list<double>(*v, at(key), [](const json& e, const std::string& p) { return as_number(e, p); });
    }
    void strings(const std::string& key, std::vector<std::string>& out) {
        if (auto v = find(key))
            out = as_list<std::string>(*v, at(key),
                                       [](const json& e, const std::string& p) { return as_string(e, p); });
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_vocab(Section& s, VocabSpec& v) {
    s.strings("node_types", v.node_types);
    s.strings("edge_types", v.edge_types);
    s.count("empty_index", v.empty_index);
    s.count("no_edge_index", v.no_edge_index);
    s.count("max_nodes", v.max_nodes);
    s.finish();
}

void read_generator(Section& s, nets::GeneratorSpec& g) {
    s.count("z_dim", g.z_dim);
    s.sizes("hidden", g.hidden);
    s.finish();
}

void read_rgcn(Section& s, nets::RgcnSpec& r) {
    s.sizes("layers", r.layers);
    s.count("attention_hidden", r.attention_hidden);
    s.count("attention_out", r.attention_out);
    s.finish();
}

void read_schedule(Section& s, train::TrainSchedule& t) {
    s.count("total_epochs", t.total_epochs);
    s.count("pretrain_epochs", t.pretrain_epochs);
    s.number("lambda_pretrain", t.lambda_pretrain);
    s.number("lambda_main", t.lambda_main);
    s.count("batch_size", t.batch_size);
    s.count("critic_steps", t.critic_steps);
    s.number("gp_alpha", t.gp_alpha);
    s.count("validation_samples", t.validation_samples);
    if (auto o = s.find("optimizer")) {
        Section os(*o, s.at("optimizer"));
        os.number("learning_rate", t.optimizer.learning_rate);
        os.number("rho", t.optimizer.rho);
        os.number("momentum", t.optimizer.momentum);
        os.number("epsilon", t.optimizer.epsilon);
        os.finish();
    }
    s.finish();
}

void read_reward(Section& s, train::RewardObjective& r) {
    s.number("target_degree", r.target_degree);
    if (auto v = s.find("shape")) {
        const auto name = as_string(*v, s.at("shape"));
        if (name == "exponential") r.shape = train::RewardShape::Exponential;
        else if (name == "linear") r.shape = train::RewardShape::Linear;
        else throw ConfigError(s.at("shape"), "expected \"exponential\" or \"linear\", got \"" + name + "\"");
    }
    s.finish();
}

template <typename F>
void section(Section& parent, const std::string& key, F read) {
    if (auto v = parent.find(key)) {
        Section child(*v, parent.at(key));
        read(child);
    }
}

constexpr auto kVocabFields = {"max_nodes", "empty_index", "no_edge_index"};
constexpr auto kScheduleFields = {"total_epochs",  "pretrain_epochs",         "lambda_pretrain",  "lambda_main",
                                  "batch_size",    "critic_steps",            "gp_alpha",         "optimizer.learning_rate",
                                  "optimizer.rho", "optimizer.momentum",      "optimizer.epsilon"};

// Re-raises a domain validation failure as a schema error at `path`, or at
// path.<field> when the message starts with one of `fields`.
template <typename F>
void check(const std::string& path, F validate, std::initializer_list<const char*> fields = {}) {
    try {
        validate();
    } catch (const std::invalid_argument& e) {
        std::string what = e.what();
        if (what.rfind(path + ": ", 0) == 0) what.erase(0, path.size() + 2);
        for (const std::string field : fields)
            if (what.rfind(field + " ", 0) == 0) throw ConfigError(join(path, field), what);
        throw ConfigError(path, what);
    }
}

}  // namespace

std::filesystem::path RunConfig::resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

void RunConfig::validate() const {
    check("vocab", [&] { model.vocab.validate(); }, kVocabFields);
    if (model.generator.z_dim == 0) throw ConfigError("generator.z_dim", "must be positive");
    for (std::size_t k = 0; k < model.generator.hidden.size(); ++k)
        if (model.generator.hidden[k] == 0) throw ConfigError("generator.hidden[" + std::to_string(k) + "]", "must be positive");
    if (model.rgcn.layers.empty()) throw ConfigError("rgcn.layers", "need at least one layer");
    for (std::size_t k = 0; k < model.rgcn.layers.size(); ++k)
        if (model.rgcn.layers[k] == 0) throw ConfigError("rgcn.layers[" + std::to_string(k) + "]", "must be positive");
    if (model.rgcn.attention_hidden == 0) throw ConfigError("rgcn.attention_hidden", "must be positive");
    if (model.rgcn.attention_out == 0) throw ConfigError("rgcn.attention_out", "must be positive");
    check("schedule", [&] { schedule.validate(); }, kScheduleFields);
    if (!(reward.target_degree >= 0.0)) throw ConfigError("reward.target_degree", "must be >= 0");
    if (eval_samples == 0) throw ConfigError("eval_samples", "must be at least 1");
    if (trials == 0) throw ConfigError("trials", "must be at least 1");
    if (!(data_fraction > 0.0 && data_fraction <= 1.0)) throw ConfigError("data_fraction", "must be in (0, 1]");
    for (std::size_t k = 0; k < experiment.table1_targets.size(); ++k)
        if (!(experiment.table1_targets[k] >= 0.0))
            throw ConfigError("experiment.table1_targets[" + std::to_string(k) + "]", "must be >= 0");
    for (std::size_t k = 0; k < experiment.table2_lambdas.size(); ++k) {
        const double l = experiment.table2_lambdas[k];
        if (!(l >= 0.0 && l <= 1.0))
            throw ConfigError("experiment.table2_lambdas[" + std::to_string(k) + "]", "must be in [0, 1]");
    }
    if (!(experiment.table2_target >= 0.0)) throw ConfigError("experiment.table2_target", "must be >= 0");
}

RunConfig parse_config(const json& j) {
    RunConfig c;
    Section root(j, "");
    root.string("dataset", c.dataset);
    root.string("output_dir", c.output_dir);
    root.count("seed", c.seed);
    root.count("eval_samples", c.eval_samples);
    root.count("trials", c.trials);
    root.count("checkpoint_every", c.checkpoint_every);
    root.number("data_fraction", c.data_fraction);
    section(root, "vocab", [&](Section& s) { read_vocab(s, c.model.vocab); });
    section(root, "generator", [&](Section& s) { read_generator(s, c.model.generator); });
    section(root, "rgcn", [&](Section& s) { read_rgcn(s, c.model.rgcn); });
    section(root, "schedule", [&](Section& s) { read_schedule(s, c.schedule); });
    section(root, "reward", [&](Section& s) { read_reward(s, c.reward); });
    section(root, "experiment", [&](Section& s) {
        s.numbers("table1_targets", c.experiment.table1_targets);
        s.numbers("table2_lambdas", c.experiment.table2_lambdas);
        s.number("table2_target", c.experiment.table2_target);
        s.finish();
    });
    root.finish();
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
    }
    RunConfig c = parse_config(j);
    c.base_dir = path.parent_path();
    return c;
}

json to_json(const VocabSpec& v) {
    return {{"node_types", v.node_types},   {"edge_types", v.edge_types}, {"empty_index", v.empty_index},
            {"no_edge_index", v.no_edge_index}, {"max_nodes", v.max_nodes}};
}

VocabSpec vocab_from_json(const json& j, const std::string& path) {
    VocabSpec v = VocabSpec::qm9_default();
    Section s(j, path);
    read_vocab(s, v);
    check(path, [&] { v.validate(); }, kVocabFields);
    return v;
}

json to_json(const train::ModelSpec& m) {
    return {{"vocab", to_json(m.vocab)},
            {"generator", {{"z_dim", m.generator.z_dim}, {"hidden", m.generator.hidden}}},
            {"rgcn",
             {{"layers", m.rgcn.layers},
              {"attention_hidden", m.rgcn.attention_hidden},
              {"attention_out", m.rgcn.attention_out}}}};
}

train::ModelSpec model_from_json(const json& j) {
    train::ModelSpec m;
    Section root(j, "");
    section(root, "vocab", [&](Section& s) { read_vocab(s, m.vocab); });
    section(root, "generator", [&](Section& s) { read_generator(s, m.generator); });
    section(root, "rgcn", [&](Section& s) { read_rgcn(s, m.rgcn); });
    root.finish();
    check("vocab", [&] { m.vocab.validate(); }, kVocabFields);
    return m;
}

json to_json(const RunConfig& c) {
    json j = to_json(c.model);
    const auto& t = c.schedule;
    j["dataset"] = c.dataset;
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    j["eval_samples"] = c.eval_samples;
    j["trials"] = c.trials;
    j["checkpoint_every"] = c.checkpoint_every;
    j["data_fraction"] = c.data_fraction;
    j["schedule"] = {{"total_epochs", t.total_epochs},
                     {"pretrain_epochs", t.pretrain_epochs},
                     {"lambda_pretrain", t.lambda_pretrain},
                     {"lambda_main", t.lambda_main},
                     {"batch_size", t.batch_size},
                     {"critic_steps", t.critic_steps},
                     {"gp_alpha", t.gp_alpha},
                     {"validation_samples", t.validation_samples},
                     {"optimizer",
                      {{"learning_rate", t.optimizer.learning_rate},
                       {"rho", t.optimizer.rho},
                       {"momentum", t.optimizer.momentum},
                       {"epsilon", t.optimizer.epsilon}}}};
    j["reward"] = {{"target_degree", c.reward.target_degree},
                   {"shape", c.reward.shape == train::RewardShape::Linear ? "linear" : "exponential"}};
    j["experiment"] = {{"table1_targets", c.experiment.table1_targets},
                       {"table2_lambdas", c.experiment.table2_lambdas},
                       {"table2_target", c.experiment.table2_target}};
    return j;
}

std::string config_hash(const RunConfig& config) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : to_json(config).dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k, h >>= 4) out[static_cast<std::size_t>(k)] = hex[h & 0xf];
    return out;
}

std::size_t scaled_count(std::size_t n, double factor) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * factor)));
}

RunConfig scaled(const RunConfig& config, double factor) {
    if (!(factor > 0.0 && factor <= 1.0)) throw ConfigError("scale", "must be in (0, 1]");
    RunConfig c = config;
    auto& t = c.schedule;
    const double share = static_cast<double>(t.pretrain_epochs) / static_cast<double>(t.total_epochs);
    t.total_epochs = scaled_count(t.total_epochs, factor);
    t.pretrain_epochs = static_cast<std::size_t>(std::llround(share * static_cast<double>(t.total_epochs)));
    if (t.validation_samples > 0) t.validation_samples = scaled_count(t.validation_samples, factor);
    c.eval_samples = scaled_count(c.eval_samples, factor);
    c.data_fraction = config.data_fraction * factor;
    if (c.checkpoint_every > 0) c.checkpoint_every = scaled_count(c.checkpoint_every, factor);
    return c;
}

}  // namespace degan
