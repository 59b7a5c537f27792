// SPDX-License-Identifier: Apache-2.0
#include "degan/params.hpp"

#include <cmath>

#include "degan/container.hpp"

namespace degan {

const char* role_name(Role role) {
    switch (role) {
        case Role::Generator: return "generator";
        case Role::Discriminator: return "discriminator";
        case Role::Reward: return "reward";
    }
    return "unknown";
}

void ParamSet::add_weight(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                          std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor w(Shape{fan_in, fan_out});
    for (auto& v : w.data) v = dist(rng);
    if (!tensors.emplace(name, std::move(w)).second)
        throw std::invalid_argument("duplicate parameter name " + name);
}

void ParamSet::add_zeros(const std::string& name, Shape shape) {
    if (!tensors.emplace(name, Tensor(std::move(shape), 0.0)).second)
        throw std::invalid_argument("duplicate parameter name " + name);
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
}

std::size_t ParamSet::count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors) n += t.size();
    return n;
}

BoundParams::BoundParams(const ParamSet& params, ad::Tape& tape) {
    for (const auto& [name, t] : params.tensors) vars_.emplace(name, tape.leaf(t));
}

BoundParams::BoundParams(const ParamSet& params) {
    for (const auto& [name, t] : params.tensors) vars_.emplace(name, ad::Var(t));
}

const ad::Var& BoundParams::operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
}

std::map<std::string, Tensor> BoundParams::gradients(ad::Tape& tape, const ad::Var& loss) const {
    std::vector<ad::Var> leaves;
    leaves.reserve(vars_.size());
    for (const auto& [name, v] : vars_) leaves.push_back(v);
    auto grads = tape.gradient(loss, leaves);
    std::map<std::string, Tensor> out;
    std::size_t k = 0;
    for (const auto& [name, v] : vars_) out.emplace(name, grads[k++].value());
    return out;
}

namespace {

void write_set(ByteWriter& w, const ParamSet& set) {
    w.u8(static_cast<std::uint8_t>(set.role));
    w.u32(static_cast<std::uint32_t>(set.tensors.size()));
    for (const auto& [name, t] : set.tensors) {
        w.str(name);
        w.u8(static_cast<std::uint8_t>(t.shape.size()));
        for (auto d : t.shape) w.u32(static_cast<std::uint32_t>(d));
        for (auto v : t.data) w.f64(v);
    }
}

ParamSet read_set(ByteReader& r, Role expected) {
    ParamSet set;
    const auto role = r.u8();
    if (role != static_cast<std::uint8_t>(expected))
        throw FormatError(std::string("checkpoint: expected ") + role_name(expected) + " parameters");
    set.role = expected;
    const auto n = r.u32();
    for (std::uint32_t k = 0; k < n; ++k) {
        auto name = r.str();
        const auto rank = r.u8();
        Shape shape(rank);
        for (auto& d : shape) d = r.u32();
        Tensor t(shape);
        for (auto& v : t.data) v = r.f64();
        if (!set.tensors.emplace(std::move(name), std::move(t)).second)
            throw FormatError("checkpoint: duplicate parameter name");
    }
    return set;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelParams& params, const std::string& metadata) {
    ByteWriter w(kCheckpointMagic, kFormatVersion);
    w.str(metadata);
    write_set(w, params.generator);
    write_set(w, params.discriminator);
    write_set(w, params.reward);
    return std::move(w).finish();
}

ModelParams decode_checkpoint(std::vector<std::uint8_t> bytes, std::string* metadata) {
    ByteReader r(std::move(bytes), kCheckpointMagic, kFormatVersion);
    auto meta = r.str();
    if (metadata) *metadata = std::move(meta);
    ModelParams p;
    p.generator = read_set(r, Role::Generator);
    p.discriminator = read_set(r, Role::Discriminator);
    p.reward = read_set(r, Role::Reward);
    if (!r.at_end()) throw FormatError("trailing bytes after checkpoint payload");
    return p;
}

void save_checkpoint(const ModelParams& params, const std::string& metadata, const std::filesystem::path& path) {
    write_file(path, encode_checkpoint(params, metadata));
}

ModelParams load_checkpoint(const std::filesystem::path& path, std::string* metadata) {
    return decode_checkpoint(read_file(path), metadata);
}

}  // namespace degan
