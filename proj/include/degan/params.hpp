// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>

#include "degan/autodiff.hpp"

namespace degan {

enum class Role : std::uint8_t { Generator = 0, Discriminator = 1, Reward = 2 };

const char* role_name(Role role);

/// Named parameter tensors of one network, iterated in name order.
struct ParamSet {
    Role role = Role::Generator;
    std::map<std::string, Tensor> tensors;

    /// Adds a weight matrix drawn from the Glorot-uniform range.
    void add_weight(const std::string& name, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);
    void add_zeros(const std::string& name, Shape shape);

    const Tensor& at(const std::string& name) const;
    std::size_t count() const;

    bool operator==(const ParamSet&) const = default;
};

/// Parameters registered as leaves on one tape, looked up by name.
class BoundParams {
public:
    BoundParams(const ParamSet& params, ad::Tape& tape);
    /// Constants only; nothing is recorded.
    explicit BoundParams(const ParamSet& params);

    const ad::Var& operator[](const std::string& name) const;
    const std::map<std::string, ad::Var>& vars() const { return vars_; }

    /// d(loss)/d(param) keyed by parameter name.
    std::map<std::string, Tensor> gradients(ad::Tape& tape, const ad::Var& loss) const;

private:
    std::map<std::string, ad::Var> vars_;
};

using GradMap = std::map<std::string, Tensor>;

/// The three parameter sets of a model.
struct ModelParams {
    ParamSet generator{Role::Generator, {}};
    ParamSet discriminator{Role::Discriminator, {}};
    ParamSet reward{Role::Reward, {}};

    bool operator==(const ModelParams&) const = default;
};

/// Checkpoint container: a metadata string (JSON describing the model
/// configuration) followed by the three parameter sets with 64-bit values.
std::vector<std::uint8_t> encode_checkpoint(const ModelParams& params, const std::string& metadata);
ModelParams decode_checkpoint(std::vector<std::uint8_t> bytes, std::string* metadata = nullptr);
void save_checkpoint(const ModelParams& params, const std::string& metadata, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path, std::string* metadata = nullptr);

}  // namespace degan
