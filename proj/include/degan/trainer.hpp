// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "degan/graph.hpp"
#include "degan/losses.hpp"
#include "degan/nets.hpp"
#include "degan/optim.hpp"
#include "degan/params.hpp"
#include "degan/vocab.hpp"

namespace degan::train {

struct ModelSpec {
    VocabSpec vocab = VocabSpec::qm9_default();
    nets::GeneratorSpec generator;
    nets::RgcnSpec rgcn;

    bool operator==(const ModelSpec&) const = default;
};

struct TrainSchedule {
    std::size_t total_epochs = 300;
    std::size_t pretrain_epochs = 150;
    double lambda_pretrain = 1.0;
    double lambda_main = 0.0;
    std::size_t batch_size = 32;
    /// Discriminator (and reward-network) updates per generator update.
    std::size_t critic_steps = 1;
    RmsPropConfig optimizer;
    double gp_alpha = 10.0;
    /// Size of the per-epoch validation draw; 0 disables it.
    std::size_t validation_samples = 512;

    bool operator==(const TrainSchedule&) const = default;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    double lambda_at(std::size_t epoch) const { return epoch < pretrain_epochs ? lambda_pretrain : lambda_main; }
    bool trains_reward() const { return lambda_main < 1.0; }
};

struct EpochLog {
    std::size_t epoch = 0;
    double lambda = 0.0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    /// 0 when the reward network is not trained.
    double r_loss = 0.0;
    double val_mean_degree = 0.0;
    double val_pct_unique = 0.0;
    double wall_seconds = 0.0;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const EpochLog& row);

struct TrainResult {
    ModelParams params;
    /// Parameters at the end of the pretraining phase.
    ModelParams pretrained;
    std::vector<EpochLog> log;
};

/// Raised when a loss, activation or gradient stops being finite.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(const EpochLog&, const ModelParams&)>;

/// Fresh parameters for all three networks, derived from one seed.
ModelParams init_model(const ModelSpec& spec, std::uint64_t seed);

/// Two-phase WGAN-GP training with the reward-mixed generator objective.
/// Every random draw (initialization, batch order, noise, interpolation
/// weights, validation draws) derives from `seed`.
TrainResult train(std::span<const GraphSample> train_set, const ModelSpec& spec, const TrainSchedule& schedule,
                  const RewardObjective& objective, std::uint64_t seed, const EpochCallback& on_epoch = {});

/// n discrete graphs: z ~ N(0, I), generate, discretize.
std::vector<GraphSample> sample_graphs(const ParamSet& generator, const ModelSpec& spec, std::size_t n,
                                       std::uint64_t seed);

}  // namespace degan::train
