// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "degan/autodiff.hpp"
#include "degan/graph.hpp"
#include "degan/nets.hpp"

namespace degan::train {

enum class RewardShape { Exponential, Linear };

/// Target average node degree d and the score curve around it.
struct RewardObjective {
    double target_degree = 2.0;
    RewardShape shape = RewardShape::Exponential;

    bool operator==(const RewardObjective&) const = default;
};

/// Score in [0, 1] for an observed mean degree; 1 exactly at the target.
/// Exponential: exp(-|m - d| / d), or exp(-m) when d = 0.
/// Linear: max(0, 1 - |m - d| / d), or max(0, 1 - m) when d = 0.
double reward_score(double mean_degree, const RewardObjective& objective);

/// Score of a set of graphs through its mean degree.
double reward_fn(std::span<const GraphSample> graphs, const RewardObjective& objective);

/// reward_fn of each graph as a singleton set.
std::vector<double> per_graph_rewards(std::span<const GraphSample> graphs, const RewardObjective& objective);

/// Any differentiable graph scorer returning one value per graph, shape [b].
using Critic = std::function<ad::Var(const nets::GraphBatch&)>;

/// eps_k * real_k + (1 - eps_k) * fake_k on both tensors, values only.
nets::GraphBatch interpolate(const nets::GraphBatch& real, const nets::GraphBatch& fake,
                             std::span<const double> eps);

/// Per-sample (||grad_x critic(x)|| - 1)^2 at `at`, shape [b]. The points are
/// registered as fresh leaves and the inner gradient is taped, so the result
/// stays differentiable with respect to the critic's parameters.
ad::Var gradient_penalty(ad::Tape& tape, const nets::GraphBatch& at, const Critic& critic);

/// WGAN-GP critic loss, averaged over the batch:
///   -D(x) + D(G(z)) + alpha * (||grad D(x_hat)|| - 1)^2.
ad::Var discriminator_loss(ad::Tape& tape, const nets::GraphBatch& real, const nets::GraphBatch& fake,
                           const Critic& discriminator, double alpha, std::span<const double> eps);

/// lambda * mean(-D(G(z))) + (1 - lambda) * mean(-R_hat(G(z))). A term whose
/// weight is zero is not evaluated.
ad::Var generator_loss(const nets::GraphBatch& fake, const Critic& discriminator, const Critic& reward_net,
                       double lambda);

/// mean((R_hat(fake) - R(fake))^2 + (R_hat(real) - R(real))^2).
ad::Var reward_net_loss(const nets::GraphBatch& fake, std::span<const double> fake_rewards,
                        const nets::GraphBatch& real, std::span<const double> real_rewards,
                        const Critic& reward_net);

}  // namespace degan::train
