// SPDX-License-Identifier: Apache-2.0
#include "degan/losses.hpp"

#include <algorithm>
#include <cmath>

namespace degan::train {

using ad::Var;
using nets::GraphBatch;

double reward_score(double mean_degree, const RewardObjective& objective) {
    const double d = objective.target_degree;
    if (d < 0.0) throw std::invalid_argument("reward: target degree must be >= 0");
    const double rel = d > 0.0 ? std::abs(mean_degree - d) / d : std::abs(mean_degree);
    switch (objective.shape) {
        case RewardShape::Exponential: return std::exp(-rel);
        case RewardShape::Linear: return std::max(0.0, 1.0 - rel);
    }
    return 0.0;
}

double reward_fn(std::span<const GraphSample> graphs, const RewardObjective& objective) {
    return reward_score(mean_degree_over_set(graphs), objective);
}

std::vector<double> per_graph_rewards(std::span<const GraphSample> graphs, const RewardObjective& objective) {
    std::vector<double> out;
    out.reserve(graphs.size());
    for (const auto& g : graphs) out.push_back(reward_score(average_node_degree(g), objective));
    return out;
}

namespace {

Tensor per_sample(std::span<const double> values, std::size_t rank) {
    Shape s(rank, 1);
    s[0] = values.size();
    return Tensor(s, std::vector<double>(values.begin(), values.end()));
}

void check_batch(const GraphBatch& a, const GraphBatch& b, const char* what) {
    if (a.nodes.shape() != b.nodes.shape() || a.adjacency.shape() != b.adjacency.shape())
        throw ShapeError(std::string(what) + ": batches differ in shape (" + shape_str(a.nodes.shape()) + " vs " +
                         shape_str(b.nodes.shape()) + ")");
}

}  // namespace

GraphBatch interpolate(const GraphBatch& real, const GraphBatch& fake, std::span<const double> eps) {
    check_batch(real, fake, "interpolate");
    if (eps.size() != real.size()) throw ShapeError("interpolate: need one epsilon per sample");
    ad::NoGradGuard no_grad;
    std::vector<double> one_minus(eps.size());
    std::transform(eps.begin(), eps.end(), one_minus.begin(), [](double e) { return 1.0 - e; });
    auto mix = [&](const Var& x, const Var& y) {
        const auto rank = x.shape().size();
        return ad::add(ad::mul(x.detach(), Var(per_sample(eps, rank))),
                       ad::mul(y.detach(), Var(per_sample(one_minus, rank))));
    };
    return {mix(real.nodes, fake.nodes), mix(real.adjacency, fake.adjacency)};
}

Var gradient_penalty(ad::Tape& tape, const GraphBatch& at, const Critic& critic) {
    const GraphBatch x = nets::as_leaves(at, tape);
    const Var scores = critic(x);
    const std::size_t b = x.size();
    if (scores.shape() != Shape{b}) throw ShapeError("gradient_penalty: critic must return shape [b]");
    if (!scores.recorded()) {
        // Critic ignores its input: zero gradient everywhere.
        return Var(Tensor(Shape{b}, 1.0));
    }
    const Var total = ad::sum_all(scores);
    const std::vector<Var> wrt{x.nodes, x.adjacency};
    const auto grads = tape.gradient(total, wrt, /*create_graph=*/true);
    const Var squared = ad::add(ad::sum(ad::square(grads[0]), {1, 2}), ad::sum(ad::square(grads[1]), {1, 2, 3}));
    return ad::square(ad::add_scalar(ad::sqrt(squared), -1.0));
}

Var discriminator_loss(ad::Tape& tape, const GraphBatch& real, const GraphBatch& fake, const Critic& discriminator,
                       double alpha, std::span<const double> eps) {
    check_batch(real, fake, "discriminator_loss");
    const Var penalty = gradient_penalty(tape, interpolate(real, fake, eps), discriminator);
    const Var wgan = ad::sub(discriminator(fake), discriminator(real));
    return ad::mean_all(ad::add(wgan, ad::scale(penalty, alpha)));
}

Var generator_loss(const GraphBatch& fake, const Critic& discriminator, const Critic& reward_net, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("generator_loss: lambda must be in [0, 1]");
    Var loss;
    if (lambda > 0.0) loss = ad::scale(ad::mean_all(ad::neg(discriminator(fake))), lambda);
    if (lambda < 1.0) {
        const Var rl = ad::scale(ad::mean_all(ad::neg(reward_net(fake))), 1.0 - lambda);
        loss = loss.defined() ? ad::add(loss, rl) : rl;
    }
    return loss;
}

Var reward_net_loss(const GraphBatch& fake, std::span<const double> fake_rewards, const GraphBatch& real,
                    std::span<const double> real_rewards, const Critic& reward_net) {
    if (fake_rewards.size() != fake.size() || real_rewards.size() != real.size())
        throw ShapeError("reward_net_loss: need one reward per sample");
    if (fake.size() != real.size()) throw ShapeError("reward_net_loss: batch sizes differ");
    auto target = [](std::span<const double> r) {
        return Var(Tensor(Shape{r.size()}, std::vector<double>(r.begin(), r.end())));
    };
    const Var fake_err = ad::square(ad::sub(reward_net(fake), target(fake_rewards)));
    const Var real_err = ad::square(ad::sub(reward_net(real), target(real_rewards)));
    return ad::mean_all(ad::add(fake_err, real_err));
}

}  // namespace degan::train
