// SPDX-License-Identifier: Apache-2.0
#include "degan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>

namespace degan::train {

using ad::Var;
using nets::GraphBatch;

void TrainSchedule::validate() const {
    if (total_epochs == 0) throw std::invalid_argument("total_epochs must be positive");
    if (pretrain_epochs > total_epochs) throw std::invalid_argument("pretrain_epochs must not exceed total_epochs");
    if (!(lambda_pretrain >= 0.0 && lambda_pretrain <= 1.0)) throw std::invalid_argument("lambda_pretrain must be in [0, 1]");
    if (!(lambda_main >= 0.0 && lambda_main <= 1.0)) throw std::invalid_argument("lambda_main must be in [0, 1]");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (critic_steps == 0) throw std::invalid_argument("critic_steps must be positive");
    if (!(gp_alpha > 0.0)) throw std::invalid_argument("gp_alpha must be positive");
    if (!(optimizer.learning_rate > 0.0)) throw std::invalid_argument("optimizer.learning_rate must be positive");
    if (!(optimizer.rho >= 0.0 && optimizer.rho < 1.0)) throw std::invalid_argument("optimizer.rho must be in [0, 1)");
    if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0))
        throw std::invalid_argument("optimizer.momentum must be in [0, 1)");
    if (!(optimizer.epsilon > 0.0)) throw std::invalid_argument("optimizer.epsilon must be positive");
}

void write_log_header(std::ostream& out) {
    out << "epoch,lambda,d_loss,g_loss,r_loss,val_mean_degree,val_pct_unique,wall_seconds\n";
}

void write_log_row(std::ostream& out, const EpochLog& r) {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::setprecision(17) << r.epoch << ',' << r.lambda << ',' << r.d_loss << ',' << r.g_loss << ','
        << r.r_loss << ',' << r.val_mean_degree << ',' << r.val_pct_unique << ',' << std::setprecision(6)
        << r.wall_seconds << '\n';
    out.flags(flags);
    out.precision(precision);
}

ModelParams init_model(const ModelSpec& spec, std::uint64_t seed) {
    std::mt19937_64 seeds(seed);
    ModelParams p;
    p.generator = nets::init_generator(spec.generator, spec.vocab, seeds());
    p.discriminator = nets::init_rgcn(spec.rgcn, spec.vocab, Role::Discriminator, seeds());
    p.reward = nets::init_rgcn(spec.rgcn, spec.vocab, Role::Reward, seeds());
    return p;
}

namespace {

Tensor normal_noise(std::size_t b, std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Tensor z(Shape{b, dim});
    for (auto& v : z.data) v = dist(rng);
    return z;
}

std::vector<double> uniform_draws(std::size_t b, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> eps(b);
    for (auto& e : eps) e = dist(rng);
    return eps;
}

std::vector<GraphSample> discretize_batch(const GraphBatch& batch, const VocabSpec& vocab) {
    std::vector<GraphSample> out;
    for (const auto& rg : nets::to_relaxed(batch)) out.push_back(discretize(rg, vocab.empty_index, vocab.no_edge_index));
    return out;
}

class FiniteGuard {
public:
    FiniteGuard(std::size_t epoch, std::size_t batch) : epoch_(epoch), batch_(batch) {}

    void operator()(const Tensor& t, const std::string& what) const {
        if (!t.all_finite())
            throw NumericalError("non-finite values in " + what + " (epoch " + std::to_string(epoch_) + ", batch " +
                                 std::to_string(batch_) + ")");
    }
    void operator()(const GradMap& grads, const std::string& what) const {
        for (const auto& [name, g] : grads) (*this)(g, what + " gradient of " + name);
    }

private:
    std::size_t epoch_, batch_;
};

struct Trainer {
    const ModelSpec& spec;
    const TrainSchedule& schedule;
    const RewardObjective& objective;
    ModelParams params;
    RmsPropState gen_state, disc_state, reward_state;

    GraphBatch generate_constant(const Tensor& z) const {
        const BoundParams theta(params.generator);
        return nets::generate(Var(z), theta, spec.generator, spec.vocab);
    }

    double critic_step(const GraphBatch& real, const GraphBatch& fake, std::span<const double> eps,
                       const FiniteGuard& check) {
        ad::Tape tape;
        const BoundParams phi(params.discriminator, tape);
        const Critic disc = [&](const GraphBatch& g) { return nets::discriminate(g, phi, spec.rgcn, spec.vocab); };
        const Var loss = discriminator_loss(tape, real, fake, disc, schedule.gp_alpha, eps);
        check(loss.value(), "discriminator loss");
        const auto grads = phi.gradients(tape, loss);
        check(grads, "discriminator");
        rmsprop_step(params.discriminator, grads, disc_state, schedule.optimizer);
        return loss.item();
    }

    double reward_step(const GraphBatch& real, std::span<const double> real_rewards, const GraphBatch& fake,
                       const FiniteGuard& check) {
        const auto fake_rewards = per_graph_rewards(discretize_batch(fake, spec.vocab), objective);
        ad::Tape tape;
        const BoundParams psi(params.reward, tape);
        const Critic reward = [&](const GraphBatch& g) { return nets::reward_predict(g, psi, spec.rgcn, spec.vocab); };
        const Var loss = reward_net_loss(fake, fake_rewards, real, real_rewards, reward);
        check(loss.value(), "reward-network loss");
        const auto grads = psi.gradients(tape, loss);
        check(grads, "reward-network");
        rmsprop_step(params.reward, grads, reward_state, schedule.optimizer);
        return loss.item();
    }

    double generator_step(const Tensor& z, double lambda, const FiniteGuard& check) {
        ad::Tape tape;
        const BoundParams theta(params.generator, tape);
        const BoundParams phi(params.discriminator);
        const BoundParams psi(params.reward);
        const Critic disc = [&](const GraphBatch& g) { return nets::discriminate(g, phi, spec.rgcn, spec.vocab); };
        const Critic reward = [&](const GraphBatch& g) { return nets::reward_predict(g, psi, spec.rgcn, spec.vocab); };
        const GraphBatch fake = nets::generate(Var(z), theta, spec.generator, spec.vocab);
        check(fake.nodes.value(), "generator node output");
        check(fake.adjacency.value(), "generator adjacency output");
        const Var loss = generator_loss(fake, disc, reward, lambda);
        check(loss.value(), "generator loss");
        const auto grads = theta.gradients(tape, loss);
        check(grads, "generator");
        rmsprop_step(params.generator, grads, gen_state, schedule.optimizer);
        return loss.item();
    }
};

}  // namespace

TrainResult train(std::span<const GraphSample> train_set, const ModelSpec& spec, const TrainSchedule& schedule,
                  const RewardObjective& objective, std::uint64_t seed, const EpochCallback& on_epoch) {
    schedule.validate();
    spec.vocab.validate();
    if (train_set.empty()) throw EmptySetError("train: empty training set");
    if (objective.target_degree < 0.0) throw std::invalid_argument("target degree must be >= 0");

    std::mt19937_64 seeds(seed);
    const std::uint64_t init_seed = seeds();
    std::mt19937_64 rng(seeds());
    const std::uint64_t validation_seed = seeds();

    Trainer t{spec, schedule, objective, init_model(spec, init_seed), {}, {}, {}};
    const bool train_reward = schedule.trains_reward();
    const std::vector<double> all_real_rewards = per_graph_rewards(train_set, objective);

    TrainResult result;
    if (schedule.pretrain_epochs == 0) result.pretrained = t.params;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t epoch = 0; epoch < schedule.total_epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        const double lambda = schedule.lambda_at(epoch);

        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);

        double d_sum = 0.0, g_sum = 0.0, r_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += schedule.batch_size, ++batches) {
            const std::size_t b = std::min(schedule.batch_size, order.size() - start);
            const FiniteGuard check(epoch, batches);
            std::vector<GraphSample> real_graphs;
            std::vector<double> real_rewards;
            for (std::size_t k = start; k < start + b; ++k) {
                real_graphs.push_back(train_set[order[k]]);
                real_rewards.push_back(all_real_rewards[order[k]]);
            }
            const GraphBatch real = nets::lift(real_graphs);

            double d_loss = 0.0, r_loss = 0.0;
            for (std::size_t step = 0; step < schedule.critic_steps; ++step) {
                const Tensor z = normal_noise(b, spec.generator.z_dim, rng);
                const auto eps = uniform_draws(b, rng);
                const GraphBatch fake = t.generate_constant(z);
                check(fake.nodes.value(), "generator node output");
                check(fake.adjacency.value(), "generator adjacency output");
                d_loss += t.critic_step(real, fake, eps, check);
                if (train_reward) r_loss += t.reward_step(real, real_rewards, fake, check);
            }
            d_sum += d_loss / static_cast<double>(schedule.critic_steps);
            r_sum += r_loss / static_cast<double>(schedule.critic_steps);

            const Tensor z = normal_noise(b, spec.generator.z_dim, rng);
            g_sum += t.generator_step(z, lambda, check);
        }

        EpochLog row;
        row.epoch = epoch;
        row.lambda = lambda;
        row.d_loss = d_sum / static_cast<double>(batches);
        row.g_loss = g_sum / static_cast<double>(batches);
        row.r_loss = r_sum / static_cast<double>(batches);
        if (schedule.validation_samples > 0) {
            const auto drawn =
                sample_graphs(t.params.generator, spec, schedule.validation_samples, validation_seed + epoch);
            row.val_mean_degree = mean_degree_over_set(drawn);
            row.val_pct_unique = percent_unique(drawn);
        }
        row.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.log.push_back(row);

        if (epoch + 1 == schedule.pretrain_epochs) result.pretrained = t.params;
        if (on_epoch) on_epoch(row, t.params);
    }
    result.params = std::move(t.params);
    return result;
}

std::vector<GraphSample> sample_graphs(const ParamSet& generator, const ModelSpec& spec, std::size_t n,
                                       std::uint64_t seed) {
    constexpr std::size_t kChunk = 256;
    std::mt19937_64 rng(seed);
    const BoundParams theta(generator);
    std::vector<GraphSample> out;
    out.reserve(n);
    while (out.size() < n) {
        const std::size_t b = std::min(kChunk, n - out.size());
        const Var z(normal_noise(b, spec.generator.z_dim, rng));
        const auto batch = nets::generate(z, theta, spec.generator, spec.vocab);
        for (auto& g : discretize_batch(batch, spec.vocab)) out.push_back(std::move(g));
    }
    return out;
}

}  // namespace degan::train
