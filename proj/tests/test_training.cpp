#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "degan/losses.hpp"
#include "degan/optim.hpp"
#include "degan/trainer.hpp"
#include "support.hpp"

using namespace degan;
using namespace degan::train;
using ad::Var;
using degan::testing::param_grad_check;
using degan::testing::random_graph;
using degan::testing::random_relaxed_batch;
using degan::testing::random_tensor;
using degan::testing::small_vocab;
using nets::GraphBatch;

namespace {

GraphSample path_graph(const VocabSpec& v, std::size_t length) {
    GraphSample g = GraphSample::empty_like(v);
    for (std::size_t i = 0; i < length; ++i) g.set_node_type(i, 0);
    for (std::size_t i = 0; i + 1 < length; ++i) g.set_edge_type(i, i + 1, 1);
    return g;
}

Critic constant_critic(double value, int* calls = nullptr) {
    return [=](const GraphBatch& g) {
        if (calls) ++*calls;
        return Var(Tensor(Shape{g.size()}, value));
    };
}

// Per-sample constants, independent of the input.
Critic table_critic(std::vector<double> values) {
    return [=](const GraphBatch&) { return Var(Tensor(Shape{values.size()}, values)); };
}

double sum_sq(const Tensor& t, std::size_t k, std::size_t per) {
    double s = 0.0;
    for (std::size_t i = k * per; i < (k + 1) * per; ++i) s += t[i] * t[i];
    return s;
}

ad::Tape& tape_of(const BoundParams& p, ad::Tape& fallback) {
    ad::Tape* t = p.vars().begin()->second.tape();
    return t ? *t : fallback;
}

ModelSpec tiny_model() {
    ModelSpec m;
    m.vocab = small_vocab(4);
    m.generator = {4, {8}};
    m.rgcn = {{4}, 4, 4};
    return m;
}

TrainSchedule tiny_schedule() {
    TrainSchedule s;
    s.total_epochs = 4;
    s.pretrain_epochs = 2;
    s.batch_size = 8;
    s.validation_samples = 16;
    return s;
}

std::vector<GraphSample> tiny_data(const VocabSpec& v, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<GraphSample> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(random_graph(v, rng));
    return out;
}

}  // namespace

TEST(Reward, Examples) {
    const auto v = VocabSpec::qm9_default();
    const RewardObjective d2{2.0};
    EXPECT_DOUBLE_EQ(reward_score(0.0, d2), 0.36787944117144233);
    EXPECT_EQ(reward_score(2.0, d2), 1.0);
    EXPECT_DOUBLE_EQ(reward_score(3.0, d2), std::exp(-0.5));
    EXPECT_DOUBLE_EQ(reward_score(1.5, {0.0}), std::exp(-1.5));
    EXPECT_EQ(reward_score(0.0, {0.0}), 1.0);
    EXPECT_DOUBLE_EQ(reward_score(3.0, {2.0, RewardShape::Linear}), 0.5);
    EXPECT_EQ(reward_score(5.0, {2.0, RewardShape::Linear}), 0.0);
    EXPECT_THROW(reward_score(1.0, {-1.0}), std::invalid_argument);

    // path of 3 (degree 4/3) and a single bond (degree 1): set mean 7/6
    const std::vector<GraphSample> set{path_graph(v, 3), path_graph(v, 2)};
    EXPECT_DOUBLE_EQ(reward_fn(set, d2), std::exp(-std::abs(7.0 / 6.0 - 2.0) / 2.0));
    const auto each = per_graph_rewards(set, d2);
    ASSERT_EQ(each.size(), 2u);
    EXPECT_DOUBLE_EQ(each[0], std::exp(-(2.0 - 4.0 / 3.0) / 2.0));
    EXPECT_DOUBLE_EQ(each[1], std::exp(-0.5));
    EXPECT_THROW(reward_fn(std::span<const GraphSample>{}, d2), EmptySetError);
}

TEST(Reward, PeakAndMonotoneInDeviation) {
    for (double d : {0.0, 1.0, 2.0, 4.0, 6.0}) {
        const RewardObjective obj{d};
        double prev = reward_score(d, obj);
        EXPECT_EQ(prev, 1.0);
        for (int step = 1; step <= 200; ++step) {
            const double delta = 0.05 * step;
            const double up = reward_score(d + delta, obj);
            EXPECT_LT(up, prev);
            EXPECT_GT(up, 0.0);
            if (d - delta >= 0.0) EXPECT_DOUBLE_EQ(reward_score(d - delta, obj), up);
            // continuity: a tiny move changes the score by a tiny amount
            EXPECT_LT(std::abs(reward_score(d + delta + 1e-9, obj) - up), 1e-8);
            prev = up;
        }
    }
}

TEST(DiscriminatorLoss, IdenticalBatchesLeaveOnlyThePenalty) {
    const auto v = small_vocab(3);
    std::mt19937_64 rng(1);
    const auto batch = random_relaxed_batch(v, 4, rng);
    const std::vector<double> ones(4, 1.0);
    const Tensor w = random_tensor({3, 3}, rng);
    const Critic critic = [&](const GraphBatch& g) {
        return ad::sum(ad::mul(ad::square(g.nodes), Var(w)), {1, 2});
    };
    ad::Tape tape;
    const double loss = discriminator_loss(tape, batch, batch, critic, 10.0, ones).item();
    ad::Tape tape2;
    const double penalty = ad::mean_all(gradient_penalty(tape2, batch, critic)).item();
    EXPECT_NEAR(loss, 10.0 * penalty, 1e-12);
    EXPECT_GT(penalty, 0.0);
}

TEST(DiscriminatorLoss, QuadraticCriticByHand) {
    // D(x) = c * ||x||^2 so grad D = 2 c x and the penalty is (2|c| ||x_hat|| - 1)^2.
    const auto v = small_vocab(3);
    std::mt19937_64 rng(2);
    const auto real = random_relaxed_batch(v, 3, rng);
    const auto fake = random_relaxed_batch(v, 3, rng);
    const std::vector<double> eps{0.2, 0.7, 0.5};
    const double c = -0.3, alpha = 10.0;
    const Critic critic = [&](const GraphBatch& g) {
        return ad::scale(ad::add(ad::sum(ad::square(g.nodes), {1, 2}), ad::sum(ad::square(g.adjacency), {1, 2, 3})),
                         c);
    };
    ad::Tape tape;
    const double loss = discriminator_loss(tape, real, fake, critic, alpha, eps).item();

    const Tensor &rx = real.nodes.value(), &ra = real.adjacency.value();
    const Tensor &fx = fake.nodes.value(), &fa = fake.adjacency.value();
    const std::size_t px = 9, pa = 27;
    double expected = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        double hat = 0.0;
        for (std::size_t i = 0; i < px; ++i) {
            const double h = eps[k] * rx[k * px + i] + (1 - eps[k]) * fx[k * px + i];
            hat += h * h;
        }
        for (std::size_t i = 0; i < pa; ++i) {
            const double h = eps[k] * ra[k * pa + i] + (1 - eps[k]) * fa[k * pa + i];
            hat += h * h;
        }
        const double d_real = c * (sum_sq(rx, k, px) + sum_sq(ra, k, pa));
        const double d_fake = c * (sum_sq(fx, k, px) + sum_sq(fa, k, pa));
        const double gp = 2.0 * std::abs(c) * std::sqrt(hat) - 1.0;
        expected += -d_real + d_fake + alpha * gp * gp;
    }
    EXPECT_NEAR(loss, expected / 3.0, 1e-12);

    EXPECT_THROW(discriminator_loss(tape, real, random_relaxed_batch(v, 2, rng), critic, alpha, eps), ShapeError);
    EXPECT_THROW(discriminator_loss(tape, real, fake, critic, alpha, std::vector<double>{0.5}), ShapeError);
}

TEST(GradientPenalty, LinearUnitNormIsZeroConstantIsOne) {
    const auto v = VocabSpec::qm9_default();
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor wx = random_tensor({9, 5}, rng);
        Tensor wa = random_tensor({9, 9, 5}, rng);
        double norm = 0.0;
        for (double x : wx.data) norm += x * x;
        for (double x : wa.data) norm += x * x;
        norm = std::sqrt(norm);
        for (auto& x : wx.data) x /= norm;
        for (auto& x : wa.data) x /= norm;
        const Critic linear = [&](const GraphBatch& g) {
            return ad::add(ad::sum(ad::mul(g.nodes, Var(wx)), {1, 2}), ad::sum(ad::mul(g.adjacency, Var(wa)), {1, 2, 3}));
        };
        const auto at = random_relaxed_batch(v, 6, rng);
        ad::Tape tape;
        const Var zero = gradient_penalty(tape, at, linear);
        for (double p : zero.value().data) EXPECT_NEAR(p, 0.0, 1e-10);
        ad::Tape tape2;
        const Var one = gradient_penalty(tape2, at, constant_critic(4.2));
        for (double p : one.value().data) EXPECT_NEAR(p, 1.0, 1e-10);
    }
}

TEST(GradientPenalty, ParameterGradientMatchesFiniteDifferences) {
    const auto v = small_vocab(3);
    const nets::RgcnSpec spec{{4}, 4, 4};
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        std::mt19937_64 rng(seed);
        const auto at = random_relaxed_batch(v, 2, rng);
        const auto check = param_grad_check(nets::init_rgcn(spec, v, Role::Discriminator, seed),
                                            [&](const BoundParams& p) {
                                                ad::Tape fallback;
                                                ad::Tape& tape = tape_of(p, fallback);
                                                const Critic d = [&](const GraphBatch& g) {
                                                    return nets::discriminate(g, p, spec, v);
                                                };
                                                return ad::mean_all(gradient_penalty(tape, at, d));
                                            });
        EXPECT_LT(check.max_rel, 1e-4);
        EXPECT_LT(check.max_zero_residual, degan::testing::kZeroGradTol);
    }
}

TEST(GeneratorLoss, StubsLinearityAndEndpoints) {
    const auto v = small_vocab(3);
    std::mt19937_64 rng(4);
    const auto fake = random_relaxed_batch(v, 2, rng);
    EXPECT_DOUBLE_EQ(generator_loss(fake, constant_critic(3.0), constant_critic(0.25), 0.5).item(), -(3.0 + 0.25) / 2);

    const Critic d = table_critic({1.5, -0.7}), r = table_critic({0.2, 0.9});
    const double l1 = generator_loss(fake, d, r, 1.0).item();
    const double l0 = generator_loss(fake, d, r, 0.0).item();
    EXPECT_EQ(l1, -(1.5 - 0.7) / 2);
    EXPECT_EQ(l0, -(0.2 + 0.9) / 2);
    for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0})
        EXPECT_DOUBLE_EQ(generator_loss(fake, d, r, lambda).item(), lambda * l1 + (1 - lambda) * l0);

    int d_calls = 0, r_calls = 0;
    generator_loss(fake, constant_critic(1.0, &d_calls), constant_critic(1.0, &r_calls), 1.0);
    EXPECT_EQ(d_calls, 1);
    EXPECT_EQ(r_calls, 0);
    generator_loss(fake, constant_critic(1.0, &d_calls), constant_critic(1.0, &r_calls), 0.0);
    EXPECT_EQ(d_calls, 1);
    EXPECT_EQ(r_calls, 1);
    EXPECT_THROW(generator_loss(fake, d, r, 1.5), std::invalid_argument);
}

TEST(RewardNetLoss, StubsAndFormula) {
    const auto v = small_vocab(3);
    std::mt19937_64 rng(5);
    const auto fake = random_relaxed_batch(v, 3, rng);
    const auto real = random_relaxed_batch(v, 3, rng);
    const std::vector<double> ones(3, 1.0);
    EXPECT_DOUBLE_EQ(reward_net_loss(fake, ones, real, ones, constant_critic(0.0)).item(), 2.0);
    EXPECT_EQ(reward_net_loss(fake, ones, real, ones, constant_critic(1.0)).item(), 0.0);

    // distinct predictions for the two batches
    const Critic stub = [&](const GraphBatch& g) {
        const double tag = g.nodes.value()[0] == fake.nodes.value()[0] ? 0.1 : 0.6;
        return Var(Tensor(Shape{3}, std::vector<double>{tag, tag + 0.1, tag + 0.2}));
    };
    const std::vector<double> rf{0.3, 0.5, 0.9}, rr{0.4, 0.1, 1.0};
    double expected = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double ef = 0.1 + 0.1 * k - rf[k], er = 0.6 + 0.1 * k - rr[k];
        expected += ef * ef + er * er;
    }
    EXPECT_NEAR(reward_net_loss(fake, rf, real, rr, stub).item(), expected / 3, 1e-15);
    EXPECT_THROW(reward_net_loss(fake, ones, real, std::vector<double>{1.0}, stub), ShapeError);
}

TEST(RmsProp, HandEvaluatedSteps) {
    ParamSet p;
    p.tensors["w"] = Tensor(Shape{2}, std::vector<double>{1.0, -2.0});
    RmsPropState state;
    const RmsPropConfig config;
    rmsprop_step(p, {{"w", Tensor(Shape{2}, std::vector<double>{1.0, 0.0})}}, state, config);
    EXPECT_DOUBLE_EQ(state.mean_square.at("w")[0], 0.1);
    EXPECT_DOUBLE_EQ(p.at("w")[0], 1.0 - 1e-3 / (std::sqrt(0.1) + 1e-8));
    EXPECT_EQ(p.at("w")[1], -2.0);
    EXPECT_TRUE(state.velocity.empty());

    // zero gradient: parameters fixed, state decays by rho
    const ParamSet before = p;
    rmsprop_step(p, {{"w", Tensor(Shape{2}, 0.0)}}, state, config);
    EXPECT_EQ(p, before);
    EXPECT_DOUBLE_EQ(state.mean_square.at("w")[0], 0.09);

    RmsPropState steady;
    for (int i = 0; i < 500; ++i) rmsprop_step(p, {{"w", Tensor(Shape{2}, 3.0)}}, steady, config);
    EXPECT_NEAR(steady.mean_square.at("w")[1], 9.0, 1e-9);

    EXPECT_THROW(rmsprop_step(p, {{"v", Tensor(Shape{2})}}, state, config), std::invalid_argument);
    EXPECT_THROW(rmsprop_step(p, {{"w", Tensor(Shape{3})}}, state, config), ShapeError);
}

TEST(RmsProp, MomentumKnob) {
    ParamSet p;
    p.tensors["w"] = Tensor(Shape{1}, std::vector<double>{0.0});
    RmsPropState state;
    RmsPropConfig config;
    config.momentum = 0.5;
    rmsprop_step(p, {{"w", Tensor(Shape{1}, 1.0)}}, state, config);
    const double v1 = 1.0 / (std::sqrt(0.1) + 1e-8);
    rmsprop_step(p, {{"w", Tensor(Shape{1}, 1.0)}}, state, config);
    const double v2 = 0.5 * v1 + 1.0 / (std::sqrt(0.19) + 1e-8);
    EXPECT_NEAR(p.at("w")[0], -1e-3 * (v1 + v2), 1e-15);
}

TEST(Critic, TrainingAloneWidensTheGap) {
    const auto v = small_vocab(4);
    const nets::RgcnSpec spec{{8}, 8, 8};
    constexpr int kSeeds = 5, kSteps = 50;
    std::vector<double> gap(kSteps + 1, 0.0);
    for (int seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(100 + seed);
        std::vector<GraphSample> graphs;
        for (int k = 0; k < 8; ++k) graphs.push_back(random_graph(v, rng));
        const auto real = nets::lift(graphs);
        const auto fake = random_relaxed_batch(v, 8, rng);
        ParamSet phi = nets::init_rgcn(spec, v, Role::Discriminator, seed);
        RmsPropState state;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        auto measure = [&] {
            const BoundParams p(phi);
            return ad::mean_all(ad::sub(nets::discriminate(real, p, spec, v), nets::discriminate(fake, p, spec, v)))
                .item();
        };
        gap[0] += measure() / kSeeds;
        for (int step = 1; step <= kSteps; ++step) {
            std::vector<double> eps(8);
            for (auto& e : eps) e = u(rng);
            ad::Tape tape;
            const BoundParams p(phi, tape);
            const Critic d = [&](const GraphBatch& g) { return nets::discriminate(g, p, spec, v); };
            const auto grads = p.gradients(tape, discriminator_loss(tape, real, fake, d, 10.0, eps));
            rmsprop_step(phi, grads, state, {});
            gap[step] += measure() / kSeeds;
        }
    }
    for (int step = 1; step <= kSteps; ++step) EXPECT_GT(gap[step], gap[step - 1]) << "step " << step;
}

TEST(Schedule, LambdaAndValidation) {
    TrainSchedule s;
    EXPECT_EQ(s.lambda_at(0), 1.0);
    EXPECT_EQ(s.lambda_at(149), 1.0);
    EXPECT_EQ(s.lambda_at(150), 0.0);
    EXPECT_TRUE(s.trains_reward());
    s.lambda_main = 1.0;
    EXPECT_FALSE(s.trains_reward());
    s.pretrain_epochs = 400;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = {};
    s.gp_alpha = 0.0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = {};
    s.lambda_main = -0.1;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Train, DeterministicWithLoggedSchedule) {
    const auto model = tiny_model();
    const auto data = tiny_data(model.vocab, 20, 6);
    const auto schedule = tiny_schedule();
    std::vector<std::size_t> seen;
    const auto a = train::train(data, model, schedule, {}, 11, [&](const EpochLog& row, const ModelParams&) {
        seen.push_back(row.epoch);
    });
    const auto b = train::train(data, model, schedule, {}, 11);
    const auto c = train::train(data, model, schedule, {}, 12);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.pretrained, b.pretrained);
    EXPECT_NE(a.params, c.params);
    EXPECT_NE(a.params, a.pretrained);
    ASSERT_EQ(a.log.size(), 4u);
    EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2, 3}));
    for (std::size_t e = 0; e < 4; ++e) {
        EXPECT_EQ(a.log[e].lambda, e < 2 ? 1.0 : 0.0);
        EXPECT_EQ(a.log[e].d_loss, b.log[e].d_loss);
        EXPECT_EQ(a.log[e].g_loss, b.log[e].g_loss);
        EXPECT_EQ(a.log[e].r_loss, b.log[e].r_loss);
        EXPECT_EQ(a.log[e].val_mean_degree, b.log[e].val_mean_degree);
        EXPECT_GT(a.log[e].r_loss, 0.0);
    }
    std::ostringstream csv;
    write_log_header(csv);
    write_log_row(csv, a.log[0]);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
              "epoch,lambda,d_loss,g_loss,r_loss,val_mean_degree,val_pct_unique,wall_seconds");
}

TEST(Train, RewardNetworkUntouchedWhenLambdaMainIsOne) {
    const auto model = tiny_model();
    const auto data = tiny_data(model.vocab, 20, 7);
    auto schedule = tiny_schedule();
    schedule.lambda_main = 1.0;
    const auto result = train::train(data, model, schedule, {}, 5);
    std::mt19937_64 seeds(5);
    const auto initial = init_model(model, seeds());
    EXPECT_EQ(result.params.reward, initial.reward);
    EXPECT_NE(result.params.discriminator, initial.discriminator);
    for (const auto& row : result.log) {
        EXPECT_EQ(row.lambda, 1.0);
        EXPECT_EQ(row.r_loss, 0.0);
    }
}

TEST(Train, PretrainOnlyFromTheStart) {
    const auto model = tiny_model();
    const auto data = tiny_data(model.vocab, 10, 8);
    auto schedule = tiny_schedule();
    schedule.pretrain_epochs = 0;
    schedule.total_epochs = 1;
    const auto result = train::train(data, model, schedule, {}, 3);
    std::mt19937_64 seeds(3);
    EXPECT_EQ(result.pretrained, init_model(model, seeds()));
    EXPECT_EQ(result.log[0].lambda, 0.0);
}

TEST(Train, DivergenceAbortsWithDiagnostic) {
    const auto model = tiny_model();
    const auto data = tiny_data(model.vocab, 10, 9);
    auto schedule = tiny_schedule();
    schedule.optimizer.learning_rate = 1e308;
    try {
        train::train(data, model, schedule, {}, 1);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite values in"), std::string::npos) << e.what();
    }
    EXPECT_THROW(train::train(std::span<const GraphSample>{}, model, tiny_schedule(), {}, 1), EmptySetError);
}

TEST(Sampling, DeterministicAndValid) {
    const auto model = tiny_model();
    const auto params = init_model(model, 2);
    const auto a = sample_graphs(params.generator, model, 300, 17);
    EXPECT_EQ(a, sample_graphs(params.generator, model, 300, 17));
    EXPECT_NE(a, sample_graphs(params.generator, model, 300, 18));
    ASSERT_EQ(a.size(), 300u);
    for (const auto& g : a) EXPECT_EQ(check_invariants(g), "");
}
