// Shared helpers for the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "degan/autodiff.hpp"
#include "degan/graph.hpp"
#include "degan/nets.hpp"
#include "degan/params.hpp"
#include "degan/vocab.hpp"

namespace degan::testing {

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    Tensor t(shape);
    for (auto& v : t.data) v = d(rng);
    return t;
}

/// Random valid GraphSample: each node empty with probability p_empty, and
/// each pair of non-empty nodes bonded with probability p_edge.
inline GraphSample random_graph(const VocabSpec& v, std::mt19937_64& rng, double p_empty = 0.3,
                                double p_edge = 0.4) {
    GraphSample g = GraphSample::empty_like(v);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::size_t> real_types, real_edges;
    for (std::size_t t = 0; t < v.num_node_types(); ++t)
        if (t != v.empty_index) real_types.push_back(t);
    for (std::size_t e = 0; e < v.num_edge_types(); ++e)
        if (e != v.no_edge_index) real_edges.push_back(e);
    for (std::size_t i = 0; i < v.max_nodes; ++i)
        if (u(rng) >= p_empty) g.set_node_type(i, real_types[rng() % real_types.size()]);
    for (std::size_t i = 0; i < v.max_nodes; ++i)
        for (std::size_t j = i + 1; j < v.max_nodes; ++j)
            if (!g.is_empty_node(i) && !g.is_empty_node(j) && u(rng) < p_edge)
                g.set_edge_type(i, j, real_edges[rng() % real_edges.size()]);
    return g;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

/// Applies a node permutation to a batch tensor along axis 1 (nodes) and,
/// for adjacency, also along axis 2.
inline Tensor permute_nodes(const Tensor& t, std::span<const std::size_t> perm, bool adjacency) {
    Tensor out(t.shape);
    const std::size_t b = t.shape[0], n = t.shape[1];
    if (!adjacency) {
        const std::size_t c = t.shape[2];
        for (std::size_t k = 0; k < b; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t q = 0; q < c; ++q)
                    out[(k * n + i) * c + q] = t[(k * n + perm[i]) * c + q];
    } else {
        const std::size_t c = t.shape[3];
        for (std::size_t k = 0; k < b; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t q = 0; q < c; ++q)
                        out[((k * n + i) * n + j) * c + q] = t[((k * n + perm[i]) * n + perm[j]) * c + q];
    }
    return out;
}

/// Down-sized vocabulary: 2 atoms + empty, 2 bonds + no-edge, N nodes.
inline VocabSpec small_vocab(std::size_t n = 3) {
    VocabSpec v;
    v.node_types = {"C", "O", "empty"};
    v.edge_types = {"no-edge", "single", "double"};
    v.empty_index = 2;
    v.no_edge_index = 0;
    v.max_nodes = n;
    return v;
}

/// Random relaxed batch on the simplex (softmax of Gaussian logits).
inline nets::GraphBatch random_relaxed_batch(const VocabSpec& v, std::size_t b, std::mt19937_64& rng) {
    const std::size_t n = v.max_nodes, t = v.num_node_types(), e = v.num_edge_types();
    Tensor x = random_tensor({b, n, t}, rng, -2.0, 2.0);
    Tensor a = random_tensor({b, n, n, e}, rng, -2.0, 2.0);
    // symmetric logits
    for (std::size_t k = 0; k < b; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j)
                for (std::size_t q = 0; q < e; ++q)
                    a[((k * n + i) * n + j) * e + q] = a[((k * n + j) * n + i) * e + q];
    ad::NoGradGuard guard;
    return {ad::softmax(ad::Var(x)), ad::softmax(ad::Var(a))};
}

struct GradCheck {
    double max_rel = 0.0;  // worst per-tensor ||analytic - numeric|| / max(||analytic||, ||numeric||)
    /// Tensors whose analytic gradient is exactly zero have no relative
    /// error; for them the largest ||numeric|| is kept instead.
    double max_zero_residual = 0.0;
    std::size_t entries = 0;

    void add(double diff2, double analytic2, double numeric2) {
        if (analytic2 == 0.0) max_zero_residual = std::max(max_zero_residual, std::sqrt(numeric2));
        else max_rel = std::max(max_rel, std::sqrt(diff2) / std::sqrt(std::max(analytic2, numeric2)));
    }
};

/// Bound on ||numeric|| where the analytic gradient is exactly zero; central
/// differences with h = 1e-6 leave round-off near 1e-10.
inline constexpr double kZeroGradTol = 1e-8;

/// Central finite differences of a scalar function of several tensors
/// against the tape gradient. `f` must build its result from the given Vars;
/// for the numeric passes they are constants.
inline GradCheck grad_check(const std::function<ad::Var(const std::vector<ad::Var>&)>& f,
                            std::vector<Tensor> inputs, double h = 1e-6) {
    std::vector<Tensor> analytic;
    {
        ad::Tape tape;
        std::vector<ad::Var> leaves;
        for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
        const ad::Var out = f(leaves);
        const auto grads = tape.gradient(out, leaves);
        for (const auto& g : grads) analytic.push_back(g.value());
    }
    auto eval = [&](const std::vector<Tensor>& xs) {
        std::vector<ad::Var> vs(xs.begin(), xs.end());
        return f(vs).item();
    };
    GradCheck result;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double orig = inputs[k][i];
            inputs[k][i] = orig + h;
            const double up = eval(inputs);
            inputs[k][i] = orig - h;
            const double down = eval(inputs);
            inputs[k][i] = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[k][i];
            diff += (a - numeric) * (a - numeric);
            na += a * a;
            nn += numeric * numeric;
            ++result.entries;
        }
        result.add(diff, na, nn);
    }
    return result;
}

/// Finite differences over every entry of a ParamSet against
/// BoundParams::gradients. `f` maps bound parameters to a scalar.
inline GradCheck param_grad_check(ParamSet params, const std::function<ad::Var(const BoundParams&)>& f,
                                  double h = 1e-6) {
    GradMap analytic;
    {
        ad::Tape tape;
        const BoundParams bound(params, tape);
        analytic = bound.gradients(tape, f(bound));
    }
    auto eval = [&] { return f(BoundParams(params)).item(); };
    GradCheck result;
    for (auto& [name, t] : params.tensors) {
        double diff = 0.0, na = 0.0, nn = 0.0;
        const Tensor& a = analytic.at(name);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double orig = t[i];
            t[i] = orig + h;
            const double up = eval();
            t[i] = orig - h;
            const double down = eval();
            t[i] = orig;
            const double numeric = (up - down) / (2.0 * h);
            diff += (a[i] - numeric) * (a[i] - numeric);
            na += a[i] * a[i];
            nn += numeric * numeric;
            ++result.entries;
        }
        result.add(diff, na, nn);
    }
    return result;
}

}  // namespace degan::testing
