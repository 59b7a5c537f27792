// SPDX-License-Identifier: Apache-2.0
#include "degan/nets.hpp"

#include <algorithm>

namespace degan::nets {

using ad::Var;

GraphBatch lift(std::span<const GraphSample> graphs) {
    if (graphs.empty()) throw std::invalid_argument("lift: empty batch");
    const auto& first = graphs.front();
    const std::size_t b = graphs.size(), n = first.num_nodes(), t = first.num_node_types(),
                      e = first.num_edge_types();
    Tensor x(Shape{b, n, t});
    Tensor a(Shape{b, n, n, e});
    for (std::size_t k = 0; k < b; ++k) {
        const auto& g = graphs[k];
        if (g.num_nodes() != n || g.num_node_types() != t || g.num_edge_types() != e)
            throw ShapeError("lift: graphs in a batch must share N, T, B");
        std::copy(g.node_features().begin(), g.node_features().end(), x.data.begin() + k * n * t);
        std::copy(g.adjacency().begin(), g.adjacency().end(), a.data.begin() + k * n * n * e);
    }
    return {Var(std::move(x)), Var(std::move(a))};
}

std::vector<RelaxedGraph> to_relaxed(const GraphBatch& batch) {
    const auto& xs = batch.nodes.shape();
    const auto& as = batch.adjacency.shape();
    const std::size_t b = xs[0], n = xs[1], t = xs[2], e = as[3];
    std::vector<RelaxedGraph> out(b);
    const auto& xv = batch.nodes.value().data;
    const auto& av = batch.adjacency.value().data;
    for (std::size_t k = 0; k < b; ++k) {
        auto& g = out[k];
        g.num_nodes = n;
        g.num_node_types = t;
        g.num_edge_types = e;
        g.node_probs.assign(xv.begin() + k * n * t, xv.begin() + (k + 1) * n * t);
        g.adjacency_probs.assign(av.begin() + k * n * n * e, av.begin() + (k + 1) * n * n * e);
    }
    return out;
}

GraphBatch as_leaves(const GraphBatch& batch, ad::Tape& tape) {
    return {tape.leaf(batch.nodes.value()), tape.leaf(batch.adjacency.value())};
}

namespace {

std::string gen_name(const std::string& layer, const char* kind) { return "gen." + layer + "." + kind; }

std::string layer_prefix(const std::string& prefix, std::size_t l) {
    return prefix + ".layer" + std::to_string(l);
}

const char* prefix_for(Role role) {
    switch (role) {
        case Role::Discriminator: return "disc";
        case Role::Reward: return "reward";
        case Role::Generator: break;
    }
    throw std::invalid_argument("init_rgcn: generator role has no R-GCN");
}

Var dense(const Var& x, const BoundParams& p, const std::string& name) {
    return ad::add(ad::matmul(x, p[name + ".weight"]), p[name + ".bias"]);
}

// i or j: one tanh hidden layer then an affine output.
Var perceptron(const Var& x, const BoundParams& p, const std::string& name) {
    return dense(ad::tanh(dense(x, p, name + ".hidden")), p, name + ".out");
}

}  // namespace

ParamSet init_generator(const GeneratorSpec& spec, const VocabSpec& vocab, std::uint64_t seed) {
    vocab.validate();
    if (spec.z_dim == 0) throw std::invalid_argument("generator: z_dim must be positive");
    std::mt19937_64 rng(seed);
    ParamSet p;
    p.role = Role::Generator;
    std::size_t in = spec.z_dim;
    for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
        const auto layer = "dense" + std::to_string(l);
        p.add_weight(gen_name(layer, "weight"), in, spec.hidden[l], rng);
        p.add_zeros(gen_name(layer, "bias"), {spec.hidden[l]});
        in = spec.hidden[l];
    }
    const std::size_t n = vocab.max_nodes, t = vocab.num_node_types(), e = vocab.num_edge_types();
    p.add_weight("gen.nodes.weight", in, n * t, rng);
    p.add_zeros("gen.nodes.bias", {n * t});
    p.add_weight("gen.edges.weight", in, n * n * e, rng);
    p.add_zeros("gen.edges.bias", {n * n * e});
    return p;
}

ParamSet init_rgcn(const RgcnSpec& spec, const VocabSpec& vocab, Role role, std::uint64_t seed) {
    vocab.validate();
    if (spec.layers.empty()) throw std::invalid_argument("rgcn: need at least one layer");
    const std::string prefix = prefix_for(role);
    const std::size_t t = vocab.num_node_types();
    const std::size_t y_count = vocab.num_edge_types() - 1;
    std::mt19937_64 rng(seed);
    ParamSet p;
    p.role = role;
    std::size_t in = t;  // H^(0) = X
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const auto lp = layer_prefix(prefix, l);
        const std::size_t out = spec.layers[l];
        for (std::size_t y = 0; y < y_count; ++y) {
            p.add_weight(lp + ".weight_y" + std::to_string(y), in + t, out, rng);
            p.add_zeros(lp + ".bias_y" + std::to_string(y), {out});
        }
        p.add_weight(lp + ".weight_self", in + t, out, rng);
        p.add_zeros(lp + ".bias_self", {out});
        in = out;
    }
    for (const char* mlp : {".gate", ".value"}) {
        const auto base = prefix + mlp;
        p.add_weight(base + ".hidden.weight", in + t, spec.attention_hidden, rng);
        p.add_zeros(base + ".hidden.bias", {spec.attention_hidden});
        p.add_weight(base + ".out.weight", spec.attention_hidden, spec.attention_out, rng);
        p.add_zeros(base + ".out.bias", {spec.attention_out});
    }
    p.add_weight(prefix + ".head.weight", spec.attention_out, 1, rng);
    p.add_zeros(prefix + ".head.bias", {1});
    return p;
}

GraphBatch generate(const Var& z, const BoundParams& theta, const GeneratorSpec& spec,
                    const VocabSpec& vocab) {
    if (z.shape().size() != 2 || z.shape()[1] != spec.z_dim)
        throw ShapeError("generate: z must be [batch, " + std::to_string(spec.z_dim) + "], got " +
                         shape_str(z.shape()));
    const std::size_t b = z.shape()[0], n = vocab.max_nodes, t = vocab.num_node_types(),
                      e = vocab.num_edge_types();
    Var h = z;
    for (std::size_t l = 0; l < spec.hidden.size(); ++l)
        h = ad::tanh(dense(h, theta, "gen.dense" + std::to_string(l)));

    const Var node_logits = dense(h, theta, "gen.nodes");
    const Var edge_logits = dense(h, theta, "gen.edges");
    if (node_logits.shape()[1] != n * t || edge_logits.shape()[1] != n * n * e)
        throw ShapeError("generate: generator output does not match the vocabulary");

    Var nodes = ad::softmax(ad::reshape(node_logits, {b, n, t}));
    Var logits = ad::reshape(edge_logits, {b, n, n, e});
    Var symmetric = ad::scale(ad::add(logits, ad::permute(logits, {0, 2, 1, 3})), 0.5);
    Var probs = ad::softmax(symmetric);

    Tensor off_diagonal(Shape{n, n, 1}, 1.0);
    Tensor diagonal(Shape{n, n, e}, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        off_diagonal[i * n + i] = 0.0;
        diagonal[(i * n + i) * e + vocab.no_edge_index] = 1.0;
    }
    Var adjacency = ad::add(ad::mul(probs, Var(std::move(off_diagonal))), Var(std::move(diagonal)));
    return {nodes, adjacency};
}

std::vector<Var> edge_slices(const Var& adjacency, const VocabSpec& vocab) {
    const auto& s = adjacency.shape();
    if (s.size() != 4 || s[3] != vocab.num_edge_types())
        throw ShapeError("edge_slices: adjacency must be [b, N, N, B], got " + shape_str(s));
    std::vector<Var> out;
    for (std::size_t e = 0; e < s[3]; ++e) {
        if (e == vocab.no_edge_index) continue;
        out.push_back(ad::reshape(ad::slice(adjacency, 3, e, 1), {s[0], s[1], s[2]}));
    }
    return out;
}

Tensor neighbor_counts(const Var& adjacency, const VocabSpec& vocab) {
    const auto& s = adjacency.shape();
    if (s.size() != 4 || s[3] != vocab.num_edge_types())
        throw ShapeError("neighbor_counts: adjacency must be [b, N, N, B], got " + shape_str(s));
    const std::size_t b = s[0], n = s[1], e = s[3];
    const auto& a = adjacency.value().data;
    Tensor counts(Shape{b, n, 1});
    for (std::size_t k = 0; k < b; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            double c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double* fiber = a.data() + ((k * n + i) * n + j) * e;
                if (std::max_element(fiber, fiber + e) - fiber != static_cast<std::ptrdiff_t>(vocab.no_edge_index))
                    c += 1.0;
            }
            counts[k * n + i] = c;
        }
    return counts;
}

Var rgcn_layer(const Var& hidden, const Var& nodes, const std::vector<Var>& slices, const Tensor& counts,
               const BoundParams& params, const std::string& lp) {
    const auto& hs = hidden.shape();
    const auto& xs = nodes.shape();
    if (hs.size() != 3 || xs.size() != 3 || hs[0] != xs[0] || hs[1] != xs[1])
        throw ShapeError("rgcn_layer: hidden " + shape_str(hs) + " and nodes " + shape_str(xs) + " disagree");
    const std::size_t width = hs[2], t = xs[2];

    Var messages;
    for (std::size_t y = 0; y < slices.size(); ++y) {
        const Var& w = params[lp + ".weight_y" + std::to_string(y)];
        if (w.shape()[0] != width + t)
            throw ShapeError("rgcn_layer: weight " + shape_str(w.shape()) + " expects input width " +
                             std::to_string(w.shape()[0] - t) + ", got " + std::to_string(width));
        const Var w_h = ad::slice(w, 0, 0, width);
        const Var w_x = ad::slice(w, 0, width, t);
        const Var& a = slices[y];
        const Var neighbor = ad::matmul(a, ad::matmul(hidden, w_h));
        const Var degree = ad::sum(a, {2}, true);
        const Var target = ad::add(ad::matmul(nodes, w_x), params[lp + ".bias_y" + std::to_string(y)]);
        const Var term = ad::add(neighbor, ad::mul(degree, target));
        messages = messages.defined() ? ad::add(messages, term) : term;
    }
    const Var self = ad::add(ad::matmul(ad::concat({hidden, nodes}, 2), params[lp + ".weight_self"]),
                             params[lp + ".bias_self"]);
    if (!messages.defined()) return ad::tanh(self);
    Tensor inverse = counts;
    for (auto& c : inverse.data) c = c > 0.0 ? 1.0 / c : 0.0;
    return ad::tanh(ad::add(ad::mul(messages, Var(std::move(inverse))), self));
}

Var attention_glimpse(const Var& hidden, const Var& nodes, const BoundParams& params, const std::string& prefix) {
    const Var in = ad::concat({hidden, nodes}, 2);
    const Var gate = ad::sigmoid(perceptron(in, params, prefix + ".gate"));
    const Var value = ad::tanh(perceptron(in, params, prefix + ".value"));
    return ad::tanh(ad::sum(ad::mul(gate, value), {1}));
}

Var attention_readout(const Var& hidden, const Var& nodes, const BoundParams& params, const std::string& prefix) {
    const Var glimpse = attention_glimpse(hidden, nodes, params, prefix);
    const std::size_t b = glimpse.shape()[0];
    return ad::reshape(dense(glimpse, params, prefix + ".head"), {b});
}

Var rgcn_forward(const GraphBatch& batch, const BoundParams& params, const RgcnSpec& spec,
                 const VocabSpec& vocab, const std::string& prefix) {
    const auto& xs = batch.nodes.shape();
    if (xs.size() != 3 || xs[1] != vocab.max_nodes || xs[2] != vocab.num_node_types())
        throw ShapeError("rgcn: node tensor " + shape_str(xs) + " does not match the vocabulary");
    const auto slices = edge_slices(batch.adjacency, vocab);
    const Tensor counts = neighbor_counts(batch.adjacency, vocab);
    Var h = batch.nodes;
    for (std::size_t l = 0; l < spec.layers.size(); ++l)
        h = rgcn_layer(h, batch.nodes, slices, counts, params, layer_prefix(prefix, l));
    return attention_readout(h, batch.nodes, params, prefix);
}

Var discriminate(const GraphBatch& batch, const BoundParams& phi, const RgcnSpec& spec, const VocabSpec& vocab) {
    return rgcn_forward(batch, phi, spec, vocab, "disc");
}

Var reward_predict(const GraphBatch& batch, const BoundParams& psi, const RgcnSpec& spec, const VocabSpec& vocab) {
    return ad::sigmoid(rgcn_forward(batch, psi, spec, vocab, "reward"));
}

}  // namespace degan::nets
