// SPDX-License-Identifier: Apache-2.0
#include "degan/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "degan/canonical.hpp"

namespace degan {

VocabSpec VocabSpec::qm9_default() {
    VocabSpec v;
    v.node_types = {"C", "N", "O", "F", "empty"};
    v.edge_types = {"no-edge", "single", "double", "triple", "aromatic"};
    v.empty_index = 4;
    v.no_edge_index = 0;
    v.max_nodes = 9;
    return v;
}

std::optional<std::size_t> VocabSpec::node_index(const std::string& symbol) const {
    for (std::size_t i = 0; i < node_types.size(); ++i) {
        if (i != empty_index && node_types[i] == symbol) return i;
    }
    return std::nullopt;
}

void VocabSpec::validate() const {
    if (node_types.size() < 2) throw std::invalid_argument("vocab: need at least 2 node types");
    if (edge_types.size() < 2) throw std::invalid_argument("vocab: need at least 2 edge types");
    if (max_nodes < 1) throw std::invalid_argument("vocab: max_nodes must be >= 1");
    if (node_types.size() > 255 || edge_types.size() > 255 || max_nodes > 255)
        throw std::invalid_argument("vocab: sizes must fit in one byte");
    if (empty_index >= node_types.size())
        throw std::invalid_argument("vocab: empty_index out of range");
    if (no_edge_index >= edge_types.size())
        throw std::invalid_argument("vocab: no_edge_index out of range");
    auto unique = [](const std::vector<std::string>& v) {
        std::unordered_set<std::string> seen(v.begin(), v.end());
        return seen.size() == v.size();
    };
    if (!unique(node_types)) throw std::invalid_argument("vocab: duplicate node type symbol");
    if (!unique(edge_types)) throw std::invalid_argument("vocab: duplicate edge type symbol");
}

GraphSample::GraphSample(std::size_t num_nodes, std::size_t num_node_types,
                         std::size_t num_edge_types, std::size_t empty_index,
                         std::size_t no_edge_index)
    : n_(num_nodes),
      t_(num_node_types),
      b_(num_edge_types),
      empty_(empty_index),
      no_edge_(no_edge_index),
      x_(num_nodes * num_node_types, 0),
      a_(num_nodes * num_nodes * num_edge_types, 0) {
    for (std::size_t i = 0; i < n_; ++i) {
        x_[i * t_ + empty_] = 1;
        for (std::size_t j = 0; j < n_; ++j) a_[(i * n_ + j) * b_ + no_edge_] = 1;
    }
}

GraphSample GraphSample::empty_like(const VocabSpec& vocab) {
    return GraphSample(vocab.max_nodes, vocab.num_node_types(), vocab.num_edge_types(),
                       vocab.empty_index, vocab.no_edge_index);
}

GraphSample GraphSample::from_raw(std::size_t num_nodes, std::size_t num_node_types,
                                  std::size_t num_edge_types, std::size_t empty_index,
                                  std::size_t no_edge_index,
                                  std::vector<std::uint8_t> node_features,
                                  std::vector<std::uint8_t> adjacency) {
    if (node_features.size() != num_nodes * num_node_types ||
        adjacency.size() != num_nodes * num_nodes * num_edge_types)
        throw std::invalid_argument("GraphSample::from_raw: buffer size mismatch");
    GraphSample g;
    g.n_ = num_nodes;
    g.t_ = num_node_types;
    g.b_ = num_edge_types;
    g.empty_ = empty_index;
    g.no_edge_ = no_edge_index;
    g.x_ = std::move(node_features);
    g.a_ = std::move(adjacency);
    return g;
}

std::size_t GraphSample::node_type(std::size_t i) const {
    const auto* row = &x_[i * t_];
    for (std::size_t t = 0; t < t_; ++t)
        if (row[t]) return t;
    return 0;
}

std::size_t GraphSample::edge_type(std::size_t i, std::size_t j) const {
    const auto* fiber = &a_[(i * n_ + j) * b_];
    for (std::size_t b = 0; b < b_; ++b)
        if (fiber[b]) return b;
    return 0;
}

void GraphSample::set_node_type(std::size_t i, std::size_t type) {
    auto* row = &x_[i * t_];
    std::fill(row, row + t_, std::uint8_t{0});
    row[type] = 1;
}

void GraphSample::set_edge_type(std::size_t i, std::size_t j, std::size_t type) {
    for (auto [p, q] : {std::pair{i, j}, std::pair{j, i}}) {
        auto* fiber = &a_[(p * n_ + q) * b_];
        std::fill(fiber, fiber + b_, std::uint8_t{0});
        fiber[type] = 1;
    }
}

GraphSample GraphSample::permuted(std::span<const std::size_t> perm) const {
    if (perm.size() != n_) throw std::invalid_argument("permuted: permutation size mismatch");
    GraphSample out = *this;
    for (std::size_t i = 0; i < n_; ++i) {
        std::copy_n(&x_[perm[i] * t_], t_, &out.x_[i * t_]);
        for (std::size_t j = 0; j < n_; ++j)
            std::copy_n(&a_[(perm[i] * n_ + perm[j]) * b_], b_, &out.a_[(i * n_ + j) * b_]);
    }
    return out;
}

std::string check_invariants(const GraphSample& g) {
    const std::size_t n = g.num_nodes(), t = g.num_node_types(), b = g.num_edge_types();
    std::ostringstream err;
    if (g.node_features().size() != n * t || g.adjacency().size() != n * n * b)
        return "buffer sizes do not match N, T, B";
    if (g.empty_index() >= t || g.no_edge_index() >= b) return "pad indices out of range";
    for (std::size_t i = 0; i < n; ++i) {
        int sum = 0;
        for (std::size_t k = 0; k < t; ++k) {
            if (g.x(i, k) > 1) {
                err << "node row " << i << " has non-binary entry";
                return err.str();
            }
            sum += g.x(i, k);
        }
        if (sum != 1) {
            err << "node row " << i << " sums to " << sum;
            return err.str();
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            int sum = 0;
            for (std::size_t k = 0; k < b; ++k) {
                if (g.a(i, j, k) > 1) {
                    err << "fiber (" << i << "," << j << ") has non-binary entry";
                    return err.str();
                }
                sum += g.a(i, j, k);
                if (g.a(i, j, k) != g.a(j, i, k)) {
                    err << "fiber (" << i << "," << j << ") is not symmetric";
                    return err.str();
                }
            }
            if (sum != 1) {
                err << "fiber (" << i << "," << j << ") sums to " << sum;
                return err.str();
            }
        }
        if (g.edge_type(i, i) != g.no_edge_index()) {
            err << "self-loop on node " << i;
            return err.str();
        }
        if (g.is_empty_node(i)) {
            for (std::size_t j = 0; j < n; ++j) {
                if (g.edge_type(i, j) != g.no_edge_index()) {
                    err << "empty node " << i << " has an edge to " << j;
                    return err.str();
                }
            }
        }
    }
    return {};
}

std::string check_invariants(const RelaxedGraph& g, double tol) {
    const std::size_t n = g.num_nodes, t = g.num_node_types, b = g.num_edge_types;
    std::ostringstream err;
    if (g.node_probs.size() != n * t || g.adjacency_probs.size() != n * n * b)
        return "buffer sizes do not match N, T, B";
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < t; ++k) {
            const double v = g.node(i, k);
            if (!(v >= 0.0 && v <= 1.0)) {
                err << "node entry (" << i << "," << k << ") = " << v << " outside [0,1]";
                return err.str();
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) {
            err << "node row " << i << " sums to " << sum;
            return err.str();
        }
        for (std::size_t j = 0; j < n; ++j) {
            double fsum = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                const double v = g.edge(i, j, k);
                if (!(v >= 0.0 && v <= 1.0)) {
                    err << "edge entry (" << i << "," << j << "," << k << ") = " << v
                        << " outside [0,1]";
                    return err.str();
                }
                if (v != g.edge(j, i, k)) {
                    err << "fiber (" << i << "," << j << ") is not symmetric";
                    return err.str();
                }
                fsum += v;
            }
            if (std::abs(fsum - 1.0) > tol) {
                err << "fiber (" << i << "," << j << ") sums to " << fsum;
                return err.str();
            }
        }
    }
    return {};
}

double average_node_degree(const GraphSample& g) {
    const std::size_t n = g.num_nodes();
    std::size_t nodes = 0, incidences = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (g.is_empty_node(i)) continue;
        ++nodes;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && g.edge_type(i, j) != g.no_edge_index()) ++incidences;
        }
    }
    if (nodes == 0) return 0.0;
    return static_cast<double>(incidences) / static_cast<double>(nodes);
}

double mean_degree_over_set(std::span<const GraphSample> gs) {
    if (gs.empty()) throw EmptySetError("mean_degree_over_set: empty set");
    double total = 0.0;
    for (const auto& g : gs) total += average_node_degree(g);
    return total / static_cast<double>(gs.size());
}

double percent_unique(std::span<const GraphSample> gs) {
    if (gs.empty()) throw EmptySetError("percent_unique: empty set");
    std::unordered_set<CanonicalForm, CanonicalFormHash> classes;
    classes.reserve(gs.size());
    for (const auto& g : gs) classes.insert(canonicalize(g));
    return 100.0 * static_cast<double>(classes.size()) / static_cast<double>(gs.size());
}

namespace {

std::size_t argmax(const double* v, std::size_t len) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < len; ++k)
        if (v[k] > v[best]) best = k;
    return best;
}

}  // namespace

GraphSample discretize(const RelaxedGraph& rg, std::size_t empty_index, std::size_t no_edge_index) {
    const std::size_t n = rg.num_nodes, t = rg.num_node_types, b = rg.num_edge_types;
    GraphSample g(n, t, b, empty_index, no_edge_index);
    for (std::size_t i = 0; i < n; ++i)
        g.set_node_type(i, argmax(&rg.node_probs[i * t], t));
    for (std::size_t i = 0; i < n; ++i) {
        if (g.is_empty_node(i)) continue;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (g.is_empty_node(j)) continue;
            g.set_edge_type(i, j, argmax(&rg.adjacency_probs[(i * n + j) * b], b));
        }
    }
    return g;
}

}  // namespace degan
