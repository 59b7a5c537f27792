// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "degan/vocab.hpp"

namespace degan {

/// Raised by set-level metrics handed an empty list.
class EmptySetError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Discrete graph: one-hot node matrix X (N x T) and one-hot adjacency
/// tensor A (N x N x B), both stored row-major as bytes.
class GraphSample {
public:
    GraphSample() = default;

    /// All nodes empty, all fibers no-edge.
    GraphSample(std::size_t num_nodes, std::size_t num_node_types, std::size_t num_edge_types,
                std::size_t empty_index, std::size_t no_edge_index);

    static GraphSample empty_like(const VocabSpec& vocab);

    /// Builds from raw one-hot buffers without validating them.
    static GraphSample from_raw(std::size_t num_nodes, std::size_t num_node_types,
                                std::size_t num_edge_types, std::size_t empty_index,
                                std::size_t no_edge_index, std::vector<std::uint8_t> node_features,
                                std::vector<std::uint8_t> adjacency);

    std::size_t num_nodes() const { return n_; }
    std::size_t num_node_types() const { return t_; }
    std::size_t num_edge_types() const { return b_; }
    std::size_t empty_index() const { return empty_; }
    std::size_t no_edge_index() const { return no_edge_; }

    const std::vector<std::uint8_t>& node_features() const { return x_; }
    const std::vector<std::uint8_t>& adjacency() const { return a_; }

    std::uint8_t x(std::size_t i, std::size_t t) const { return x_[i * t_ + t]; }
    std::uint8_t a(std::size_t i, std::size_t j, std::size_t b) const {
        return a_[(i * n_ + j) * b_ + b];
    }

    /// Index of the hot entry in row i (the first one if the row is malformed).
    std::size_t node_type(std::size_t i) const;
    std::size_t edge_type(std::size_t i, std::size_t j) const;

    bool is_empty_node(std::size_t i) const { return node_type(i) == empty_; }

    void set_node_type(std::size_t i, std::size_t type);
    /// Sets both (i, j) and (j, i).
    void set_edge_type(std::size_t i, std::size_t j, std::size_t type);

    /// Relabels nodes: node i of the result is node perm[i] of this graph.
    GraphSample permuted(std::span<const std::size_t> perm) const;

    bool operator==(const GraphSample&) const = default;

private:
    std::size_t n_ = 0, t_ = 0, b_ = 0;
    std::size_t empty_ = 0, no_edge_ = 0;
    std::vector<std::uint8_t> x_;
    std::vector<std::uint8_t> a_;
};

/// Continuous counterpart of GraphSample: rows and fibers on the simplex.
struct RelaxedGraph {
    std::size_t num_nodes = 0;
    std::size_t num_node_types = 0;
    std::size_t num_edge_types = 0;
    std::vector<double> node_probs;       // N x T
    std::vector<double> adjacency_probs;  // N x N x B

    double node(std::size_t i, std::size_t t) const { return node_probs[i * num_node_types + t]; }
    double edge(std::size_t i, std::size_t j, std::size_t b) const {
        return adjacency_probs[(i * num_nodes + j) * num_edge_types + b];
    }
};

/// Returns an empty string when every GraphSample invariant holds, otherwise
/// a description of the first violation.
std::string check_invariants(const GraphSample& g);
std::string check_invariants(const RelaxedGraph& g, double tol = 1e-6);

/// 2 * (#edges) / (#non-empty nodes); 0.0 when every node is empty. Edge
/// order does not weight the count.
double average_node_degree(const GraphSample& g);

/// Mean of the per-graph averages.
double mean_degree_over_set(std::span<const GraphSample> gs);

/// 100 * (#distinct isomorphism classes) / (#graphs).
double percent_unique(std::span<const GraphSample> gs);

/// Row/fiber argmax with ties to the lowest index. Only the upper triangle
/// is read; the diagonal and fibers touching empty nodes become no-edge.
GraphSample discretize(const RelaxedGraph& rg, std::size_t empty_index, std::size_t no_edge_index);

}  // namespace degan
