// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace degan {

/// Node and edge alphabets plus the fixed node count N.
///
/// Exactly one node type is the pad ("empty") type and exactly one edge
/// type is the "no-edge" type; their positions are stored explicitly.
struct VocabSpec {
    std::vector<std::string> node_types;
    std::vector<std::string> edge_types;
    std::size_t empty_index = 0;
    std::size_t no_edge_index = 0;
    std::size_t max_nodes = 9;

    /// C, N, O, F, empty / no-edge, single, double, triple, aromatic, N = 9.
    static VocabSpec qm9_default();

    std::size_t num_node_types() const { return node_types.size(); }
    std::size_t num_edge_types() const { return edge_types.size(); }

    std::optional<std::size_t> node_index(const std::string& symbol) const;

    /// Throws std::invalid_argument describing the first violated rule.
    void validate() const;

    bool operator==(const VocabSpec&) const = default;
};

}  // namespace degan
