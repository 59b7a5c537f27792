// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "degan/graph.hpp"

namespace degan {

/// Byte string identifying the labeled-graph isomorphism class of a
/// GraphSample. Equal forms <=> a node permutation maps one graph onto the
/// other preserving node and edge types.
struct CanonicalForm {
    std::vector<std::uint8_t> bytes;

    bool operator==(const CanonicalForm&) const = default;
    auto operator<=>(const CanonicalForm&) const = default;
};

/// Partition refinement seeded by node type, then individualization over
/// the first smallest non-singleton cell; the lexicographically smallest
/// leaf encoding wins. Interchangeable twins in a cell are branched on once.
CanonicalForm canonicalize(const GraphSample& g);

struct CanonicalFormHash {
    std::size_t operator()(const CanonicalForm& f) const noexcept;
};

}  // namespace degan
