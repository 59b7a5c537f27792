// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "degan/autodiff.hpp"
#include "degan/graph.hpp"
#include "degan/params.hpp"
#include "degan/vocab.hpp"

namespace degan::nets {

/// A batch of graphs as real tensors: nodes [b, N, T], adjacency [b, N, N, B].
struct GraphBatch {
    ad::Var nodes;
    ad::Var adjacency;

    std::size_t size() const { return nodes.shape().at(0); }
};

/// One-hot graphs lifted to constant real tensors.
GraphBatch lift(std::span<const GraphSample> graphs);
/// Splits a batch back into per-graph simplex tensors.
std::vector<RelaxedGraph> to_relaxed(const GraphBatch& batch);
/// Copies of the batch tensors registered as fresh leaves on `tape`.
GraphBatch as_leaves(const GraphBatch& batch, ad::Tape& tape);

struct GeneratorSpec {
    std::size_t z_dim = 32;
    std::vector<std::size_t> hidden{128, 256, 512};

    bool operator==(const GeneratorSpec&) const = default;
};

struct RgcnSpec {
    std::vector<std::size_t> layers{64, 32};
    std::size_t attention_hidden = 128;
    std::size_t attention_out = 128;

    bool operator==(const RgcnSpec&) const = default;
};

ParamSet init_generator(const GeneratorSpec& spec, const VocabSpec& vocab, std::uint64_t seed);
/// Discriminator (prefix "disc") or reward network (prefix "reward").
ParamSet init_rgcn(const RgcnSpec& spec, const VocabSpec& vocab, Role role, std::uint64_t seed);

/// MLP with tanh hidden layers; node logits are softmaxed per row, adjacency
/// logits are symmetrized as (L + L^T) / 2 and softmaxed per fiber, and
/// diagonal fibers are pinned to the no-edge one-hot.
GraphBatch generate(const ad::Var& z, const BoundParams& theta, const GeneratorSpec& spec,
                    const VocabSpec& vocab);

/// Edge-type adjacency slices [b, N, N], one per real (non no-edge) type.
std::vector<ad::Var> edge_slices(const ad::Var& adjacency, const VocabSpec& vocab);

/// |N_i| per node, shape [b, N, 1]: the number of j whose adjacency fiber
/// (i, j) has its largest entry on a real edge type (ties to the lowest
/// index). A constant; exact for one-hot input.
Tensor neighbor_counts(const ad::Var& adjacency, const VocabSpec& vocab);

/// One relational convolution:
///   tanh( sum_j sum_y A_ijy / |N_i| * f_y(H_j, x_i) + f_s(H_i, x_i) )
/// with f(h, x) = [h, x] W + b. Nodes with |N_i| = 0 keep only the self term.
ad::Var rgcn_layer(const ad::Var& hidden, const ad::Var& nodes, const std::vector<ad::Var>& slices,
                   const Tensor& counts, const BoundParams& params, const std::string& layer_prefix);

/// tanh( sum_v sigmoid(i([H_v, x_v])) * tanh(j([H_v, x_v])) ), shape [b, attention_out].
ad::Var attention_glimpse(const ad::Var& hidden, const ad::Var& nodes, const BoundParams& params,
                          const std::string& prefix);

/// Glimpse followed by the affine map to one scalar per graph, shape [b].
ad::Var attention_readout(const ad::Var& hidden, const ad::Var& nodes, const BoundParams& params,
                          const std::string& prefix);

/// Convolution stack plus readout; `prefix` selects the parameter family.
ad::Var rgcn_forward(const GraphBatch& batch, const BoundParams& params, const RgcnSpec& spec,
                     const VocabSpec& vocab, const std::string& prefix);

/// D_phi: unbounded score per graph, shape [b].
ad::Var discriminate(const GraphBatch& batch, const BoundParams& phi, const RgcnSpec& spec,
                     const VocabSpec& vocab);
/// R_psi: sigmoid score per graph in (0, 1), shape [b].
ad::Var reward_predict(const GraphBatch& batch, const BoundParams& psi, const RgcnSpec& spec,
                       const VocabSpec& vocab);

}  // namespace degan::nets
