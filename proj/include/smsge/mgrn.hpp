#pragma once

#include <vector>

#include "smsge/config.hpp"
#include "smsge/matrix.hpp"
#include "smsge/scale_graph.hpp"

namespace smsge {

// Relation-learning weights for one graph scale: per head p, a node feature
// map W_v (D_t x 3) and a relation vector W_r (2*D_t x 1). The same W_v
// serves Eq-style relation scoring and neighbor aggregation within a head.
struct MgrnScaleParams {
    std::vector<Matrix> node_map;
    std::vector<Matrix> relation;  // empty when structural relations are off
};

// Weights for all active scales plus one fusion map W_C (D_t x D_t) per
// ordered scale pair; `fusion` is empty when collaboration fusion is off.
struct MgrnParams {
    std::vector<MgrnScaleParams> scales;  // aligned with ModelConfig::active_scales()
    std::vector<Matrix> fusion;           // aligned with ModelConfig::scale_pairs()
};

// Forward activations for one frame, kept for the backward pass.
struct MgrnCache {
    std::vector<std::vector<Matrix>> mapped;                   // [scale][head]: n x D_t
    std::vector<std::vector<std::vector<double>>> logit_pre;   // pre-LeakyReLU scores
    std::vector<std::vector<std::vector<double>>> attn;        // normalized weights
    std::vector<std::vector<Matrix>> agg_pre;                  // pre-ReLU aggregation
    std::vector<Matrix> prefuse;                               // node embeddings v-hat
    std::vector<Matrix> collab;                                // [pair]: n_a x n_b
    std::vector<Matrix> fused;                                 // [scale]: n x D_t
};

// Temperature softmax with max-subtraction. Throws when T <= 0 or the
// index set is empty.
std::vector<double> t_softmax(const std::vector<double>& logits, double temperature);

// Structural relation scores e_{i,j} = LeakyReLU(W_r^T [W_v v_i || W_v v_j])
// for j in N_i, aligned with graph.neighbors. slope 0.2.
std::vector<std::vector<double>> structural_logits(const ScaleGraph& graph,
                                                   const MgrnScaleParams& params, int head);

// Head-averaged neighbor aggregation: (1/P) sum_p ReLU(A^p W_v^p V).
// With use_attention = false the relation weights are uniform over N_i.
Matrix aggregate_heads(const ScaleGraph& graph, const MgrnScaleParams& params, double t1,
                       bool use_attention);

// Row-normalized inner-product affinities between two embedding sets.
Matrix collab_matrix(const Matrix& emb_a, const Matrix& emb_b, double t2);

// Residual cross-scale fusion; all right-hand embeddings are pre-update
// values (synchronous update). embeddings/pairs/fusion are aligned with the
// config orderings.
std::vector<Matrix> fuse(const std::vector<Matrix>& embeddings,
                         const std::vector<Matrix>& collab,
                         const std::vector<Matrix>& fusion,
                         const std::vector<std::pair<int, int>>& pairs,
                         const std::vector<int>& scales, double lambda_c);

// Full per-frame pass: structural attention + aggregation per scale, then
// collaborative matrices and fusion. Returns per-scale embeddings in
// cache.fused and keeps intermediates for mgrn_backward.
void mgrn_forward(const MultiScaleFrame& frame, const MgrnParams& params,
                  const ModelConfig& cfg, MgrnCache& cache);

// Accumulates parameter gradients for one frame given d(fused embeddings).
void mgrn_backward(const MultiScaleFrame& frame, const MgrnParams& params,
                   const ModelConfig& cfg, const MgrnCache& cache,
                   const std::vector<Matrix>& d_fused, MgrnParams& grads);

// Dense n x n attention matrix (zeros off the neighbor structure) for one
// scale/head; inspection and test surface.
Matrix dense_attention(const ScaleGraph& graph, const MgrnScaleParams& params, int head,
                       double t1, bool use_attention);

}  // namespace smsge
