#pragma once

#include "smsge/lstm.hpp"
#include "smsge/mgrn.hpp"
#include "smsge/model.hpp"

// Straight-line scalar implementations of the formulas, independent of the
// batched/OpenMP kernels. Kept as the reference for equivalence tests and
// the serial side of the benchmark.
namespace smsge::ref {

// Structural relation attention for one head, dense n x n.
Matrix attention_dense(const ScaleGraph& graph, const Matrix& wv, const Matrix& wr, double t1);

// Head-averaged node embeddings for one scale.
Matrix node_embeddings(const ScaleGraph& graph, const MgrnScaleParams& params, double t1,
                       bool learned_attention);

// Collaborative relation matrix via the explicit Gram matrix.
Matrix collab(const Matrix& emb_a, const Matrix& emb_b, double t2);

// Fused per-scale embeddings of one frame (synchronous residual update).
std::vector<Matrix> frame_embeddings(const MultiScaleFrame& frame, const MgrnParams& params,
                                     const ModelConfig& cfg);

// Single-lane two-layer LSTM over flattened per-frame features; returns the
// k x D_h encoded states of the top layer.
Matrix encode_states(const LstmParams& p, const std::vector<const Matrix*>& fused);

// Elementwise L1 distance.
double l1(const Matrix& a, const Matrix& b);

}  // namespace smsge::ref
