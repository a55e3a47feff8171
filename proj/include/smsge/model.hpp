#pragma once

#include <functional>
#include <vector>

#include "smsge/config.hpp"
#include "smsge/lstm.hpp"
#include "smsge/mgrn.hpp"
#include "smsge/recon_heads.hpp"
#include "smsge/rng.hpp"
#include "smsge/scale_graph.hpp"

namespace smsge {

// All trainable tensors: relation attention, fusion maps, per-scale
// encoders, per-pair reconstruction heads.
struct ModelParams {
    MgrnParams mgrn;
    std::vector<LstmParams> lstm;   // aligned with ModelConfig::active_scales()
    std::vector<HeadParams> heads;  // aligned with ModelConfig::head_pairs()

    // Identification of the aligned entries; fixed by make_params.
    std::vector<int> scale_ids;
    std::vector<std::pair<int, int>> fusion_pair_ids;
    std::vector<std::pair<int, int>> head_pair_ids;
};

// node_counts indexed by scale id 0..3 (scale_node_counts order).
ModelParams make_params(const ModelConfig& cfg, const std::vector<int>& node_counts);

// Glorot-uniform weights, zero biases; draw order is fixed.
void init_params(ModelParams& p, const ModelConfig& cfg, Rng& rng);

void zero_tensors(ModelParams& p);

// Canonical tensor enumeration: serialization, Adam, clipping and the
// gradient checker all iterate in this order.
void for_each_tensor(ModelParams& p,
                     const std::function<void(const std::string&, Matrix&)>& fn);
void for_each_tensor(const ModelParams& p,
                     const std::function<void(const std::string&, const Matrix&)>& fn);

// r rounds of strict subsequences of 0..f-1; each round covers every length
// k = 1..f-1 once, frames chosen uniformly without replacement, order
// preserved. Throws when f < 2 or r < 1.
std::vector<std::vector<int>> sample_subsequences(int f, int r, Rng& rng);

// A pretraining batch: sequences (each exactly cfg.frames multi-scale
// frames) with their sampled subsequences.
struct MsrBatch {
    std::vector<const std::vector<MultiScaleFrame>*> sequences;
    std::vector<std::vector<std::vector<int>>> samples;  // [seq][sample] kept frames
};

// Total L1 reconstruction objective over all samples, scales a and pairs
// (a, b); accumulates parameter gradients when grads != nullptr (caller
// zeroes them).
double msr_loss_and_grads(const MsrBatch& batch, const ModelParams& params,
                          const ModelConfig& cfg, ModelParams* grads);

// Encoded graph states of full-length sequences: out[seq][scale_index] is
// a (frames x D_h) matrix. Parameters are read-only.
std::vector<std::vector<Matrix>> encode_sequences(
    const std::vector<const std::vector<MultiScaleFrame>*>& seqs, const ModelParams& params,
    const ModelConfig& cfg);

// States for one subsequence of one sequence: [scale_index] (k x D_h).
std::vector<Matrix> encode_single(const std::vector<MultiScaleFrame>& frames,
                                  const std::vector<int>& kept, const ModelParams& params,
                                  const ModelConfig& cfg);

// Reconstruction for a (scale_a, scale_b) head from encoded states
// (rows x D_h) -> rows x (n_b * 3). Rejects a > b and inactive pairs.
Matrix reconstruct(const ModelParams& p, const ModelConfig& cfg, int scale_a, int scale_b,
                   const Matrix& states);

// Loss of one sample from precomputed states (per scale, k x D_h) and
// targets[scale_index][t] (n_b x 3); the slow single-sample path used for
// oracle comparisons.
double msr_sample_loss(const ModelParams& p, const ModelConfig& cfg,
                       const std::vector<Matrix>& states,
                       const std::vector<std::vector<Matrix>>& targets);

}  // namespace smsge
