#pragma once

#include <vector>

#include "smsge/matrix.hpp"

namespace smsge {

// One LSTM layer; gate rows are packed [input, forget, candidate, output].
struct LstmLayerParams {
    Matrix wx;  // 4*D_h x in
    Matrix wh;  // 4*D_h x D_h
    Matrix b;   // 4*D_h x 1
};

// Two stacked layers; the second layer's hidden state is the encoded
// graph state h_t.
struct LstmParams {
    LstmLayerParams l1, l2;
};

// Per-timestep activations for a batch of equal-length sequences
// (rows = batch lanes). Hidden/cell states start at zero.
struct LstmCache {
    int steps = 0;
    std::vector<Matrix> g1, c1, tc1, h1;
    std::vector<Matrix> g2, c2, tc2, h2;
};

// x: one (rows x in) matrix per timestep. States are zero-initialized.
void lstm_forward(const LstmParams& p, const std::vector<Matrix>& x, LstmCache& cache);

// dh_ext: external gradient on h2 per timestep (may be empty matrices for
// steps without loss terms). Writes dx per timestep and accumulates
// parameter gradients into `grads`.
void lstm_backward(const LstmParams& p, const std::vector<Matrix>& x, const LstmCache& cache,
                   const std::vector<Matrix>& dh_ext, std::vector<Matrix>& dx,
                   LstmParams& grads);

}  // namespace smsge
