#pragma once

#include "smsge/matrix.hpp"

namespace smsge {

// One-hidden-layer perceptron mapping an encoded state to n_b*3 node
// coordinates. Each (a, b) scale pair owns its own head; weights are not
// shared between pairs.
struct HeadParams {
    Matrix w1;  // hidden x D_h
    Matrix b1;  // hidden x 1
    Matrix w2;  // out x hidden
    Matrix b2;  // out x 1
};

struct HeadCache {
    Matrix act1;  // rows x hidden, post-ReLU
};

// h: rows x D_h -> rows x out.
Matrix head_forward(const HeadParams& p, const Matrix& h, HeadCache& cache);

// Accumulates dh (rows x D_h) and parameter gradients.
void head_backward(const HeadParams& p, const HeadCache& cache, const Matrix& h,
                   const Matrix& dout, Matrix& dh, HeadParams& grads);

}  // namespace smsge
