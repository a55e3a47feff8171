#pragma once

#include <vector>

#include "smsge/model.hpp"

namespace smsge {

// First/second moment estimates mirroring the parameter shapes.
struct AdamState {
    ModelParams m, v;
    long step = 0;
};

AdamState make_adam_state(const ModelParams& shape);

// Pointers in canonical tensor order; params/grads/moments line up.
std::vector<Matrix*> tensor_ptrs(ModelParams& p);
std::vector<const Matrix*> tensor_ptrs(const ModelParams& p);

double global_grad_norm(const ModelParams& grads);
void scale_tensors(ModelParams& t, double s);

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps);

// Same update over loose tensor lists (used by the probe classifier).
void adam_step_tensors(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
                       std::vector<Matrix>& m, std::vector<Matrix>& v, long& step, double lr,
                       double beta1, double beta2, double eps);

}  // namespace smsge
