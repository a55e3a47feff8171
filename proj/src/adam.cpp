#include "smsge/adam.hpp"

#include <cmath>

namespace smsge {

AdamState make_adam_state(const ModelParams& shape) {
    AdamState st;
    st.m = shape;
    st.v = shape;
    zero_tensors(st.m);
    zero_tensors(st.v);
    return st;
}

std::vector<Matrix*> tensor_ptrs(ModelParams& p) {
    std::vector<Matrix*> out;
    for_each_tensor(p, [&](const std::string&, Matrix& m) { out.push_back(&m); });
    return out;
}

std::vector<const Matrix*> tensor_ptrs(const ModelParams& p) {
    std::vector<const Matrix*> out;
    for_each_tensor(p, [&](const std::string&, const Matrix& m) { out.push_back(&m); });
    return out;
}

double global_grad_norm(const ModelParams& grads) {
    double sq = 0.0;
    for_each_tensor(grads, [&](const std::string&, const Matrix& m) {
        for (std::size_t i = 0; i < m.size(); ++i) sq += m.data()[i] * m.data()[i];
    });
    return std::sqrt(sq);
}

void scale_tensors(ModelParams& t, double s) {
    for_each_tensor(t, [&](const std::string&, Matrix& m) {
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] *= s;
    });
}

namespace {

void adam_update(Matrix& p, const Matrix& g, Matrix& m, Matrix& v, double bc1, double bc2,
                 double lr, double beta1, double beta2, double eps) {
    double* pd = p.data();
    const double* gd = g.data();
    double* md = m.data();
    double* vd = v.data();
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        md[i] = beta1 * md[i] + (1.0 - beta1) * gd[i];
        vd[i] = beta2 * vd[i] + (1.0 - beta2) * gd[i] * gd[i];
        const double mhat = md[i] / bc1;
        const double vhat = vd[i] / bc2;
        pd[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    auto ps = tensor_ptrs(params);
    auto gs = tensor_ptrs(grads);
    auto ms = tensor_ptrs(state.m);
    auto vs = tensor_ptrs(state.v);
    for (std::size_t t = 0; t < ps.size(); ++t)
        adam_update(*ps[t], *gs[t], *ms[t], *vs[t], bc1, bc2, lr, beta1, beta2, eps);
}

void adam_step_tensors(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
                       std::vector<Matrix>& m, std::vector<Matrix>& v, long& step, double lr,
                       double beta1, double beta2, double eps) {
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t t = 0; t < params.size(); ++t)
        adam_update(*params[t], *grads[t], m[t], v[t], bc1, bc2, lr, beta1, beta2, eps);
}

}  // namespace smsge
