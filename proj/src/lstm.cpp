#include "smsge/lstm.hpp"

#include <cmath>
#include <stdexcept>

namespace smsge {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// pre: rows x 4Dh packed gate pre-activations -> in-place activations.
void activate_gates(Matrix& pre, std::size_t dh) {
    for (std::size_t r = 0; r < pre.rows(); ++r) {
        double* row = pre.row(r);
        for (std::size_t q = 0; q < dh; ++q) {
            row[q] = sigmoid(row[q]);                    // input
            row[dh + q] = sigmoid(row[dh + q]);          // forget
            row[2 * dh + q] = std::tanh(row[2 * dh + q]);  // candidate
            row[3 * dh + q] = sigmoid(row[3 * dh + q]);  // output
        }
    }
}

void layer_step(const LstmLayerParams& p, const Matrix& x, const Matrix* h_prev,
                const Matrix* c_prev, Matrix& gates, Matrix& c, Matrix& tc, Matrix& h) {
    const std::size_t rows = x.rows();
    const std::size_t dh = p.wh.cols();
    gates = Matrix(rows, 4 * dh);
    matmul_nt(x, p.wx, gates);
    if (h_prev) matmul_nt(*h_prev, p.wh, gates, true);
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = gates.row(r);
        const double* bias = p.b.data();
        for (std::size_t q = 0; q < 4 * dh; ++q) row[q] += bias[q];
    }
    activate_gates(gates, dh);
    c = Matrix(rows, dh);
    tc = Matrix(rows, dh);
    h = Matrix(rows, dh);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* g = gates.row(r);
        const double* cp = c_prev ? c_prev->row(r) : nullptr;
        double* cr = c.row(r);
        double* tcr = tc.row(r);
        double* hr = h.row(r);
        for (std::size_t q = 0; q < dh; ++q) {
            const double iv = g[q], fv = g[dh + q], gv = g[2 * dh + q], ov = g[3 * dh + q];
            cr[q] = iv * gv + (cp ? fv * cp[q] : 0.0);
            tcr[q] = std::tanh(cr[q]);
            hr[q] = ov * tcr[q];
        }
    }
}

// BPTT through one layer. dh_ext may contain empty matrices. Fills dx
// (one matrix per step) and accumulates into grads.
void layer_backward(const LstmLayerParams& p, const std::vector<Matrix>& x,
                    const std::vector<Matrix>& gates, const std::vector<Matrix>& c,
                    const std::vector<Matrix>& tc, const std::vector<Matrix>& h,
                    const std::vector<Matrix>& dh_ext, std::vector<Matrix>& dx,
                    LstmLayerParams& grads) {
    const int steps = static_cast<int>(x.size());
    const std::size_t rows = x[0].rows();
    const std::size_t dh = p.wh.cols();
    Matrix dh_next(rows, dh), dc_next(rows, dh);
    dx.assign(x.size(), Matrix());
    Matrix dpre(rows, 4 * dh);
    for (int t = steps - 1; t >= 0; --t) {
        Matrix dh_t = dh_next;
        if (t < static_cast<int>(dh_ext.size()) && !dh_ext[t].empty()) axpy(1.0, dh_ext[t], dh_t);
        const Matrix* cp = t > 0 ? &c[t - 1] : nullptr;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* g = gates[t].row(r);
            const double* tcr = tc[t].row(r);
            const double* dhr = dh_t.row(r);
            const double* dcn = dc_next.row(r);
            double* dp = dpre.row(r);
            double* dcn_out = dc_next.row(r);
            for (std::size_t q = 0; q < dh; ++q) {
                const double iv = g[q], fv = g[dh + q], gv = g[2 * dh + q], ov = g[3 * dh + q];
                const double dc = dhr[q] * ov * (1.0 - tcr[q] * tcr[q]) + dcn[q];
                dp[3 * dh + q] = dhr[q] * tcr[q] * ov * (1.0 - ov);       // output gate
                dp[q] = dc * gv * iv * (1.0 - iv);                        // input gate
                dp[2 * dh + q] = dc * iv * (1.0 - gv * gv);               // candidate
                dp[dh + q] = cp ? dc * cp->row(r)[q] * fv * (1.0 - fv) : 0.0;  // forget
                dcn_out[q] = dc * fv;
            }
        }
        dx[t] = Matrix(rows, x[t].cols());
        matmul_nn(dpre, p.wx, dx[t]);
        matmul_nn(dpre, p.wh, dh_next);
        matmul_tn_acc(dpre, x[t], grads.wx);
        if (t > 0) matmul_tn_acc(dpre, h[t - 1], grads.wh);
        double* gb = grads.b.data();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* dp = dpre.row(r);
            for (std::size_t q = 0; q < 4 * dh; ++q) gb[q] += dp[q];
        }
    }
}

}  // namespace

void lstm_forward(const LstmParams& p, const std::vector<Matrix>& x, LstmCache& cache) {
    if (x.empty()) throw std::invalid_argument("lstm_forward: empty input");
    const int steps = static_cast<int>(x.size());
    cache.steps = steps;
    cache.g1.assign(x.size(), Matrix());
    cache.c1.assign(x.size(), Matrix());
    cache.tc1.assign(x.size(), Matrix());
    cache.h1.assign(x.size(), Matrix());
    cache.g2.assign(x.size(), Matrix());
    cache.c2.assign(x.size(), Matrix());
    cache.tc2.assign(x.size(), Matrix());
    cache.h2.assign(x.size(), Matrix());
    for (int t = 0; t < steps; ++t) {
        const Matrix* h_prev = t > 0 ? &cache.h1[t - 1] : nullptr;
        const Matrix* c_prev = t > 0 ? &cache.c1[t - 1] : nullptr;
        layer_step(p.l1, x[t], h_prev, c_prev, cache.g1[t], cache.c1[t], cache.tc1[t],
                   cache.h1[t]);
        const Matrix* h2_prev = t > 0 ? &cache.h2[t - 1] : nullptr;
        const Matrix* c2_prev = t > 0 ? &cache.c2[t - 1] : nullptr;
        layer_step(p.l2, cache.h1[t], h2_prev, c2_prev, cache.g2[t], cache.c2[t], cache.tc2[t],
                   cache.h2[t]);
    }
}

void lstm_backward(const LstmParams& p, const std::vector<Matrix>& x, const LstmCache& cache,
                   const std::vector<Matrix>& dh_ext, std::vector<Matrix>& dx,
                   LstmParams& grads) {
    std::vector<Matrix> dh1;
    layer_backward(p.l2, cache.h1, cache.g2, cache.c2, cache.tc2, cache.h2, dh_ext, dh1,
                   grads.l2);
    layer_backward(p.l1, x, cache.g1, cache.c1, cache.tc1, cache.h1, dh1, dx, grads.l1);
}

}  // namespace smsge
