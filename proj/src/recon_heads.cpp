#include "smsge/recon_heads.hpp"

namespace smsge {

Matrix head_forward(const HeadParams& p, const Matrix& h, HeadCache& cache) {
    cache.act1 = Matrix(h.rows(), p.w1.rows());
    matmul_nt(h, p.w1, cache.act1);
    for (std::size_t r = 0; r < cache.act1.rows(); ++r) {
        double* row = cache.act1.row(r);
        const double* b = p.b1.data();
        for (std::size_t q = 0; q < cache.act1.cols(); ++q) {
            row[q] += b[q];
            if (row[q] < 0.0) row[q] = 0.0;
        }
    }
    Matrix out(h.rows(), p.w2.rows());
    matmul_nt(cache.act1, p.w2, out);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        double* row = out.row(r);
        const double* b = p.b2.data();
        for (std::size_t q = 0; q < out.cols(); ++q) row[q] += b[q];
    }
    return out;
}

void head_backward(const HeadParams& p, const HeadCache& cache, const Matrix& h,
                   const Matrix& dout, Matrix& dh, HeadParams& grads) {
    matmul_tn_acc(dout, cache.act1, grads.w2);
    double* gb2 = grads.b2.data();
    for (std::size_t r = 0; r < dout.rows(); ++r) {
        const double* row = dout.row(r);
        for (std::size_t q = 0; q < dout.cols(); ++q) gb2[q] += row[q];
    }
    Matrix dact(h.rows(), p.w1.rows());
    matmul_nn(dout, p.w2, dact);
    // ReLU mask: act1 == 0 iff the pre-activation was clamped.
    for (std::size_t i = 0; i < dact.size(); ++i)
        if (cache.act1.data()[i] <= 0.0) dact.data()[i] = 0.0;
    matmul_tn_acc(dact, h, grads.w1);
    double* gb1 = grads.b1.data();
    for (std::size_t r = 0; r < dact.rows(); ++r) {
        const double* row = dact.row(r);
        for (std::size_t q = 0; q < dact.cols(); ++q) gb1[q] += row[q];
    }
    matmul_nn(dact, p.w1, dh, true);
}

}  // namespace smsge
