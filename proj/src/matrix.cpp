#include "smsge/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace smsge {

namespace {
// Parallelizing tiny products costs more than it saves.
constexpr std::size_t kParallelMacThreshold = 1u << 16;
}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void matmul_nt(const Matrix& X, const Matrix& W, Matrix& Y, bool accumulate) {
    const std::size_t m = X.rows(), k = X.cols(), n = W.rows();
    assert(W.cols() == k && Y.rows() == m && Y.cols() == n);
    const bool par = m * n * k >= kParallelMacThreshold;
#pragma omp parallel for schedule(static) if (par)
    for (std::size_t j = 0; j < n; ++j) {
        const double* wr = W.row(j);
        for (std::size_t i = 0; i < m; ++i) {
            const double v = dot(X.row(i), wr, k);
            double& out = Y(i, j);
            out = accumulate ? out + v : v;
        }
    }
}

void matmul_nn(const Matrix& X, const Matrix& W, Matrix& Y, bool accumulate) {
    const std::size_t m = X.rows(), n = X.cols(), k = W.cols();
    assert(W.rows() == n && Y.rows() == m && Y.cols() == k);
    const bool par = m * n * k >= kParallelMacThreshold;
#pragma omp parallel for schedule(static) if (par)
    for (std::size_t i = 0; i < m; ++i) {
        double* yr = Y.row(i);
        if (!accumulate) std::fill(yr, yr + k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double a = X(i, j);
            if (a == 0.0) continue;
            const double* wr = W.row(j);
#pragma omp simd
            for (std::size_t c = 0; c < k; ++c) yr[c] += a * wr[c];
        }
    }
}

void matmul_tn_acc(const Matrix& X, const Matrix& Y, Matrix& W) {
    const std::size_t m = X.rows(), n = X.cols(), k = Y.cols();
    assert(Y.rows() == m && W.rows() == n && W.cols() == k);
    const bool par = m * n * k >= kParallelMacThreshold;
#pragma omp parallel for schedule(static) if (par)
    for (std::size_t j = 0; j < n; ++j) {
        double* wr = W.row(j);
        for (std::size_t i = 0; i < m; ++i) {
            const double a = X(i, j);
            if (a == 0.0) continue;
            const double* yr = Y.row(i);
#pragma omp simd
            for (std::size_t c = 0; c < k; ++c) wr[c] += a * yr[c];
        }
    }
}

void axpy(double a, const Matrix& x, Matrix& y) {
    assert(x.same_shape(y));
    const double* xp = x.data();
    double* yp = y.data();
    const std::size_t n = x.size();
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) yp[i] += a * xp[i];
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    assert(a.same_shape(b));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::fabs(a.data()[i] - b.data()[i]));
    return worst;
}

}  // namespace smsge
