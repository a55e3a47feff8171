#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace smsge {

// Dense row-major matrix of doubles. Column vectors are n x 1.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    double& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    void zero() { std::fill(data_.begin(), data_.end(), 0.0); }
    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Y = X * W^T, optionally accumulating into Y.
// X: m x k, W: n x k, Y: m x n. Parallel over output columns; each output
// element is one sequential dot product, so results do not depend on the
// thread count.
void matmul_nt(const Matrix& X, const Matrix& W, Matrix& Y, bool accumulate = false);

// Y = X * W, optionally accumulating. X: m x n, W: n x k, Y: m x k.
// Parallel over output rows.
void matmul_nn(const Matrix& X, const Matrix& W, Matrix& Y, bool accumulate = false);

// W += X^T * Y. X: m x n, Y: m x k, W: n x k. Parallel over rows of W.
void matmul_tn_acc(const Matrix& X, const Matrix& Y, Matrix& W);

// y += a * x over all elements (shapes must match).
void axpy(double a, const Matrix& x, Matrix& y);

double dot(const double* a, const double* b, std::size_t n);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace smsge
