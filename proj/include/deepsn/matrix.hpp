#pragma once
#include <cassert>
#include <cstddef>
#include <vector>

namespace deepsn {

// Dense row-major matrix of doubles. Small and unclever on purpose: every
// heavy operation in this code base is sparse or block-structured and lives
// in kernels.cpp; this type only has to carry data and do modest dense math.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    Matrix& operator+=(const Matrix& o) {
        assert(same_shape(o));
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        assert(same_shape(o));
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& m);
double dot(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& m);

} // namespace deepsn
