#include "deepsn/matrix.hpp"

#include <cmath>

namespace deepsn {

Matrix matmul(const Matrix& a, const Matrix& b) {
    assert(a.cols() == b.rows());
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.row(k);
            for (int j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    assert(a.rows() == b.rows());
    Matrix c(a.cols(), b.cols());
    for (int k = 0; k < a.rows(); ++k) {
        const double* ak = a.row(k);
        const double* bk = b.row(k);
        for (int i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = c.row(i);
            for (int j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    assert(a.cols() == b.cols());
    Matrix c(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (int j = 0; j < b.rows(); ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
            ci[j] += s;
        }
    }
    return c;
}

double max_abs(const Matrix& m) {
    double r = 0.0;
    for (double v : m.vec()) r = std::max(r, std::fabs(v));
    return r;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    assert(a.same_shape(b));
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::fabs(a.vec()[i] - b.vec()[i]));
    return r;
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.vec()) s += v * v;
    return std::sqrt(s);
}

double dot(const Matrix& a, const Matrix& b) {
    assert(a.same_shape(b));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.vec()[i] * b.vec()[i];
    return s;
}

bool all_finite(const Matrix& m) {
    for (double v : m.vec())
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace deepsn
