#include "coaleps/matrix.hpp"

#include <cassert>
#include <cmath>

namespace coaleps {

Matrix& Matrix::operator+=(const Matrix& rhs) {
    assert(same_shape(rhs));
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& rhs) {
    assert(same_shape(rhs));
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
}

double Matrix::max_row_sum_norm() const {
    double best = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
        if (s > best) best = s;
    }
    return best;
}

double Matrix::row_sum(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j);
    return s;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    assert(a.cols() == b.rows());
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

std::vector<double> row_times(const std::vector<double>& v, const Matrix& m) {
    assert(v.size() == m.rows());
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double vk = v[k];
        if (vk == 0.0) continue;
        const double* mk = m.row_ptr(k);
        for (std::size_t j = 0; j < m.cols(); ++j) out[j] += vk * mk[j];
    }
    return out;
}

Matrix matrix_power(const Matrix& m, unsigned long long k) {
    assert(m.rows() == m.cols());
    Matrix result = Matrix::identity(m.rows());
    Matrix base = m;
    while (k > 0) {
        if (k & 1ull) result = result * base;
        base = base * base;
        k >>= 1;
    }
    return result;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    assert(a.same_shape(b));
    double best = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            best = std::max(best, std::abs(a(i, j) - b(i, j)));
    return best;
}

}  // namespace coaleps
