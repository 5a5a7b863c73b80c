#include "muonflow/matrix.hpp"

#include "muonflow/errors.hpp"

#include <cmath>
#include <utility>

namespace muonflow {

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0)
        throw InvalidMatrixError("matrix dimensions must be nonnegative");
    if (!std::isfinite(fill))
        throw InvalidMatrixError("matrix fill value must be finite");
}

Matrix::Matrix(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (rows < 0 || cols < 0)
        throw InvalidMatrixError("matrix dimensions must be nonnegative");
    if (data_.size() != static_cast<std::size_t>(rows) * cols)
        throw InvalidMatrixError("entry count does not match rows * cols");
    if (!is_finite())
        throw InvalidMatrixError("matrix entries must be finite");
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

bool Matrix::is_finite() const {
    for (double x : data_)
        if (!std::isfinite(x))
            return false;
    return true;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (!same_shape(other))
        throw ShapeMismatchError("matrix addition shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k)
        data_[k] += other.data_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    if (!same_shape(other))
        throw ShapeMismatchError("matrix subtraction shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k)
        data_[k] -= other.data_[k];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& x : data_)
        x *= s;
    return *this;
}

void Matrix::axpy(double a, const Matrix& x) {
    if (!same_shape(x))
        throw ShapeMismatchError("axpy shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k)
        data_[k] += a * x.data_[k];
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j)
            t(j, i) = (*this)(i, j);
    return t;
}

Matrix operator+(Matrix a, const Matrix& b) {
    a += b;
    return a;
}

Matrix operator-(Matrix a, const Matrix& b) {
    a -= b;
    return a;
}

Matrix operator*(double s, Matrix a) {
    a *= s;
    return a;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeMismatchError("matrix product inner dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0)
                continue;
            for (int j = 0; j < b.cols(); ++j)
                c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Matrix multiply_abt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw ShapeMismatchError("A*B^T inner dimension mismatch");
    Matrix c(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k)
                s += a(i, k) * b(j, k);
            c(i, j) = s;
        }
    }
    return c;
}

double frobenius_inner(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw ShapeMismatchError("Frobenius inner product shape mismatch");
    double s = 0.0;
    auto ea = a.entries();
    auto eb = b.entries();
    for (std::size_t k = 0; k < ea.size(); ++k)
        s += ea[k] * eb[k];
    return s;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double x : a.entries())
        s += x * x;
    return std::sqrt(s);
}

} // namespace muonflow
