#pragma once

#include <span>
#include <vector>

namespace muonflow {

/// Dense real rectangular matrix, row-major storage, Frobenius geometry.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0);
    /// Builds from row-major entries; rejects size mismatch and non-finite values.
    Matrix(int rows, int cols, std::vector<double> entries);

    static Matrix identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    std::span<double> entries() { return data_; }
    std::span<const double> entries() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool is_finite() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);
    /// this += a * x
    void axpy(double a, const Matrix& x);

    Matrix transposed() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

/// A * B
Matrix multiply(const Matrix& a, const Matrix& b);
/// A * B^T
Matrix multiply_abt(const Matrix& a, const Matrix& b);

double frobenius_inner(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

} // namespace muonflow
