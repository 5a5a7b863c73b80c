#include "muonflow/svd.hpp"

#include "muonflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace muonflow {

namespace {

constexpr double kJacobiTol = 1e-12;
constexpr int kMaxSweeps = 64;

// One-sided Jacobi on a work copy with rows >= cols. Columns of `a` converge to
// u_j * sigma_j; `v` accumulates the right rotations when non-null.
void jacobi_orthogonalize(Matrix& a, Matrix* v) {
    const int m = a.rows();
    const int n = a.cols();
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < m; ++i) {
                    const double x = a(i, p);
                    const double y = a(i, q);
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if (std::abs(apq) <= kJacobiTol * std::sqrt(app * aqq))
                    continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t =
                    (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int i = 0; i < m; ++i) {
                    const double x = a(i, p);
                    const double y = a(i, q);
                    a(i, p) = c * x - s * y;
                    a(i, q) = s * x + c * y;
                }
                if (v != nullptr) {
                    for (int i = 0; i < n; ++i) {
                        const double x = (*v)(i, p);
                        const double y = (*v)(i, q);
                        (*v)(i, p) = c * x - s * y;
                        (*v)(i, q) = s * x + c * y;
                    }
                }
            }
        }
        if (!rotated)
            break;
    }
}

std::vector<int> descending_order(const std::vector<double>& sigma) {
    std::vector<int> order(sigma.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return sigma[i] > sigma[j]; });
    return order;
}

} // namespace

Matrix SvdFactors::reconstruct() const {
    Matrix out(u.rows(), v.rows());
    for (int k = 0; k < rank(); ++k)
        for (int i = 0; i < u.rows(); ++i)
            for (int j = 0; j < v.rows(); ++j)
                out(i, j) += sigma[k] * u(i, k) * v(j, k);
    return out;
}

SvdFactors svd(const Matrix& p, double rank_tol_rel) {
    if (!p.is_finite())
        throw InvalidMatrixError("svd: non-finite input");
    if (rank_tol_rel < 0.0)
        throw InvalidInputError("svd: rank tolerance must be nonnegative");

    const bool transposed = p.rows() < p.cols();
    Matrix a = transposed ? p.transposed() : p;
    const int m = a.rows();
    const int n = a.cols();

    Matrix v = Matrix::identity(n);
    jacobi_orthogonalize(a, &v);

    std::vector<double> sigma(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i)
            s += a(i, j) * a(i, j);
        sigma[j] = std::sqrt(s);
    }
    const auto order = descending_order(sigma);
    const double sigma_max = sigma.empty() ? 0.0 : sigma[order[0]];
    const double abs_tol = rank_tol_rel * sigma_max;

    int rank = 0;
    for (int j : order)
        if (sigma[j] > abs_tol)
            ++rank;

    SvdFactors f;
    f.rank_tol = abs_tol;
    f.sigma.resize(rank);
    f.u = Matrix(m, rank);
    f.v = Matrix(n, rank);
    for (int k = 0; k < rank; ++k) {
        const int j = order[k];
        f.sigma[k] = sigma[j];
        const double inv = 1.0 / sigma[j];
        for (int i = 0; i < m; ++i)
            f.u(i, k) = a(i, j) * inv;
        for (int i = 0; i < n; ++i)
            f.v(i, k) = v(i, j);
    }

    // Sign convention: largest-magnitude entry of each left singular vector
    // is made nonnegative (first index wins ties).
    for (int k = 0; k < rank; ++k) {
        int arg = 0;
        double best = 0.0;
        for (int i = 0; i < m; ++i) {
            const double mag = std::abs(f.u(i, k));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (f.u(arg, k) < 0.0) {
            for (int i = 0; i < m; ++i)
                f.u(i, k) = -f.u(i, k);
            for (int i = 0; i < n; ++i)
                f.v(i, k) = -f.v(i, k);
        }
    }

    if (transposed)
        std::swap(f.u, f.v);
    return f;
}

std::vector<double> singular_values(const Matrix& p) {
    if (!p.is_finite())
        throw InvalidMatrixError("singular_values: non-finite input");
    Matrix a = p.rows() < p.cols() ? p.transposed() : p;
    jacobi_orthogonalize(a, nullptr);
    const int m = a.rows();
    const int n = a.cols();
    std::vector<double> sigma(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i)
            s += a(i, j) * a(i, j);
        sigma[j] = std::sqrt(s);
    }
    std::sort(sigma.begin(), sigma.end(), std::greater<double>());
    return sigma;
}

} // namespace muonflow
