#include "muonflow/spectral.hpp"

#include "muonflow/errors.hpp"

#include <cmath>

namespace muonflow {

namespace {

constexpr double kPhiBoundarySlack = 1e-12;
constexpr double kGradPhiMargin = 1e-12;

// Rebuild U f(sigma) V^T from reduced factors.
Matrix apply_spectral(const SvdFactors& f, int out_rows, int out_cols,
                      double (*fn)(double, double), double eps) {
    Matrix out(out_rows, out_cols);
    for (int k = 0; k < f.rank(); ++k) {
        const double fs = fn(f.sigma[k], eps);
        for (int i = 0; i < out_rows; ++i) {
            const double ufs = f.u(i, k) * fs;
            for (int j = 0; j < out_cols; ++j)
                out(i, j) += ufs * f.v(j, k);
        }
    }
    return out;
}

} // namespace

EpsParam::EpsParam(double e) : eps(e) {
    if (!(e > 0.0) || !std::isfinite(e))
        throw InvalidInputError("EpsParam: eps must be strictly positive and finite");
}

Matrix orth_hard(const Matrix& p, double rank_tol_rel) {
    const SvdFactors f = svd(p, rank_tol_rel);
    return apply_spectral(f, p.rows(), p.cols(), [](double, double) { return 1.0; }, 0.0);
}

Matrix orth_eps(const Matrix& p, EpsParam e) {
    const SvdFactors f = svd(p);
    return apply_spectral(
        f, p.rows(), p.cols(),
        [](double s, double eps) { return s / std::sqrt(s * s + eps * eps); }, e.eps);
}

double psi_eps(const Matrix& p, EpsParam e) {
    double sum = 0.0;
    for (double s : singular_values(p))
        sum += std::sqrt(s * s + e.eps * e.eps) - e.eps;
    return sum;
}

double phi_eps(const Matrix& g, EpsParam e) {
    double sum = 0.0;
    const auto sigma = singular_values(g);
    if (!sigma.empty() && sigma[0] > 1.0 + kPhiBoundarySlack)
        throw OutsideDomainError("phi_eps: spectral norm exceeds the unit ball");
    for (double s : sigma) {
        const double s2 = std::min(s * s, 1.0); // absorb boundary rounding
        sum += e.eps * (1.0 - std::sqrt(1.0 - s2));
    }
    return sum;
}

Matrix grad_phi_eps(const Matrix& g, EpsParam e) {
    const SvdFactors f = svd(g);
    if (f.rank() > 0 && f.sigma[0] >= 1.0 - kGradPhiMargin)
        throw OutsideDomainError("grad_phi_eps: input at or beyond the spectral ball boundary");
    return apply_spectral(
        f, g.rows(), g.cols(),
        [](double s, double eps) { return eps * s / std::sqrt((1.0 - s) * (1.0 + s)); },
        e.eps);
}

double dissipation_density(const Matrix& p, EpsParam e) {
    double sum = 0.0;
    for (double s : singular_values(p))
        sum += s * s / std::sqrt(s * s + e.eps * e.eps);
    return sum;
}

Matrix newton_schulz5(const Matrix& p, int iters) {
    if (!p.is_finite())
        throw InvalidMatrixError("newton_schulz5: non-finite input");
    if (iters < 1)
        throw InvalidInputError("newton_schulz5: iters must be at least 1");
    const double nf = frobenius_norm(p);
    if (nf < 1e-300)
        return Matrix(p.rows(), p.cols()); // Orth(0) = 0 convention

    // Scalar map f(x) = (15x - 10x^3 + 3x^5)/8 has f'(x) = (15/8)(1 - x^2)^2,
    // so it is monotone on [0, 1] with attracting fixed point 1: normalized
    // singular values converge to 1 instead of oscillating around it.
    constexpr double a = 15.0 / 8.0, b = -5.0 / 4.0, c = 3.0 / 8.0;
    const bool transposed = p.rows() > p.cols();
    Matrix x = transposed ? p.transposed() : p;
    x *= 1.0 / nf;
    for (int it = 0; it < iters; ++it) {
        const Matrix gram = multiply_abt(x, x);
        Matrix poly = multiply(gram, gram); // c*G^2 + b*G
        poly *= c;
        poly.axpy(b, gram);
        Matrix next = multiply(poly, x);
        next.axpy(a, x);
        x = std::move(next);
    }
    if (!x.is_finite())
        throw NonFiniteStateError("newton_schulz5: iteration diverged");
    return transposed ? x.transposed() : x;
}

MatrixNorms norms(const Matrix& p) {
    const auto sigma = singular_values(p);
    MatrixNorms n{frobenius_norm(p), 0.0, 0.0};
    if (!sigma.empty())
        n.op = sigma[0];
    for (double s : sigma)
        n.nuc += s;
    return n;
}

} // namespace muonflow
