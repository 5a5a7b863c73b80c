#pragma once

#include "muonflow/matrix.hpp"
#include "muonflow/svd.hpp"

namespace muonflow {

/// Regularization scale for the smooth spectral maps; strictly positive.
struct EpsParam {
    double eps;
    explicit EpsParam(double e);
};

/// Polar factor U V^T of the reduced SVD; zero matrix maps to zero.
Matrix orth_hard(const Matrix& p, double rank_tol_rel = kDefaultRankTolRel);

/// Smooth saturation U diag(sigma_i / sqrt(sigma_i^2 + eps^2)) V^T.
/// Gradient of psi_eps; operator norm strictly below one.
Matrix orth_eps(const Matrix& p, EpsParam e);

/// Sum over padded singular values of sqrt(sigma^2 + eps^2) - eps.
double psi_eps(const Matrix& p, EpsParam e);

/// eps * sum(1 - sqrt(1 - sigma^2)) on the spectral unit ball, conjugate of
/// psi_eps. Throws OutsideDomainError when the spectral norm exceeds 1 + 1e-12.
double phi_eps(const Matrix& g, EpsParam e);

/// Inverse mirror map U diag(eps * sigma / sqrt(1 - sigma^2)) V^T, defined on
/// the open spectral unit ball (rejects sigma_1 >= 1 - 1e-12).
Matrix grad_phi_eps(const Matrix& g, EpsParam e);

/// <P, orth_eps(P)> = sum sigma^2 / sqrt(sigma^2 + eps^2); zero iff P = 0.
double dissipation_density(const Matrix& p, EpsParam e);

/// Quintic Newton-Schulz polar-factor approximation with Frobenius
/// pre-normalization; returns zero for zero input.
Matrix newton_schulz5(const Matrix& p, int iters = 5);

struct MatrixNorms {
    double fro;
    double op;
    double nuc;
};

MatrixNorms norms(const Matrix& p);

} // namespace muonflow
