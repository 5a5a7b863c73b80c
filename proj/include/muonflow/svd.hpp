#pragma once

#include "muonflow/matrix.hpp"

#include <vector>

namespace muonflow {

inline constexpr double kDefaultRankTolRel = 1e-12;

/// Reduced SVD: u is m x s with orthonormal columns, v is n x s, sigma descending.
/// rank_tol stores the absolute truncation threshold that was applied.
struct SvdFactors {
    Matrix u;
    std::vector<double> sigma;
    Matrix v;
    double rank_tol = 0.0;

    int rank() const { return static_cast<int>(sigma.size()); }
    Matrix reconstruct() const;
};

/// One-sided cyclic Jacobi SVD. Singular values at or below
/// rank_tol_rel * sigma_max are dropped from the factors.
SvdFactors svd(const Matrix& p, double rank_tol_rel = kDefaultRankTolRel);

/// All min(m, n) singular values, descending, no truncation.
std::vector<double> singular_values(const Matrix& p);

} // namespace muonflow
