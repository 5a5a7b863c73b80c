#pragma once

#include "muonflow/objectives.hpp"

#include <vector>

namespace muonflow {

/// One sampled row along a trajectory. Invariants H = K + gamma U and
/// L = H - alpha C hold by construction.
struct DiagnosticsRecord {
    long step = 0;
    double t = 0.0;
    double J = 0.0;
    double K = 0.0;
    double D = 0.0;
    double A = 0.0;
    double C = 0.0;
    double U = 0.0;
    double H = 0.0;
    double L = 0.0;
};

/// Kinetic energy / dissipation / force / alignment averages of an ensemble.
/// eps = 0 selects the hard kinetic (nuclear norm) used for diagnostic
/// trajectories of the unregularized comparator rules.
DiagnosticsRecord energies(const Objective& obj, const Ensemble& ens, double eps, double gamma,
                           double alpha, double j_star);

/// Max over interior samples of |(H_{k+1} - H_{k-1}) / (2h) + gamma D_k|.
double dissipation_residual(const std::vector<DiagnosticsRecord>& records, double gamma);

/// Bounded-momentum coercivity constants of the regularized kinetic potential.
struct KineticConstants {
    double kappa_k;
    double kappa_d;
    double l_g;
    double chi;
};

KineticConstants kinetic_constants(double b_p, double eps);

struct RateInputs {
    double gamma;
    double alpha;
    double r;
    double sigma;
    double lambda;
    double lambda_upper; // Lambda
    KineticConstants kinetic;
};

struct ContinuousRate {
    double m_c;
    double d_ar;
    double c_ar;
    bool feasible;
};

/// M_C = sqrt(Lambda / (gamma kappa_K)), d = gamma - alpha sigma -
/// alpha gamma / (2 r kappa_D), c = min(d / chi, 2 lambda alpha (1 - r/2)) /
/// (1 + alpha M_C). Feasible iff alpha M_C < 1 and d > 0.
ContinuousRate continuous_rate(const RateInputs& ri);

struct DiscreteRate {
    double d_h;
    double a_h;
    double q_h;
    double c_h;
    double h_star;
    bool feasible;
};

/// Fixed-step contraction constants at step size h with curvature bound
/// B_curv; feasible iff d_h > 0, a_h > 0, and h c_h <= 1.
DiscreteRate discrete_rate(const RateInputs& ri, double h, double b_curv);

struct PlEstimate {
    double lambda_hat;
    double lambda_upper_hat;
};

/// min / max of A / (2U) over samples with U above the floor. A nonpositive
/// u_floor selects the default 1e-12 * U of the first record.
PlEstimate pl_estimator(const std::vector<DiagnosticsRecord>& records, double u_floor = -1.0);

enum class RecordField { U, H, L };

/// Positive decay rate from a least-squares fit of log(field) against t over
/// [window_begin, window_end).
double exp_fit(const std::vector<DiagnosticsRecord>& records, RecordField field,
               std::size_t window_begin, std::size_t window_end);

/// sigma = L_G (M_D^2 M_R2 + M_R M_D2) / kappa_D with the convention that a
/// zero second-derivative bound kills its (possibly unbounded) partner factor.
double curvature_sigma(const KineticConstants& kc, const CurvatureConstants& cc);

} // namespace muonflow
