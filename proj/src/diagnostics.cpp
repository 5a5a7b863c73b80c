#include "muonflow/diagnostics.hpp"

#include "muonflow/dynamics.hpp"
#include "muonflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace muonflow {

DiagnosticsRecord energies(const Objective& obj, const Ensemble& ens, double eps, double gamma,
                           double alpha, double j_star) {
    if (eps < 0.0)
        throw InvalidInputError("energies: eps must be nonnegative");
    DiagnosticsRecord rec;
    rec.step = ens.step;
    rec.t = ens.time;
    const auto m = obj.moment(ens);
    rec.J = obj.value_from_moment(m);
    if (rec.J < j_star)
        throw InvalidInputError("energies: j_star exceeds the current objective value");

    const auto forces = obj.forces_at(ens, m);
    double k_sum = 0.0, d_sum = 0.0, a_sum = 0.0, c_sum = 0.0;
    for (int i = 0; i < ens.n_particles; ++i) {
        const BlockPoint& p = ens.momenta[i];
        for (int b = 0; b < p.block_count(); ++b) {
            for (double s : singular_values(p.block(b))) {
                if (eps > 0.0) {
                    const double root = std::sqrt(s * s + eps * eps);
                    k_sum += root - eps;
                    d_sum += s * s / root;
                } else {
                    // hard kinetic: both reduce to the nuclear norm
                    k_sum += s;
                    d_sum += s;
                }
            }
        }
        const double fn = block_norm(forces[i]);
        a_sum += fn * fn;
        c_sum += block_inner(forces[i], p);
    }
    const double inv = 1.0 / ens.n_particles;
    rec.K = k_sum * inv;
    rec.D = d_sum * inv;
    rec.A = a_sum * inv;
    rec.C = c_sum * inv;
    rec.U = rec.J - j_star;
    rec.H = rec.K + gamma * rec.U;
    rec.L = rec.H - alpha * rec.C;
    return rec;
}

double dissipation_residual(const std::vector<DiagnosticsRecord>& records, double gamma) {
    if (records.size() < 3)
        throw TooFewRecordsError("dissipation_residual: need at least three records");
    const double h = records[1].t - records[0].t;
    if (!(h > 0.0))
        throw InvalidInputError("dissipation_residual: non-increasing sample times");
    for (std::size_t k = 1; k < records.size(); ++k)
        if (std::abs(records[k].t - records[k - 1].t - h) > 1e-9 * std::max(1.0, std::abs(h)))
            throw InvalidInputError("dissipation_residual: non-uniform sample spacing");

    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < records.size(); ++k) {
        const double dh_dt = (records[k + 1].H - records[k - 1].H) / (2.0 * h);
        worst = std::max(worst, std::abs(dh_dt + gamma * records[k].D));
    }
    return worst;
}

KineticConstants kinetic_constants(double b_p, double eps) {
    if (b_p < 0.0 || !(eps > 0.0))
        throw InvalidInputError("kinetic_constants: require b_p >= 0 and eps > 0");
    const double s2 = b_p * b_p + eps * eps;
    return KineticConstants{eps * eps / (s2 * std::sqrt(s2)), 1.0 / std::sqrt(s2), 1.0 / eps,
                            1.0};
}

ContinuousRate continuous_rate(const RateInputs& ri) {
    ContinuousRate out{};
    out.m_c = std::sqrt(ri.lambda_upper / (ri.gamma * ri.kinetic.kappa_k));
    out.d_ar = ri.gamma - ri.alpha * ri.sigma -
               ri.alpha * ri.gamma / (2.0 * ri.r * ri.kinetic.kappa_d);
    out.c_ar = std::min(out.d_ar / ri.kinetic.chi,
                        2.0 * ri.lambda * ri.alpha * (1.0 - ri.r / 2.0)) /
               (1.0 + ri.alpha * out.m_c);
    out.feasible = ri.alpha * out.m_c < 1.0 && out.d_ar > 0.0;
    return out;
}

DiscreteRate discrete_rate(const RateInputs& ri, double h, double b_curv) {
    if (!(h > 0.0) || !(h < 1.0 / ri.gamma))
        throw InvalidInputError("discrete_rate: require 0 < h < 1/gamma");
    if (b_curv < 0.0)
        throw InvalidInputError("discrete_rate: B_curv must be nonnegative");

    const double gamma = ri.gamma, alpha = ri.alpha, r = ri.r, sigma = ri.sigma;
    const double kd = ri.kinetic.kappa_d, lg = ri.kinetic.l_g, lambda = ri.lambda;
    const double beta_h = 1.0 - gamma * h;
    const double m_c = std::sqrt(ri.lambda_upper / (gamma * ri.kinetic.kappa_k));

    DiscreteRate out{};
    out.d_h = gamma - alpha * sigma - alpha * gamma / (2.0 * r * beta_h * kd) -
              h * lg * lg / (2.0 * kd) * (gamma * gamma / beta_h + gamma * b_curv);
    out.a_h = alpha * gamma * (1.0 - r / (2.0 * beta_h)) - gamma * gamma * h / (2.0 * beta_h);
    out.q_h = std::min(out.d_h * beta_h * beta_h * kd / lg,
                       out.a_h / (gamma / (2.0 * lambda) + lg * gamma * gamma * h * h /
                                                               (beta_h * beta_h)));
    out.c_h = out.q_h / (1.0 + alpha * m_c);

    const double d0 = gamma - alpha * sigma - alpha * gamma / (2.0 * r * kd);
    const double a0 = alpha * gamma * (1.0 - r / 2.0);
    const double b_d = alpha * gamma * gamma / (r * kd) +
                       lg * lg / (2.0 * kd) * (2.0 * gamma * gamma + gamma * b_curv);
    const double b_a = gamma * gamma * (1.0 + alpha * r);
    const double q_star =
        std::min(d0 * kd / (8.0 * lg),
                 a0 / (2.0 * (gamma / (2.0 * lambda) + 4.0 * lg * gamma * gamma)));
    const double c_star = q_star / (1.0 + alpha * m_c);
    const double inf = std::numeric_limits<double>::infinity();
    out.h_star = std::min({1.0, 1.0 / (2.0 * gamma), b_d > 0.0 ? d0 / (2.0 * b_d) : inf,
                           b_a > 0.0 ? a0 / (2.0 * b_a) : inf, 1.0 / c_star});
    out.feasible = out.d_h > 0.0 && out.a_h > 0.0 && h * out.c_h <= 1.0;
    return out;
}

PlEstimate pl_estimator(const std::vector<DiagnosticsRecord>& records, double u_floor) {
    if (records.empty())
        throw InvalidInputError("pl_estimator: no records");
    if (u_floor <= 0.0)
        u_floor = 1e-12 * records.front().U;
    PlEstimate out{std::numeric_limits<double>::infinity(), 0.0};
    bool retained = false;
    for (const auto& rec : records) {
        if (!(rec.U > u_floor))
            continue;
        retained = true;
        const double ratio = rec.A / (2.0 * rec.U);
        out.lambda_hat = std::min(out.lambda_hat, ratio);
        out.lambda_upper_hat = std::max(out.lambda_upper_hat, ratio);
    }
    if (!retained)
        throw NoRetainedSamplesError("pl_estimator: no samples above the U floor");
    return out;
}

double exp_fit(const std::vector<DiagnosticsRecord>& records, RecordField field,
               std::size_t window_begin, std::size_t window_end) {
    window_end = std::min(window_end, records.size());
    if (window_begin + 2 > window_end)
        throw InvalidInputError("exp_fit: window must hold at least two samples");
    std::vector<double> t, logv;
    t.reserve(window_end - window_begin);
    for (std::size_t k = window_begin; k < window_end; ++k) {
        double v = 0.0;
        switch (field) {
        case RecordField::U:
            v = records[k].U;
            break;
        case RecordField::H:
            v = records[k].H;
            break;
        case RecordField::L:
            v = records[k].L;
            break;
        }
        if (!(v > 0.0))
            throw NonPositiveFieldError("exp_fit: field nonpositive inside the window");
        t.push_back(records[k].t);
        logv.push_back(std::log(v));
    }
    return -least_squares_slope(t, logv);
}

double curvature_sigma(const KineticConstants& kc, const CurvatureConstants& cc) {
    const double term_r2 = cc.m_r2 == 0.0 ? 0.0 : cc.m_d * cc.m_d * cc.m_r2;
    const double term_d2 = cc.m_d2 == 0.0 ? 0.0 : cc.m_r * cc.m_d2;
    return kc.l_g * (term_r2 + term_d2) / kc.kappa_d;
}

} // namespace muonflow
