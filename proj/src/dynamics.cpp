#include "muonflow/dynamics.hpp"

#include "muonflow/errors.hpp"

#include <cmath>
#include <cstdio>

namespace muonflow {

UpdateRule UpdateRule::regularized_muon(double eps) {
    if (!(eps > 0.0))
        throw InvalidInputError("UpdateRule: regularized Muon requires eps > 0");
    UpdateRule r;
    r.kind = Kind::regularized;
    r.eps = eps;
    return r;
}

UpdateRule UpdateRule::hard_muon() {
    UpdateRule r;
    r.kind = Kind::hard;
    return r;
}

UpdateRule UpdateRule::newton_schulz_muon(int iters) {
    if (iters < 1)
        throw InvalidInputError("UpdateRule: Newton-Schulz requires iters >= 1");
    UpdateRule r;
    r.kind = Kind::newton_schulz;
    r.ns_iters = iters;
    return r;
}

UpdateRule UpdateRule::euclidean_momentum() {
    UpdateRule r;
    r.kind = Kind::euclidean;
    return r;
}

std::string UpdateRule::name() const {
    switch (kind) {
    case Kind::regularized: {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "regularized_eps_%.3g", eps);
        return buf;
    }
    case Kind::hard:
        return "hard";
    case Kind::newton_schulz:
        return "newton_schulz";
    case Kind::euclidean:
        return "euclidean";
    }
    return "unknown";
}

BlockPoint apply_rule(const UpdateRule& rule, const BlockPoint& p) {
    switch (rule.kind) {
    case UpdateRule::Kind::regularized:
        return block_orth_eps(p, EpsParam(rule.eps));
    case UpdateRule::Kind::hard:
        return block_orth_hard(p);
    case UpdateRule::Kind::newton_schulz:
        return block_newton_schulz5(p, rule.ns_iters);
    case UpdateRule::Kind::euclidean:
        return p;
    }
    throw InvalidInputError("apply_rule: unknown rule");
}

StepParams inertial_params(double h, double gamma) {
    if (!(h > 0.0) || !(gamma > 0.0) || !(gamma * h < 1.0))
        throw InvalidScalingError("inertial_params: require 0 < gamma*h < 1");
    return StepParams{h, 1.0 - gamma * h, gamma, h};
}

Ensemble discrete_step(const Objective& obj, const Ensemble& ens, const StepParams& sp,
                       const UpdateRule& rule) {
    const auto forces = obj.forces(ens);
    Ensemble next = ens;
    for (int i = 0; i < ens.n_particles; ++i) {
        BlockPoint& p = next.momenta[i];
        p *= sp.beta;
        p.axpy(1.0 - sp.beta, forces[i]);
        next.positions[i].axpy(-sp.eta, apply_rule(rule, p));
    }
    next.step = ens.step + 1;
    next.time = ens.time + sp.h;
    return next;
}

PhaseField ode_rhs(const Objective& obj, const Ensemble& ens, double gamma,
                   const UpdateRule& rule) {
    const auto forces = obj.forces(ens);
    PhaseField field;
    field.d_theta.reserve(ens.n_particles);
    field.d_momentum.reserve(ens.n_particles);
    for (int i = 0; i < ens.n_particles; ++i) {
        BlockPoint dth = apply_rule(rule, ens.momenta[i]);
        dth *= -1.0;
        field.d_theta.push_back(std::move(dth));
        BlockPoint dp = forces[i];
        dp -= ens.momenta[i];
        dp *= gamma;
        field.d_momentum.push_back(std::move(dp));
    }
    return field;
}

namespace {

void axpy_field(Ensemble& ens, double a, const PhaseField& f) {
    for (int i = 0; i < ens.n_particles; ++i) {
        ens.positions[i].axpy(a, f.d_theta[i]);
        ens.momenta[i].axpy(a, f.d_momentum[i]);
    }
}

} // namespace

void integrate_rk4_observed(const Objective& obj, Ensemble& ens, double gamma, double eps,
                            double h_ode, double t_end,
                            const std::function<void(const Ensemble&)>& observer) {
    if (!(h_ode > 0.0))
        throw InvalidInputError("integrate_rk4: h_ode must be positive");
    const UpdateRule rule = UpdateRule::regularized_muon(eps);
    const long n_steps = std::lround(t_end / h_ode);
    if (observer)
        observer(ens);
    for (long k = 0; k < n_steps; ++k) {
        const PhaseField k1 = ode_rhs(obj, ens, gamma, rule);
        Ensemble mid = ens;
        axpy_field(mid, 0.5 * h_ode, k1);
        const PhaseField k2 = ode_rhs(obj, mid, gamma, rule);
        mid = ens;
        axpy_field(mid, 0.5 * h_ode, k2);
        const PhaseField k3 = ode_rhs(obj, mid, gamma, rule);
        mid = ens;
        axpy_field(mid, h_ode, k3);
        const PhaseField k4 = ode_rhs(obj, mid, gamma, rule);

        axpy_field(ens, h_ode / 6.0, k1);
        axpy_field(ens, h_ode / 3.0, k2);
        axpy_field(ens, h_ode / 3.0, k3);
        axpy_field(ens, h_ode / 6.0, k4);
        ens.step += 1;
        ens.time += h_ode;
        if (!ens.is_finite())
            throw NonFiniteStateError("integrate_rk4: state became non-finite");
        if (observer)
            observer(ens);
    }
}

std::vector<Ensemble> integrate_rk4(const Objective& obj, Ensemble ens, double gamma, double eps,
                                    double h_ode, double t_end, int stride) {
    if (stride < 1)
        throw InvalidInputError("integrate_rk4: stride must be at least 1");
    std::vector<Ensemble> samples;
    const long n_steps = std::lround(t_end / h_ode);
    long seen = 0;
    integrate_rk4_observed(obj, ens, gamma, eps, h_ode, t_end,
                           [&](const Ensemble& state) {
                               const long k = seen++;
                               if (k % stride == 0 || k == n_steps)
                                   samples.push_back(state);
                           });
    return samples;
}

std::vector<double> ode_limit_check(const Objective& obj, const Ensemble& ens0, double gamma,
                                    double eps, double t_end, const std::vector<double>& h_list) {
    if (h_list.empty())
        throw InvalidInputError("ode_limit_check: empty h list");
    for (std::size_t k = 1; k < h_list.size(); ++k)
        if (!(h_list[k] < h_list[k - 1]))
            throw InvalidInputError("ode_limit_check: h list must be decreasing");

    if (t_end == 0.0)
        return std::vector<double>(h_list.size(), 0.0);

    Ensemble reference = ens0;
    const double h_ref = h_list.back() / 20.0;
    integrate_rk4_observed(obj, reference, gamma, eps, h_ref, t_end, nullptr);

    const UpdateRule rule = UpdateRule::regularized_muon(eps);
    std::vector<double> errors;
    errors.reserve(h_list.size());
    for (double h : h_list) {
        const StepParams sp = inertial_params(h, gamma);
        Ensemble ens = ens0;
        const long n_steps = std::lround(t_end / h);
        for (long k = 0; k < n_steps; ++k)
            ens = discrete_step(obj, ens, sp, rule);
        errors.push_back(phase_distance(ens, reference));
    }
    return errors;
}

EpsSweepResult eps_sweep(const Objective& obj, const Ensemble& ens0, const StepParams& sp,
                         const std::vector<double>& eps_list, int n_steps) {
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        if (!(eps_list[k] > 0.0))
            throw InvalidInputError("eps_sweep: eps values must be positive");
        if (k > 0 && !(eps_list[k] < eps_list[k - 1]))
            throw InvalidInputError("eps_sweep: eps list must be decreasing");
    }

    EpsSweepResult result;
    result.eps_values = eps_list;

    // Advance the hard run and every regularized run in lockstep so the
    // per-step divergence needs no stored trajectory.
    const UpdateRule hard_rule = UpdateRule::hard_muon();
    Ensemble hard = ens0;
    result.hard_objective_trace.push_back(obj.value(hard));

    std::vector<Ensemble> runs(eps_list.size(), ens0);
    result.objective_trace.assign(eps_list.size(), {result.hard_objective_trace.front()});
    result.divergence_from_hard.assign(eps_list.size(), 0.0);

    for (int k = 0; k < n_steps; ++k) {
        hard = discrete_step(obj, hard, sp, hard_rule);
        result.hard_objective_trace.push_back(obj.value(hard));
        for (std::size_t e = 0; e < eps_list.size(); ++e) {
            runs[e] = discrete_step(obj, runs[e], sp,
                                    UpdateRule::regularized_muon(eps_list[e]));
            result.objective_trace[e].push_back(obj.value(runs[e]));
            result.divergence_from_hard[e] =
                std::max(result.divergence_from_hard[e], phase_distance(runs[e], hard));
        }
    }
    result.hard_final_objective = result.hard_objective_trace.back();
    for (std::size_t e = 0; e < eps_list.size(); ++e)
        result.final_objective.push_back(result.objective_trace[e].back());
    result.final_ensembles = std::move(runs);
    return result;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidInputError("least_squares_slope: need at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0)
        throw InvalidInputError("least_squares_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

} // namespace muonflow
