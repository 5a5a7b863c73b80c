#pragma once

#include "muonflow/block.hpp"
#include "muonflow/objectives.hpp"

#include <functional>
#include <string>
#include <vector>

namespace muonflow {

/// Momentum-to-update map G(P) used by the discrete scheme.
struct UpdateRule {
    enum class Kind { regularized, hard, newton_schulz, euclidean };

    Kind kind = Kind::regularized;
    double eps = 1.0;
    int ns_iters = 5;

    static UpdateRule regularized_muon(double eps);
    static UpdateRule hard_muon();
    static UpdateRule newton_schulz_muon(int iters = 5);
    static UpdateRule euclidean_momentum();

    std::string name() const;
};

/// Applies the rule's map G to a block momentum.
BlockPoint apply_rule(const UpdateRule& rule, const BlockPoint& p);

/// Step parameters under the inertial scaling eta = h, beta = 1 - gamma h.
struct StepParams {
    double eta;
    double beta;
    double gamma;
    double h;
};

/// Throws InvalidScalingError unless 0 < gamma h < 1.
StepParams inertial_params(double h, double gamma);

/// One step of the finite-particle scheme: momentum first from forces at the
/// current positions, then positions move along -eta G(P+).
Ensemble discrete_step(const Objective& obj, const Ensemble& ens, const StepParams& sp,
                       const UpdateRule& rule);

struct PhaseField {
    std::vector<BlockPoint> d_theta;
    std::vector<BlockPoint> d_momentum;
};

/// dtheta_i = -G(P_i), dP_i = gamma (a_i - P_i).
PhaseField ode_rhs(const Objective& obj, const Ensemble& ens, double gamma,
                   const UpdateRule& rule);

/// Classical fourth-order integrator for the smooth (regularized) field.
/// Invokes the observer on the initial state and after every step; throws
/// NonFiniteStateError if the state leaves the finite range.
void integrate_rk4_observed(const Objective& obj, Ensemble& ens, double gamma, double eps,
                            double h_ode, double t_end,
                            const std::function<void(const Ensemble&)>& observer);

/// Same integrator returning states sampled every `stride` steps (plus endpoints).
std::vector<Ensemble> integrate_rk4(const Objective& obj, Ensemble ens, double gamma, double eps,
                                    double h_ode, double t_end, int stride = 1);

/// Endpoint errors of the discrete scheme against a fine RK4 reference
/// (h_ode = min(h)/20), one entry per h in h_list; errors scale like O(h).
std::vector<double> ode_limit_check(const Objective& obj, const Ensemble& ens0, double gamma,
                                    double eps, double t_end, const std::vector<double>& h_list);

struct EpsSweepResult {
    std::vector<double> eps_values;
    std::vector<double> final_objective;           // per eps
    std::vector<double> divergence_from_hard;      // max phase distance per eps
    std::vector<std::vector<double>> objective_trace; // per eps, J at every step
    std::vector<Ensemble> final_ensembles;         // per eps
    double hard_final_objective = 0.0;
    std::vector<double> hard_objective_trace;
};

/// Runs regularized Muon for each eps plus one hard-Muon run from the same
/// initial state; eps_list must be positive and decreasing.
EpsSweepResult eps_sweep(const Objective& obj, const Ensemble& ens0, const StepParams& sp,
                         const std::vector<double>& eps_list, int n_steps);

/// Least-squares slope of y against x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace muonflow
