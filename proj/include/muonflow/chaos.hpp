#pragma once

#include "muonflow/objectives.hpp"
#include "muonflow/rng.hpp"

#include <cstdint>
#include <vector>

namespace muonflow {

struct ChaosConfig {
    std::vector<int> n_list = {8, 16, 32, 64, 128};
    int n_ref = 1024;
    double t_end = 2.0;
    double h_ode = 0.01;
    int n_seeds = 8;
    double eps = 1.0;
    double gamma = 1.0;
    double init_scale_pos = 0.35355339059327373; // 1/sqrt(8)
    double init_scale_mom = 0.35355339059327373;
    int threads = 1;
};

/// Synchronous coupling of the N-particle ODE against frozen mean-field
/// copies. A reference ensemble of n_ref i.i.d. states produces the surrogate
/// moment path; the N-particle system runs on the first N initial states and
/// the copies replay the reference stage moments on the same initials.
/// Returns the sup over step times of the mean squared phase error per
/// particle.
double coupled_error(const Objective& obj, const ChaosConfig& cfg, int n_particles,
                     std::uint64_t seed);

struct ChaosRateResult {
    double slope;
    double intercept;
    std::vector<int> n_list;
    std::vector<double> mean_error;                // per N, averaged over seeds
    std::vector<std::vector<double>> seed_errors;  // [N index][seed]
};

/// Averages coupled_error over seeds per N and fits log(error) against log(N).
ChaosRateResult chaos_rate(const Objective& obj, const ChaosConfig& cfg);

/// FNV-1a over the raw particle bytes; used to assert bit-identical shared
/// initial prefixes between the coupled systems.
std::uint64_t ensemble_hash(const Ensemble& ens);

} // namespace muonflow
