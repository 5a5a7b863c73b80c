#include "muonflow/chaos.hpp"

#include "muonflow/dynamics.hpp"
#include "muonflow/errors.hpp"
#include "muonflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>

namespace muonflow {

namespace {

struct PhaseState {
    std::vector<BlockPoint> theta;
    std::vector<BlockPoint> p;

    void axpy(double a, const PhaseState& x) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            theta[i].axpy(a, x.theta[i]);
            p[i].axpy(a, x.p[i]);
        }
    }
};

// d/dt of (theta, p) given the moment that drives the force field.
PhaseState field_at(const Objective& obj, const PhaseState& state,
                    const std::vector<double>& m, double gamma, const EpsParam& eps) {
    Ensemble view(state.theta, state.p);
    const auto forces = obj.forces_at(view, m);
    PhaseState out;
    out.theta.reserve(state.theta.size());
    out.p.reserve(state.p.size());
    for (std::size_t i = 0; i < state.theta.size(); ++i) {
        BlockPoint dth = block_orth_eps(state.p[i], eps);
        dth *= -1.0;
        out.theta.push_back(std::move(dth));
        BlockPoint dp = forces[i];
        dp -= state.p[i];
        dp *= gamma;
        out.p.push_back(std::move(dp));
    }
    return out;
}

// One RK4 step where each stage's moment comes from `moment_of`; the callback
// either computes the moment from the stage state (self-consistent run) or
// replays a recorded one (frozen copies).
void rk4_step(const Objective& obj, PhaseState& state, double h, double gamma,
              const EpsParam& eps,
              const std::function<std::vector<double>(int, const PhaseState&)>& moment_of) {
    const PhaseState k1 = field_at(obj, state, moment_of(0, state), gamma, eps);
    PhaseState mid = state;
    mid.axpy(0.5 * h, k1);
    const PhaseState k2 = field_at(obj, mid, moment_of(1, mid), gamma, eps);
    mid = state;
    mid.axpy(0.5 * h, k2);
    const PhaseState k3 = field_at(obj, mid, moment_of(2, mid), gamma, eps);
    mid = state;
    mid.axpy(h, k3);
    const PhaseState k4 = field_at(obj, mid, moment_of(3, mid), gamma, eps);
    state.axpy(h / 6.0, k1);
    state.axpy(h / 3.0, k2);
    state.axpy(h / 3.0, k3);
    state.axpy(h / 6.0, k4);
}

std::vector<double> moment_of_state(const Objective& obj, const PhaseState& state) {
    return obj.moment(Ensemble(state.theta, state.p));
}

double mean_sq_phase_error(const PhaseState& a, const PhaseState& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.theta.size(); ++i) {
        const double dth = block_norm(a.theta[i] - b.theta[i]);
        const double dp = block_norm(a.p[i] - b.p[i]);
        s += dth * dth + dp * dp;
    }
    return s / static_cast<double>(a.theta.size());
}

void validate(const ChaosConfig& cfg) {
    if (cfg.n_list.empty() || cfg.n_ref <= 0 || !(cfg.t_end >= 0.0) || !(cfg.h_ode > 0.0) ||
        cfg.n_seeds <= 0 || !(cfg.eps > 0.0) || !(cfg.gamma > 0.0))
        throw InvalidConfigError("chaos: nonpositive configuration entry");
    const int n_max = *std::max_element(cfg.n_list.begin(), cfg.n_list.end());
    if (cfg.n_ref < 8 * n_max)
        throw InvalidConfigError("chaos: n_ref must be at least 8x the largest N");
}

PhaseState draw_states(const Objective& obj, const ChaosConfig& cfg, int count, RngStream& rng) {
    const BlockShape shape = obj.shape();
    PhaseState out;
    out.theta.reserve(count);
    out.p.reserve(count);
    for (int i = 0; i < count; ++i) {
        std::vector<Matrix> pos, mom;
        for (auto [r, c] : shape.dims)
            pos.push_back(gaussian_matrix(rng, r, c, cfg.init_scale_pos));
        for (auto [r, c] : shape.dims)
            mom.push_back(gaussian_matrix(rng, r, c, cfg.init_scale_mom));
        out.theta.push_back(BlockPoint(std::move(pos)));
        out.p.push_back(BlockPoint(std::move(mom)));
    }
    return out;
}

PhaseState prefix(const PhaseState& full, int count) {
    PhaseState out;
    out.theta.assign(full.theta.begin(), full.theta.begin() + count);
    out.p.assign(full.p.begin(), full.p.begin() + count);
    return out;
}

// The surrogate mean-field law for one seed: i.i.d. initial states plus the
// recorded per-stage moment path of the n_ref reference system.
struct SeedReference {
    PhaseState initial;
    std::vector<std::vector<double>> stage_moments; // 4 per step
    long n_steps;
};

SeedReference make_reference(const Objective& obj, const ChaosConfig& cfg, std::uint64_t seed) {
    RngStream rng = RngStream(seed).substream(0x9c0c);
    SeedReference ref;
    ref.initial = draw_states(obj, cfg, cfg.n_ref, rng);
    ref.n_steps = std::lround(cfg.t_end / cfg.h_ode);
    ref.stage_moments.reserve(4 * ref.n_steps);
    const EpsParam eps(cfg.eps);
    PhaseState state = ref.initial;
    for (long k = 0; k < ref.n_steps; ++k)
        rk4_step(obj, state, cfg.h_ode, cfg.gamma, eps,
                 [&](int, const PhaseState& s) {
                     auto m = moment_of_state(obj, s);
                     ref.stage_moments.push_back(m);
                     return m;
                 });
    return ref;
}

double coupled_error_against(const Objective& obj, const ChaosConfig& cfg, int n_particles,
                             const SeedReference& ref) {
    if (n_particles <= 0 || n_particles > cfg.n_ref)
        throw InvalidConfigError("coupled_error: N must lie in [1, n_ref]");

    PhaseState interacting = prefix(ref.initial, n_particles);
    PhaseState copies = prefix(ref.initial, n_particles);
    if (ensemble_hash(Ensemble(interacting.theta, interacting.p)) !=
        ensemble_hash(Ensemble(copies.theta, copies.p)))
        throw InvalidConfigError("coupled_error: shared initial prefix mismatch");

    const EpsParam eps(cfg.eps);
    double sup_err = 0.0;
    for (long k = 0; k < ref.n_steps; ++k) {
        rk4_step(obj, interacting, cfg.h_ode, cfg.gamma, eps,
                 [&](int, const PhaseState& s) { return moment_of_state(obj, s); });
        rk4_step(obj, copies, cfg.h_ode, cfg.gamma, eps,
                 [&](int stage, const PhaseState&) { return ref.stage_moments[4 * k + stage]; });
        sup_err = std::max(sup_err, mean_sq_phase_error(interacting, copies));
    }
    return sup_err;
}

} // namespace

double coupled_error(const Objective& obj, const ChaosConfig& cfg, int n_particles,
                     std::uint64_t seed) {
    validate(cfg);
    const SeedReference ref = make_reference(obj, cfg, seed);
    return coupled_error_against(obj, cfg, n_particles, ref);
}

ChaosRateResult chaos_rate(const Objective& obj, const ChaosConfig& cfg) {
    validate(cfg);
    if (cfg.n_list.size() < 4)
        throw InvalidConfigError("chaos_rate: need at least four N values");

    ChaosRateResult out;
    out.n_list = cfg.n_list;
    out.seed_errors.assign(cfg.n_list.size(), std::vector<double>(cfg.n_seeds, 0.0));

    // Seeds are independent cells; the reference run is computed once per seed
    // and shared read-only by all N values.
    parallel_for(static_cast<std::size_t>(cfg.n_seeds), cfg.threads, [&](std::size_t seed) {
        const SeedReference ref = make_reference(obj, cfg, seed);
        for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni)
            out.seed_errors[ni][seed] =
                coupled_error_against(obj, cfg, cfg.n_list[ni], ref);
    });

    std::vector<double> log_n, log_err;
    for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
        double mean = 0.0;
        for (double e : out.seed_errors[ni])
            mean += e;
        mean /= cfg.n_seeds;
        out.mean_error.push_back(mean);
        log_n.push_back(std::log(static_cast<double>(cfg.n_list[ni])));
        log_err.push_back(std::log(mean));
    }
    out.slope = least_squares_slope(log_n, log_err);
    double sum = 0.0;
    for (std::size_t k = 0; k < log_n.size(); ++k)
        sum += log_err[k] - out.slope * log_n[k];
    out.intercept = sum / static_cast<double>(log_n.size());
    return out;
}

std::uint64_t ensemble_hash(const Ensemble& ens) {
    std::uint64_t h = 1469598103934665603ULL;
    auto absorb = [&h](const BlockPoint& bp) {
        for (int b = 0; b < bp.block_count(); ++b)
            for (double x : bp.block(b).entries()) {
                std::uint64_t bits;
                std::memcpy(&bits, &x, sizeof(bits));
                for (int byte = 0; byte < 8; ++byte) {
                    h ^= (bits >> (8 * byte)) & 0xff;
                    h *= 1099511628211ULL;
                }
            }
    };
    for (const auto& p : ens.positions)
        absorb(p);
    for (const auto& p : ens.momenta)
        absorb(p);
    return h;
}

} // namespace muonflow
