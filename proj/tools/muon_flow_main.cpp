#include "muonflow/errors.hpp"
#include "muonflow/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>

namespace {

using namespace muonflow;

bool check_near(const char* what, double got, double want, double tol, int& failures) {
    const bool ok = std::abs(got - want) <= tol;
    std::printf("[%s] %s (got %.6g, want %.6g, tol %.1g)\n", ok ? "ok" : "FAIL", what, got, want,
                tol);
    if (!ok)
        ++failures;
    return ok;
}

bool check_true(const char* what, bool ok, int& failures) {
    std::printf("[%s] %s\n", ok ? "ok" : "FAIL", what);
    if (!ok)
        ++failures;
    return ok;
}

// Quick property/oracle suite for `muon-flow check`.
int run_self_check() {
    int failures = 0;
    RngStream rng(7);

    // Fenchel equality and mirror round trip on random matrices.
    double worst_fenchel = 0.0, worst_mirror = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix p = gaussian_matrix(rng, 8, 4, 1.0);
        for (double eps : {0.1, 1.0}) {
            const EpsParam e(eps);
            const Matrix g = orth_eps(p, e);
            worst_fenchel = std::max(worst_fenchel, std::abs(psi_eps(p, e) + phi_eps(g, e) -
                                                             dissipation_density(p, e)));
            const Matrix back = grad_phi_eps(g, e);
            worst_mirror =
                std::max(worst_mirror, frobenius_norm(back - p) / frobenius_norm(p));
        }
    }
    check_true("fenchel equality within 1e-9", worst_fenchel <= 1e-9, failures);
    check_true("mirror round trip within 1e-8", worst_mirror <= 1e-8, failures);

    // Nuclear-norm duality.
    double worst_dual = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix p = gaussian_matrix(rng, 8, 4, 1.0);
        worst_dual = std::max(worst_dual,
                              std::abs(frobenius_inner(p, orth_hard(p)) - norms(p).nuc));
    }
    check_true("duality <P, Orth(P)> = nuclear norm within 1e-9", worst_dual <= 1e-9, failures);

    // Force-gradient oracle on all three objectives.
    {
        RngStream r2 = rng.substream(1);
        Matrix target = gaussian_matrix(r2, 6, 4, 0.5);
        MeanMatchObjective mm(MeanMatchSpec{6, 4, std::move(target)});
        std::vector<BlockPoint> pos, mom;
        for (int i = 0; i < 3; ++i) {
            pos.push_back(BlockPoint({gaussian_matrix(r2, 6, 4, 0.5)}));
            mom.push_back(BlockPoint({Matrix(6, 4)}));
        }
        check_true("mean-match forces match finite differences",
                   fd_force_check(mm, Ensemble(pos, mom)) <= 1e-6, failures);
    }
    {
        RngStream r2 = rng.substream(2);
        auto data = make_teacher_student(5, 3, 2, 12, 2, r2);
        TeacherStudentObjective ts(std::move(data.spec));
        std::vector<BlockPoint> pos, mom;
        for (int i = 0; i < 3; ++i) {
            Matrix a = gaussian_matrix(r2, 2, 3, 0.3);
            Matrix b = gaussian_matrix(r2, 3, 5, 0.3);
            pos.push_back(BlockPoint(std::vector<Matrix>{std::move(a), std::move(b)}));
            mom.push_back(BlockPoint(std::vector<Matrix>{Matrix(2, 3), Matrix(3, 5)}));
        }
        check_true("teacher-student forces match finite differences",
                   fd_force_check(ts, Ensemble(pos, mom)) <= 1e-6, failures);
    }
    {
        RngStream r2 = rng.substream(3);
        GatedMoeObjective moe(make_gated_moe(4, 3, 8, r2));
        std::vector<BlockPoint> pos, mom;
        for (int i = 0; i < 3; ++i) {
            Matrix omega = gaussian_matrix(r2, 4, 3, 0.5);
            Matrix g = gaussian_matrix(r2, 4, 1, 0.5);
            pos.push_back(BlockPoint(std::vector<Matrix>{std::move(omega), std::move(g)}));
            mom.push_back(BlockPoint(std::vector<Matrix>{Matrix(4, 3), Matrix(4, 1)}));
        }
        check_true("gated-MoE forces match finite differences",
                   fd_force_check(moe, Ensemble(pos, mom)) <= 1e-6, failures);
    }

    // Rate calculators against hand substitutions.
    {
        RateInputs ri{1.0, 0.5, 1.0, 0.0, 1.0, 1.0, KineticConstants{1.0, 1.0, 1.0, 1.0}};
        const auto cr = continuous_rate(ri);
        check_near("continuous rate c", cr.c_ar, 1.0 / 3.0, 1e-12, failures);
        const auto dr = discrete_rate(ri, 0.1, 0.0);
        check_near("discrete rate d_h", dr.d_h, 2.0 / 3.0, 1e-12, failures);
    }
    return failures;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regularized Muon particle dynamics"};
    app.require_subcommand(1);

    muonflow::ExperimentConfig cfg;
    std::string config_path;

    auto* run = app.add_subcommand("run", "run an experiment preset");
    run->add_option("--preset", cfg.preset, "exp1 | exp2 | eps_sweep | chaos | custom");
    run->add_option("--config", config_path, "flat key = value config file");
    run->add_option("--seed", cfg.seed, "RNG seed");
    run->add_option("--out-dir", cfg.out_dir, "output directory");
    run->add_option("--stride", cfg.record_stride, "record every k-th step");
    run->add_option("--iters", cfg.iters, "iteration count override");
    run->add_option("--m", cfg.m_targets, "target/teacher particle count");
    run->add_option("--n", cfg.n_particles, "approximation particle count");
    run->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");

    auto* check = app.add_subcommand("check", "run the property/oracle self-checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) {
            const int failures = run_self_check();
            if (failures > 0) {
                std::fprintf(stderr, "%d self-check(s) failed\n", failures);
                return 2;
            }
            std::printf("all self-checks passed\n");
            return 0;
        }
        if (!config_path.empty()) {
            // CLI flags take precedence over file values.
            muonflow::ExperimentConfig from_file = muonflow::read_config_file(config_path);
            for (const auto* opt : run->get_options()) {
                if (opt->count() == 0)
                    continue;
                const std::string name = opt->get_name();
                if (name == "--preset")
                    from_file.preset = cfg.preset;
                else if (name == "--seed")
                    from_file.seed = cfg.seed;
                else if (name == "--out-dir")
                    from_file.out_dir = cfg.out_dir;
                else if (name == "--stride")
                    from_file.record_stride = cfg.record_stride;
                else if (name == "--iters")
                    from_file.iters = cfg.iters;
                else if (name == "--m")
                    from_file.m_targets = cfg.m_targets;
                else if (name == "--n")
                    from_file.n_particles = cfg.n_particles;
                else if (name == "--threads")
                    from_file.threads = cfg.threads;
            }
            cfg = from_file;
        }
        const auto outcome = muonflow::run_preset(cfg);
        std::printf("wrote %zu CSV file(s) under %s\n", outcome.csv_paths.size(),
                    cfg.out_dir.c_str());
        if (outcome.any_nonfinite) {
            std::fprintf(stderr, "warning: at least one run aborted on a non-finite state\n");
            return 2;
        }
        return 0;
    } catch (const muonflow::IoError& err) {
        std::fprintf(stderr, "io error: %s\n", err.what());
        return 3;
    } catch (const muonflow::Error& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 2;
    }
}
