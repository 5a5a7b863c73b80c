#pragma once

#include "muonflow/chaos.hpp"
#include "muonflow/diagnostics.hpp"
#include "muonflow/dynamics.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace muonflow {

struct ExperimentConfig {
    std::string preset = "exp1"; // exp1 | exp2 | eps_sweep | chaos | custom
    int m_targets = -1;          // -1 selects the preset defaults
    int n_particles = -1;
    long iters = -1;
    double h = 0.01;
    double gamma = 1.0;
    double alpha = 0.01;
    int ns_iters = 5;
    std::vector<double> eps_list; // empty selects the preset defaults
    std::vector<std::string> rules = {"regularized", "hard", "newton_schulz", "euclidean"};
    std::uint64_t seed = 0;
    int record_stride = 1;
    std::string out_dir = "runs/out";
    int threads = 0; // 0 = hardware concurrency

    // eps_sweep extras
    int sweep_steps = 1000;

    // chaos extras
    std::vector<int> chaos_n_list = {8, 16, 32, 64, 128};
    int chaos_n_ref = 1024;
    double chaos_t_end = 2.0;
    double chaos_h_ode = 0.01;
    int chaos_seeds = 8;
    double chaos_eps = 1.0;
};

/// Flat `key = value` file, lists comma-separated, '#' comments.
ExperimentConfig read_config_file(const std::string& path, ExperimentConfig base = {});
void write_config_file(const ExperimentConfig& cfg, const std::string& path);

/// Instrumented discrete run: diagnostics records at the stride (plus the
/// first and last step), running max momentum norm, and partial results when
/// the state leaves the finite range.
struct RunResult {
    std::vector<DiagnosticsRecord> records;
    Ensemble final_state;
    double max_momentum_norm = 0.0;
    long steps_completed = 0;
    bool nonfinite_abort = false;
    bool moment_flag = false;
};

RunResult run_discrete(const Objective& obj, const Ensemble& ens0, const StepParams& sp,
                       const UpdateRule& rule, long n_steps, int record_stride, double diag_eps,
                       double alpha, double j_star,
                       const std::function<void(const Ensemble&)>& observer = nullptr);

/// CSV with header step,t,J,K,D,A,C,U,H,L at full double precision; the
/// companion reader round-trips bit-exactly.
void write_csv(const std::vector<DiagnosticsRecord>& records, const std::string& path);
std::vector<DiagnosticsRecord> read_csv(const std::string& path);

struct PlotSeries {
    std::string label;
    std::vector<double> t;
    std::vector<double> value;
};

/// Static SVG line plot with axes and a legend. With log_y, every value must
/// be strictly positive.
void write_plot(const std::vector<PlotSeries>& series, const std::string& path, bool log_y,
                const std::string& title = "", const std::string& x_label = "t",
                const std::string& y_label = "");

struct CellSummary {
    std::string rule;
    double eps = 0.0; // 0 for rules without a regularization scale
    double final_j = 0.0;
    double final_h = 0.0;
    double max_p_norm = 0.0;
    long steps = 0;
};

struct PresetOutcome {
    std::vector<std::string> csv_paths;
    std::vector<CellSummary> summaries;
    bool any_nonfinite = false;
};

/// Builds the preset's objective and initial data, runs every configured rule
/// cell (in parallel), and writes per-rule CSVs, summary.csv, plots, and a
/// config echo under cfg.out_dir.
PresetOutcome run_preset(const ExperimentConfig& cfg);

/// Initial data builders; the draw order (targets/teachers, then particles,
/// then inputs) is fixed so runs are reproducible from the seed alone.
struct Exp1Setup {
    MeanMatchSpec spec;
    Ensemble initial;
};
Exp1Setup make_exp1_setup(int m_targets, int n_particles, std::uint64_t seed);

struct Exp2Setup {
    TeacherStudentSpec spec;
    Ensemble initial;
};
Exp2Setup make_exp2_setup(int m_teachers, int n_particles, std::uint64_t seed);

} // namespace muonflow
