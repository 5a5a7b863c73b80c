#include "muonflow/harness.hpp"

#include "muonflow/errors.hpp"
#include "muonflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <thread>

namespace muonflow {

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::string> split(const std::string& s, char delim) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, delim))
        out.push_back(item);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& tok : split(s, ','))
        if (!trim(tok).empty())
            out.push_back(std::stod(trim(tok)));
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& tok : split(s, ','))
        if (!trim(tok).empty())
            out.push_back(std::stoi(trim(tok)));
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k)
            out += ",";
        out += fmt17(v[k]);
    }
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k)
            out += ",";
        out += std::to_string(v[k]);
    }
    return out;
}

std::string join_strings(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k)
            out += ",";
        out += v[k];
    }
    return out;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec)
        throw IoError("cannot create directory " + path + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// configuration

ExperimentConfig read_config_file(const std::string& path, ExperimentConfig cfg) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidConfigError(path + ": line " + std::to_string(lineno) +
                                     " is not key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "preset")
            cfg.preset = val;
        else if (key == "m")
            cfg.m_targets = std::stoi(val);
        else if (key == "n")
            cfg.n_particles = std::stoi(val);
        else if (key == "iters")
            cfg.iters = std::stol(val);
        else if (key == "h")
            cfg.h = std::stod(val);
        else if (key == "gamma")
            cfg.gamma = std::stod(val);
        else if (key == "alpha")
            cfg.alpha = std::stod(val);
        else if (key == "ns_iters")
            cfg.ns_iters = std::stoi(val);
        else if (key == "eps_list")
            cfg.eps_list = parse_double_list(val);
        else if (key == "rules")
            cfg.rules = split(val, ',');
        else if (key == "seed")
            cfg.seed = std::stoull(val);
        else if (key == "stride")
            cfg.record_stride = std::stoi(val);
        else if (key == "out_dir")
            cfg.out_dir = val;
        else if (key == "threads")
            cfg.threads = std::stoi(val);
        else if (key == "sweep_steps")
            cfg.sweep_steps = std::stoi(val);
        else if (key == "chaos_n_list")
            cfg.chaos_n_list = parse_int_list(val);
        else if (key == "chaos_n_ref")
            cfg.chaos_n_ref = std::stoi(val);
        else if (key == "chaos_t_end")
            cfg.chaos_t_end = std::stod(val);
        else if (key == "chaos_h_ode")
            cfg.chaos_h_ode = std::stod(val);
        else if (key == "chaos_seeds")
            cfg.chaos_seeds = std::stoi(val);
        else if (key == "chaos_eps")
            cfg.chaos_eps = std::stod(val);
        else
            throw InvalidConfigError(path + ": unknown key '" + key + "'");
    }
    for (auto& r : cfg.rules)
        r = trim(r);
    return cfg;
}

void write_config_file(const ExperimentConfig& cfg, const std::string& path) {
    auto out = open_out(path);
    out << "preset = " << cfg.preset << "\n";
    out << "m = " << cfg.m_targets << "\n";
    out << "n = " << cfg.n_particles << "\n";
    out << "iters = " << cfg.iters << "\n";
    out << "h = " << fmt17(cfg.h) << "\n";
    out << "gamma = " << fmt17(cfg.gamma) << "\n";
    out << "alpha = " << fmt17(cfg.alpha) << "\n";
    out << "ns_iters = " << cfg.ns_iters << "\n";
    out << "eps_list = " << join_doubles(cfg.eps_list) << "\n";
    out << "rules = " << join_strings(cfg.rules) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "stride = " << cfg.record_stride << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "sweep_steps = " << cfg.sweep_steps << "\n";
    out << "chaos_n_list = " << join_ints(cfg.chaos_n_list) << "\n";
    out << "chaos_n_ref = " << cfg.chaos_n_ref << "\n";
    out << "chaos_t_end = " << fmt17(cfg.chaos_t_end) << "\n";
    out << "chaos_h_ode = " << fmt17(cfg.chaos_h_ode) << "\n";
    out << "chaos_seeds = " << cfg.chaos_seeds << "\n";
    out << "chaos_eps = " << fmt17(cfg.chaos_eps) << "\n";
    if (!out)
        throw IoError("failed writing config echo to " + path);
}

// ---------------------------------------------------------------------------
// instrumented discrete runner

RunResult run_discrete(const Objective& obj, const Ensemble& ens0, const StepParams& sp,
                       const UpdateRule& rule, long n_steps, int record_stride, double diag_eps,
                       double alpha, double j_star,
                       const std::function<void(const Ensemble&)>& observer) {
    if (record_stride < 1)
        throw InvalidInputError("run_discrete: record stride must be at least 1");
    RunResult res;
    Ensemble ens = ens0;

    auto track = [&](const Ensemble& state) {
        for (const auto& p : state.momenta)
            res.max_momentum_norm = std::max(res.max_momentum_norm, block_norm(p));
    };
    auto record_finite = [&](const Ensemble& state) {
        const DiagnosticsRecord rec = energies(obj, state, diag_eps, sp.gamma, alpha, j_star);
        // diagnostics can overflow before the raw entries do
        if (!std::isfinite(rec.J) || !std::isfinite(rec.K) || !std::isfinite(rec.A) ||
            !std::isfinite(rec.C) || !std::isfinite(rec.D)) {
            res.nonfinite_abort = true;
            return false;
        }
        res.records.push_back(rec);
        res.moment_flag = res.moment_flag || obj.moment_flag(obj.moment(state));
        if (observer)
            observer(state);
        return true;
    };

    track(ens);
    if (!record_finite(ens)) {
        res.final_state = std::move(ens);
        return res;
    }
    for (long k = 0; k < n_steps; ++k) {
        Ensemble next = discrete_step(obj, ens, sp, rule);
        if (!next.is_finite()) {
            res.nonfinite_abort = true;
            break;
        }
        ens = std::move(next);
        track(ens);
        if ((ens.step % record_stride == 0 || k + 1 == n_steps) && !record_finite(ens))
            break;
        res.steps_completed = k + 1;
    }
    res.final_state = std::move(ens);
    return res;
}

// ---------------------------------------------------------------------------
// CSV

void write_csv(const std::vector<DiagnosticsRecord>& records, const std::string& path) {
    auto out = open_out(path);
    out << "step,t,J,K,D,A,C,U,H,L\n";
    for (const auto& r : records) {
        out << r.step << ',' << fmt17(r.t) << ',' << fmt17(r.J) << ',' << fmt17(r.K) << ','
            << fmt17(r.D) << ',' << fmt17(r.A) << ',' << fmt17(r.C) << ',' << fmt17(r.U) << ','
            << fmt17(r.H) << ',' << fmt17(r.L) << '\n';
    }
    if (!out)
        throw IoError("failed writing " + path);
}

std::vector<DiagnosticsRecord> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "step,t,J,K,D,A,C,U,H,L")
        throw IoError(path + ": unexpected CSV header");
    std::vector<DiagnosticsRecord> records;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        const auto cells = split(line, ',');
        if (cells.size() != 10)
            throw IoError(path + ": malformed CSV row");
        DiagnosticsRecord r;
        r.step = std::stol(cells[0]);
        r.t = std::stod(cells[1]);
        r.J = std::stod(cells[2]);
        r.K = std::stod(cells[3]);
        r.D = std::stod(cells[4]);
        r.A = std::stod(cells[5]);
        r.C = std::stod(cells[6]);
        r.U = std::stod(cells[7]);
        r.H = std::stod(cells[8]);
        r.L = std::stod(cells[9]);
        records.push_back(r);
    }
    return records;
}

// ---------------------------------------------------------------------------
// SVG plots

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt_tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

} // namespace

void write_plot(const std::vector<PlotSeries>& series, const std::string& path, bool log_y,
                const std::string& title, const std::string& x_label,
                const std::string& y_label) {
    if (series.empty())
        throw InvalidInputError("write_plot: no series");
    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& s : series) {
        if (s.t.size() != s.value.size() || s.t.empty())
            throw InvalidInputError("write_plot: series sizes mismatch or empty");
        for (std::size_t k = 0; k < s.t.size(); ++k) {
            double y = s.value[k];
            if (log_y) {
                if (!(y > 0.0))
                    throw NonPositiveForLogError("write_plot: nonpositive value on log axis");
                y = std::log10(y);
            }
            x_min = std::min(x_min, s.t[k]);
            x_max = std::max(x_max, s.t[k]);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (x_max <= x_min)
        x_max = x_min + 1.0;
    if (y_max <= y_min)
        y_max = y_min + 1.0;

    const double w = 900, hgt = 560, ml = 90, mr = 220, mt = 50, mb = 60;
    const double pw = w - ml - mr, ph = hgt - mt - mb;
    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
    auto py = [&](double y) { return mt + ph - (y - y_min) / (y_max - y_min) * ph; };

    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << hgt
        << "\" viewBox=\"0 0 " << w << " " << hgt << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";

    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double x = x_min + (x_max - x_min) * k / 5.0;
        out << "<line x1=\"" << px(x) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(x)
            << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << px(x) << "\" y=\"" << mt + ph + 20
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_tick(x) << "</text>\n";
    }
    const int y_ticks = 6;
    for (int k = 0; k <= y_ticks; ++k) {
        const double y = y_min + (y_max - y_min) * k / y_ticks;
        out << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(y) << "\" x2=\"" << ml << "\" y2=\""
            << py(y) << "\" stroke=\"black\"/>\n";
        const std::string label = log_y ? ("1e" + fmt_tick(y)) : fmt_tick(y);
        out << "<text x=\"" << ml - 9 << "\" y=\"" << py(y) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << label << "</text>\n";
    }
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << hgt - 14
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    out << "<text x=\"22\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 22 "
        << mt + ph / 2 << ")\">" << y_label << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % 8];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < series[si].t.size(); ++k) {
            const double y = log_y ? std::log10(series[si].value[k]) : series[si].value[k];
            out << px(series[si].t[k]) << ',' << py(y) << ' ';
        }
        out << "\"/>\n";
        const double ly = mt + 16 + 18.0 * si;
        out << "<line x1=\"" << ml + pw + 14 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 40
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << ml + pw + 46 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
            << series[si].label << "</text>\n";
    }
    out << "</svg>\n";
    if (!out)
        throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// initial data

Exp1Setup make_exp1_setup(int m_targets, int n_particles, std::uint64_t seed) {
    const int rows = 16, cols = 8;
    const double scale = 1.0 / std::sqrt(8.0);
    RngStream rng(seed);

    // Draw order: targets first, then particles in index order.
    Matrix target(rows, cols);
    for (int j = 0; j < m_targets; ++j)
        target += gaussian_matrix(rng, rows, cols, scale);
    target *= 1.0 / m_targets;

    std::vector<BlockPoint> positions, momenta;
    for (int i = 0; i < n_particles; ++i) {
        positions.push_back(BlockPoint({gaussian_matrix(rng, rows, cols, scale)}));
        momenta.push_back(BlockPoint({Matrix(rows, cols)}));
    }

    Exp1Setup setup;
    setup.spec = MeanMatchSpec{rows, cols, std::move(target)};
    setup.initial = Ensemble(std::move(positions), std::move(momenta));
    return setup;
}

Exp2Setup make_exp2_setup(int m_teachers, int n_particles, std::uint64_t seed) {
    const int d = 10, r = 6, p = 4, S = 320;
    const double student_scale = 0.1;
    RngStream rng(seed);

    // Draw order: teachers, then students in index order, then inputs.
    const auto teachers = draw_teachers(rng, m_teachers, d, r, p);
    std::vector<BlockPoint> positions, momenta;
    for (int i = 0; i < n_particles; ++i) {
        Matrix a = gaussian_matrix(rng, p, r, student_scale);
        Matrix b = gaussian_matrix(rng, r, d, student_scale);
        positions.push_back(BlockPoint(std::vector<Matrix>{std::move(a), std::move(b)}));
        momenta.push_back(BlockPoint(std::vector<Matrix>{Matrix(p, r), Matrix(r, d)}));
    }
    const auto inputs = draw_inputs(rng, S, d);

    Exp2Setup setup;
    setup.spec.d = d;
    setup.spec.r = r;
    setup.spec.p = p;
    setup.spec.s_samples = S;
    setup.spec.inputs = inputs;
    setup.spec.targets = teacher_targets(teachers, inputs, d, r, p);
    setup.initial = Ensemble(std::move(positions), std::move(momenta));
    return setup;
}

// ---------------------------------------------------------------------------
// presets

namespace {

struct RuleCell {
    UpdateRule rule;
    double diag_eps; // 0 selects the hard (nuclear) kinetic for diagnostics
    std::string tag;
};

std::string eps_tag(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0e", eps);
    return buf;
}

std::vector<RuleCell> build_cells(const ExperimentConfig& cfg,
                                  const std::vector<double>& eps_list) {
    std::vector<RuleCell> cells;
    for (const auto& name : cfg.rules) {
        if (name == "regularized") {
            for (double eps : eps_list)
                cells.push_back({UpdateRule::regularized_muon(eps), eps,
                                 std::string("reg_eps_") + eps_tag(eps)});
        } else if (name == "hard") {
            cells.push_back({UpdateRule::hard_muon(), 0.0, "hard"});
        } else if (name == "newton_schulz") {
            cells.push_back({UpdateRule::newton_schulz_muon(cfg.ns_iters), 0.0, "ns"});
        } else if (name == "euclidean") {
            cells.push_back({UpdateRule::euclidean_momentum(), 0.0, "euclid"});
        } else {
            throw InvalidConfigError("unknown update rule '" + name + "'");
        }
    }
    return cells;
}

int resolve_threads(const ExperimentConfig& cfg) {
    if (cfg.threads > 0)
        return cfg.threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

struct PresetRow {
    int m;
    int n;
    std::vector<double> eps_list;
};

std::vector<PresetRow> preset_rows(const ExperimentConfig& cfg) {
    const bool exp1 = cfg.preset != "exp2";
    std::vector<PresetRow> defaults;
    if (exp1) {
        defaults = {{1, 10, {1.0, 3e-2, 1e-3, 1e-8}}, {4, 32, {1.0, 1e-1, 1e-2, 1e-4}}};
    } else {
        defaults = {{3, 12, {1e-1, 1e-3, 1e-4, 1e-5}}, {10, 10, {1e-1, 1e-3, 1e-5, 1e-7}}};
    }
    if (cfg.preset == "custom" && (cfg.m_targets <= 0 || cfg.n_particles <= 0))
        throw InvalidConfigError("custom preset requires explicit m and n");
    if (cfg.m_targets > 0 && cfg.n_particles > 0) {
        std::vector<double> eps = cfg.eps_list;
        if (eps.empty()) {
            eps = defaults.back().eps_list;
            for (const auto& row : defaults)
                if (row.m == cfg.m_targets && row.n == cfg.n_particles)
                    eps = row.eps_list;
        }
        return {{cfg.m_targets, cfg.n_particles, eps}};
    }
    if (!cfg.eps_list.empty())
        for (auto& row : defaults)
            row.eps_list = cfg.eps_list;
    return defaults;
}

void plot_rule_curves(const std::vector<std::pair<std::string, std::vector<DiagnosticsRecord>>>&
                          rule_records,
                      const std::string& dir, const std::string& tag) {
    auto decimate = [](const std::vector<DiagnosticsRecord>& recs, auto pick) {
        PlotSeries s;
        const std::size_t stride = std::max<std::size_t>(1, recs.size() / 2000);
        for (std::size_t k = 0; k < recs.size(); k += stride) {
            const double v = pick(recs[k]);
            if (v > 0.0) {
                s.t.push_back(recs[k].t);
                s.value.push_back(v);
            }
        }
        return s;
    };
    std::vector<PlotSeries> obj_series, ham_series;
    for (const auto& [label, recs] : rule_records) {
        PlotSeries js = decimate(recs, [](const DiagnosticsRecord& r) { return r.J; });
        js.label = label;
        if (!js.t.empty())
            obj_series.push_back(std::move(js));
        PlotSeries hs = decimate(recs, [](const DiagnosticsRecord& r) { return r.H; });
        hs.label = label;
        if (!hs.t.empty())
            ham_series.push_back(std::move(hs));
    }
    if (!obj_series.empty())
        write_plot(obj_series, dir + "/objective_" + tag + ".svg", true, "objective " + tag, "t",
                   "J");
    if (!ham_series.empty())
        write_plot(ham_series, dir + "/hamiltonian_" + tag + ".svg", true, "hamiltonian " + tag,
                   "t", "H = K + gamma*J");
}

void write_summary(const std::vector<CellSummary>& summaries, const std::string& path) {
    auto out = open_out(path);
    out << "rule,eps,final_J,final_H,max_P_norm,steps\n";
    for (const auto& s : summaries)
        out << s.rule << ',' << fmt17(s.eps) << ',' << fmt17(s.final_j) << ','
            << fmt17(s.final_h) << ',' << fmt17(s.max_p_norm) << ',' << s.steps << '\n';
    if (!out)
        throw IoError("failed writing " + path);
}

PresetOutcome run_experiment_rows(const ExperimentConfig& cfg) {
    const bool exp1 = cfg.preset != "exp2"; // custom runs the mean-match family
    const long iters = cfg.iters >= 0 ? cfg.iters : (exp1 ? 10000 : 2000);
    const StepParams sp = inertial_params(cfg.h, cfg.gamma);
    PresetOutcome outcome;

    for (const auto& row : preset_rows(cfg)) {
        const std::string row_tag =
            cfg.preset + "_M" + std::to_string(row.m) + "_N" + std::to_string(row.n);
        const std::string dir = cfg.out_dir + "/" + row_tag;
        ensure_dir(dir);

        std::unique_ptr<Objective> obj;
        Ensemble initial;
        if (exp1) {
            auto setup = make_exp1_setup(row.m, row.n, cfg.seed);
            obj = std::make_unique<MeanMatchObjective>(std::move(setup.spec));
            initial = std::move(setup.initial);
        } else {
            auto setup = make_exp2_setup(row.m, row.n, cfg.seed);
            obj = std::make_unique<TeacherStudentObjective>(std::move(setup.spec));
            initial = std::move(setup.initial);
        }

        const auto cells = build_cells(cfg, row.eps_list);
        std::vector<RunResult> results(cells.size());
        parallel_for(cells.size(), resolve_threads(cfg), [&](std::size_t ci) {
            results[ci] = run_discrete(*obj, initial, sp, cells[ci].rule, iters,
                                       cfg.record_stride, cells[ci].diag_eps, cfg.alpha, 0.0);
        });

        std::vector<std::pair<std::string, std::vector<DiagnosticsRecord>>> rule_records;
        std::vector<CellSummary> row_summaries;
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            const std::string csv = dir + "/diag_" + cells[ci].tag + ".csv";
            write_csv(results[ci].records, csv);
            outcome.csv_paths.push_back(csv);
            outcome.any_nonfinite = outcome.any_nonfinite || results[ci].nonfinite_abort;
            CellSummary s;
            s.rule = cells[ci].tag;
            s.eps = cells[ci].diag_eps;
            if (!results[ci].records.empty()) {
                s.final_j = results[ci].records.back().J;
                s.final_h = results[ci].records.back().H;
            } else { // diverged before the first record
                s.final_j = std::numeric_limits<double>::quiet_NaN();
                s.final_h = std::numeric_limits<double>::quiet_NaN();
            }
            s.max_p_norm = results[ci].max_momentum_norm;
            s.steps = results[ci].steps_completed;
            row_summaries.push_back(s);
            rule_records.emplace_back(cells[ci].tag, std::move(results[ci].records));
        }
        write_summary(row_summaries, dir + "/summary.csv");
        outcome.csv_paths.push_back(dir + "/summary.csv");
        outcome.summaries.insert(outcome.summaries.end(), row_summaries.begin(),
                                 row_summaries.end());
        plot_rule_curves(rule_records, dir, row_tag);
    }
    return outcome;
}

PresetOutcome run_eps_sweep_preset(const ExperimentConfig& cfg) {
    const int m = cfg.m_targets > 0 ? cfg.m_targets : 4;
    const int n = cfg.n_particles > 0 ? cfg.n_particles : 32;
    std::vector<double> eps_list = cfg.eps_list;
    if (eps_list.empty())
        eps_list = {10.0, 1.0, 1e-1, 1e-2, 1e-4, 1e-8};

    auto setup = make_exp1_setup(m, n, cfg.seed);
    MeanMatchObjective obj(std::move(setup.spec));
    const StepParams sp = inertial_params(cfg.h, cfg.gamma);
    const auto sweep = eps_sweep(obj, setup.initial, sp, eps_list, cfg.sweep_steps);

    ensure_dir(cfg.out_dir);
    PresetOutcome outcome;
    const std::string path = cfg.out_dir + "/sweep_summary.csv";
    auto out = open_out(path);
    out << "eps,final_J,divergence_from_hard\n";
    for (std::size_t k = 0; k < sweep.eps_values.size(); ++k)
        out << fmt17(sweep.eps_values[k]) << ',' << fmt17(sweep.final_objective[k]) << ','
            << fmt17(sweep.divergence_from_hard[k]) << '\n';
    out << "hard," << fmt17(sweep.hard_final_objective) << ",0\n";
    if (!out)
        throw IoError("failed writing " + path);
    outcome.csv_paths.push_back(path);

    std::vector<PlotSeries> series;
    for (std::size_t k = 0; k < sweep.eps_values.size(); ++k) {
        PlotSeries s;
        s.label = "eps " + eps_tag(sweep.eps_values[k]);
        for (std::size_t j = 0; j < sweep.objective_trace[k].size(); ++j)
            if (sweep.objective_trace[k][j] > 0.0) {
                s.t.push_back(static_cast<double>(j) * sp.h);
                s.value.push_back(sweep.objective_trace[k][j]);
            }
        if (!s.t.empty())
            series.push_back(std::move(s));
    }
    PlotSeries hs;
    hs.label = "hard";
    for (std::size_t j = 0; j < sweep.hard_objective_trace.size(); ++j)
        if (sweep.hard_objective_trace[j] > 0.0) {
            hs.t.push_back(static_cast<double>(j) * sp.h);
            hs.value.push_back(sweep.hard_objective_trace[j]);
        }
    if (!hs.t.empty())
        series.push_back(std::move(hs));
    write_plot(series, cfg.out_dir + "/objective_eps_sweep.svg", true, "eps sweep", "t", "J");
    return outcome;
}

PresetOutcome run_chaos_preset(const ExperimentConfig& cfg) {
    ChaosConfig ccfg;
    ccfg.n_list = cfg.chaos_n_list;
    ccfg.n_ref = cfg.chaos_n_ref;
    ccfg.t_end = cfg.chaos_t_end;
    ccfg.h_ode = cfg.chaos_h_ode;
    ccfg.n_seeds = cfg.chaos_seeds;
    ccfg.eps = cfg.chaos_eps;
    ccfg.gamma = cfg.gamma;
    ccfg.threads = resolve_threads(cfg);

    const int m = cfg.m_targets > 0 ? cfg.m_targets : 4;
    RngStream rng(cfg.seed);
    Matrix target(16, 8);
    for (int j = 0; j < m; ++j)
        target += gaussian_matrix(rng, 16, 8, 1.0 / std::sqrt(8.0));
    target *= 1.0 / m;
    MeanMatchObjective obj(MeanMatchSpec{16, 8, std::move(target)});

    const auto rate = chaos_rate(obj, ccfg);

    ensure_dir(cfg.out_dir);
    PresetOutcome outcome;
    {
        const std::string path = cfg.out_dir + "/chaos_errors.csv";
        auto out = open_out(path);
        out << "N,seed,sup_err_sq\n";
        for (std::size_t ni = 0; ni < rate.n_list.size(); ++ni)
            for (int seed = 0; seed < ccfg.n_seeds; ++seed)
                out << rate.n_list[ni] << ',' << seed << ','
                    << fmt17(rate.seed_errors[ni][seed]) << '\n';
        if (!out)
            throw IoError("failed writing " + path);
        outcome.csv_paths.push_back(path);
    }
    {
        const std::string path = cfg.out_dir + "/chaos_summary.csv";
        auto out = open_out(path);
        out << "slope,intercept\n";
        out << fmt17(rate.slope) << ',' << fmt17(rate.intercept) << '\n';
        out << "N,mean_err\n";
        for (std::size_t ni = 0; ni < rate.n_list.size(); ++ni)
            out << rate.n_list[ni] << ',' << fmt17(rate.mean_error[ni]) << '\n';
        if (!out)
            throw IoError("failed writing " + path);
        outcome.csv_paths.push_back(path);
    }
    PlotSeries s;
    s.label = "mean sup error";
    for (std::size_t ni = 0; ni < rate.n_list.size(); ++ni) {
        s.t.push_back(static_cast<double>(rate.n_list[ni]));
        s.value.push_back(rate.mean_error[ni]);
    }
    write_plot({s}, cfg.out_dir + "/chaos_rate.svg", true, "propagation of chaos", "N",
               "sup error");
    return outcome;
}

} // namespace

PresetOutcome run_preset(const ExperimentConfig& cfg) {
    ensure_dir(cfg.out_dir);
    write_config_file(cfg, cfg.out_dir + "/config.txt");
    if (cfg.preset == "exp1" || cfg.preset == "exp2" || cfg.preset == "custom")
        return run_experiment_rows(cfg);
    if (cfg.preset == "eps_sweep")
        return run_eps_sweep_preset(cfg);
    if (cfg.preset == "chaos")
        return run_chaos_preset(cfg);
    throw InvalidConfigError("unknown preset '" + cfg.preset + "'");
}

} // namespace muonflow
