#include "muonflow/objectives.hpp"

#include "muonflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace muonflow {

namespace {

void require_shape(const Objective& obj, const Ensemble& ens, const char* who) {
    if (!(ens.shape() == obj.shape()))
        throw ShapeMismatchError(std::string(who) + ": ensemble shape does not match objective");
}

double logsumexp(std::span<const double> z) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : z)
        mx = std::max(mx, x);
    double s = 0.0;
    for (double x : z)
        s += std::exp(x - mx);
    return mx + std::log(s);
}

} // namespace

// ---------------------------------------------------------------------------
// mean matching

MeanMatchObjective::MeanMatchObjective(MeanMatchSpec spec) : spec_(std::move(spec)) {
    if (spec_.target.rows() != spec_.rows || spec_.target.cols() != spec_.cols)
        throw ShapeMismatchError("MeanMatchObjective: target shape mismatch");
    shape_ = BlockShape({{spec_.rows, spec_.cols}});
}

std::size_t MeanMatchObjective::moment_dim() const {
    return static_cast<std::size_t>(spec_.rows) * spec_.cols;
}

std::vector<double> MeanMatchObjective::moment(const Ensemble& ens) const {
    require_shape(*this, ens, "mean_match");
    std::vector<double> m(moment_dim(), 0.0);
    for (const auto& p : ens.positions) {
        auto e = p.block(0).entries();
        for (std::size_t k = 0; k < m.size(); ++k)
            m[k] += e[k];
    }
    const double inv = 1.0 / ens.n_particles;
    for (double& x : m)
        x *= inv;
    return m;
}

double MeanMatchObjective::value_from_moment(std::span<const double> m) const {
    auto t = spec_.target.entries();
    double s = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        const double d = m[k] - t[k];
        s += d * d;
    }
    return 0.5 * s;
}

std::vector<BlockPoint> MeanMatchObjective::forces_at(const Ensemble& ens,
                                                      std::span<const double> m) const {
    require_shape(*this, ens, "mean_match");
    Matrix f(spec_.rows, spec_.cols);
    auto t = spec_.target.entries();
    auto e = f.entries();
    for (std::size_t k = 0; k < e.size(); ++k)
        e[k] = m[k] - t[k];
    BlockPoint force(std::vector<Matrix>{std::move(f)});
    return std::vector<BlockPoint>(ens.n_particles, force);
}

std::optional<CurvatureConstants> MeanMatchObjective::curvature_constants() const {
    // F = identity, R' affine: second-order terms vanish.
    return CurvatureConstants{1.0, 0.0, std::numeric_limits<double>::infinity(), 0.0};
}

// ---------------------------------------------------------------------------
// teacher-student

std::vector<BlockPoint> draw_teachers(RngStream& rng, int m_teachers, int d, int r, int p) {
    std::vector<BlockPoint> teachers;
    teachers.reserve(m_teachers);
    for (int j = 0; j < m_teachers; ++j) {
        Matrix a = gaussian_matrix(rng, p, r, 1.0 / std::sqrt(static_cast<double>(r)));
        Matrix b = gaussian_matrix(rng, r, d, 1.0 / std::sqrt(static_cast<double>(d)));
        teachers.push_back(BlockPoint(std::vector<Matrix>{std::move(a), std::move(b)}));
    }
    return teachers;
}

std::vector<std::vector<double>> draw_inputs(RngStream& rng, int s_samples, int dim) {
    std::vector<std::vector<double>> inputs;
    inputs.reserve(s_samples);
    for (int s = 0; s < s_samples; ++s) {
        std::vector<double> x(dim);
        for (double& v : x)
            v = rng.next_gaussian();
        inputs.push_back(std::move(x));
    }
    return inputs;
}

std::vector<std::vector<double>> teacher_targets(const std::vector<BlockPoint>& teachers,
                                                 const std::vector<std::vector<double>>& inputs,
                                                 int d, int r, int p) {
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    const double inv_m = 1.0 / static_cast<double>(teachers.size());
    std::vector<std::vector<double>> targets;
    targets.reserve(inputs.size());
    std::vector<double> h(r);
    for (const auto& x : inputs) {
        std::vector<double> y(p, 0.0);
        for (const auto& teacher : teachers) {
            const Matrix& A = teacher.block(0);
            const Matrix& B = teacher.block(1);
            for (int k = 0; k < r; ++k) {
                double a = 0.0;
                for (int c = 0; c < d; ++c)
                    a += B(k, c) * x[c];
                h[k] = std::tanh(a * inv_sqrt_d);
            }
            for (int o = 0; o < p; ++o) {
                double a = 0.0;
                for (int k = 0; k < r; ++k)
                    a += A(o, k) * h[k];
                y[o] += a;
            }
        }
        for (double& v : y)
            v *= inv_m;
        targets.push_back(std::move(y));
    }
    return targets;
}

TeacherStudentData make_teacher_student(int d, int r, int p, int s_samples, int m_teachers,
                                        RngStream& rng) {
    TeacherStudentData data;
    data.teachers = draw_teachers(rng, m_teachers, d, r, p);
    data.spec.d = d;
    data.spec.r = r;
    data.spec.p = p;
    data.spec.s_samples = s_samples;
    data.spec.inputs = draw_inputs(rng, s_samples, d);
    data.spec.targets = teacher_targets(data.teachers, data.spec.inputs, d, r, p);
    return data;
}

TeacherStudentObjective::TeacherStudentObjective(TeacherStudentSpec spec)
    : spec_(std::move(spec)) {
    if (static_cast<int>(spec_.inputs.size()) != spec_.s_samples ||
        static_cast<int>(spec_.targets.size()) != spec_.s_samples)
        throw InvalidInputError("TeacherStudentObjective: sample count mismatch");
    shape_ = BlockShape({{spec_.p, spec_.r}, {spec_.r, spec_.d}});
}

std::size_t TeacherStudentObjective::moment_dim() const {
    return static_cast<std::size_t>(spec_.s_samples) * spec_.p;
}

std::vector<double> TeacherStudentObjective::moment(const Ensemble& ens) const {
    require_shape(*this, ens, "teacher_student");
    const int S = spec_.s_samples, p = spec_.p, r = spec_.r, d = spec_.d;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> m(moment_dim(), 0.0);
    for (const auto& particle : ens.positions) {
        const Matrix& A = particle.block(0);
        const Matrix& B = particle.block(1);
        for (int s = 0; s < S; ++s) {
            const auto& x = spec_.inputs[s];
            for (int k = 0; k < r; ++k) {
                double a = 0.0;
                for (int c = 0; c < d; ++c)
                    a += B(k, c) * x[c];
                const double h = std::tanh(a * inv_sqrt_d);
                for (int o = 0; o < p; ++o)
                    m[static_cast<std::size_t>(s) * p + o] += A(o, k) * h;
            }
        }
    }
    const double inv = 1.0 / ens.n_particles;
    for (double& x : m)
        x *= inv;
    return m;
}

double TeacherStudentObjective::value_from_moment(std::span<const double> m) const {
    const int S = spec_.s_samples, p = spec_.p;
    double s2 = 0.0;
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < p; ++o) {
            const double d = m[static_cast<std::size_t>(s) * p + o] - spec_.targets[s][o];
            s2 += d * d;
        }
    return s2 / (2.0 * S * p);
}

std::vector<BlockPoint> TeacherStudentObjective::forces_at(const Ensemble& ens,
                                                           std::span<const double> m) const {
    require_shape(*this, ens, "teacher_student");
    const int S = spec_.s_samples, p = spec_.p, r = spec_.r, d = spec_.d;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    const double w = 1.0 / (static_cast<double>(S) * p);

    // Residuals r_s = m_s - y_s weighted by 1/(S p).
    std::vector<double> resid(m.size());
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < p; ++o) {
            const std::size_t idx = static_cast<std::size_t>(s) * p + o;
            resid[idx] = w * (m[idx] - spec_.targets[s][o]);
        }

    std::vector<BlockPoint> forces;
    forces.reserve(ens.n_particles);
    std::vector<double> h(r), hp(r), atr(r);
    for (const auto& particle : ens.positions) {
        const Matrix& A = particle.block(0);
        const Matrix& B = particle.block(1);
        Matrix fa(p, r);
        Matrix fb(r, d);
        for (int s = 0; s < S; ++s) {
            const auto& x = spec_.inputs[s];
            for (int k = 0; k < r; ++k) {
                double a = 0.0;
                for (int c = 0; c < d; ++c)
                    a += B(k, c) * x[c];
                const double t = std::tanh(a * inv_sqrt_d);
                h[k] = t;
                hp[k] = 1.0 - t * t;
            }
            const double* rs = resid.data() + static_cast<std::size_t>(s) * p;
            // dJ/dA_i contribution: r_s h^T
            for (int o = 0; o < p; ++o)
                for (int k = 0; k < r; ++k)
                    fa(o, k) += rs[o] * h[k];
            // dJ/dB_i contribution: ((A^T r_s) .* tanh') x^T / sqrt(d)
            for (int k = 0; k < r; ++k) {
                double a = 0.0;
                for (int o = 0; o < p; ++o)
                    a += A(o, k) * rs[o];
                atr[k] = a * hp[k] * inv_sqrt_d;
            }
            for (int k = 0; k < r; ++k) {
                if (atr[k] == 0.0)
                    continue;
                for (int c = 0; c < d; ++c)
                    fb(k, c) += atr[k] * x[c];
            }
        }
        forces.push_back(BlockPoint(std::vector<Matrix>{std::move(fa), std::move(fb)}));
    }
    return forces;
}

// ---------------------------------------------------------------------------
// gated mixture of linear experts

GatedMoeSpec make_gated_moe(int token_dim, int n_classes, int n_inputs, RngStream& rng) {
    GatedMoeSpec spec;
    spec.token_dim = token_dim;
    spec.n_classes = n_classes;
    spec.n_inputs = n_inputs;
    for (int j = 0; j < n_inputs; ++j) {
        std::vector<double> x(token_dim);
        for (double& v : x)
            v = rng.next_gaussian();
        spec.inputs.push_back(std::move(x));
        spec.labels.push_back(static_cast<int>(rng.next_u64() % n_classes));
    }
    return spec;
}

GatedMoeObjective::GatedMoeObjective(GatedMoeSpec spec) : spec_(std::move(spec)) {
    if (static_cast<int>(spec_.inputs.size()) != spec_.n_inputs ||
        static_cast<int>(spec_.labels.size()) != spec_.n_inputs)
        throw InvalidInputError("GatedMoeObjective: input count mismatch");
    for (int y : spec_.labels)
        if (y < 0 || y >= spec_.n_classes)
            throw InvalidInputError("GatedMoeObjective: label out of range");
    if (!(spec_.denom_floor > 0.0))
        throw InvalidInputError("GatedMoeObjective: denominator floor must be positive");
    shape_ = BlockShape({{spec_.token_dim, spec_.n_classes}, {spec_.token_dim, 1}});
}

std::size_t GatedMoeObjective::moment_dim() const {
    return static_cast<std::size_t>(spec_.n_inputs) * (spec_.n_classes + 1);
}

// Moment layout: [numerators (n x C) row-major, denominators (n)].
std::vector<double> GatedMoeObjective::moment(const Ensemble& ens) const {
    require_shape(*this, ens, "gated_moe");
    const int n = spec_.n_inputs, C = spec_.n_classes, d = spec_.token_dim;
    std::vector<double> m(moment_dim(), 0.0);
    double* num = m.data();
    double* den = m.data() + static_cast<std::size_t>(n) * C;
    for (const auto& particle : ens.positions) {
        const Matrix& omega = particle.block(0);
        const Matrix& g = particle.block(1);
        for (int j = 0; j < n; ++j) {
            const auto& x = spec_.inputs[j];
            double score = 0.0;
            for (int c = 0; c < d; ++c)
                score += g(c, 0) * x[c];
            const double w = std::exp(score);
            for (int cls = 0; cls < C; ++cls) {
                double psi = 0.0;
                for (int c = 0; c < d; ++c)
                    psi += omega(c, cls) * x[c];
                num[static_cast<std::size_t>(j) * C + cls] += w * psi;
            }
            den[j] += w;
        }
    }
    const double inv = 1.0 / ens.n_particles;
    for (double& x : m)
        x *= inv;
    return m;
}

double GatedMoeObjective::value_from_moment(std::span<const double> m) const {
    const int n = spec_.n_inputs, C = spec_.n_classes;
    const double* num = m.data();
    const double* den = m.data() + static_cast<std::size_t>(n) * C;
    double loss = 0.0;
    std::vector<double> logits(C);
    for (int j = 0; j < n; ++j) {
        const double dj = std::max(den[j], spec_.denom_floor);
        for (int cls = 0; cls < C; ++cls)
            logits[cls] = num[static_cast<std::size_t>(j) * C + cls] / dj;
        loss += -logits[spec_.labels[j]] + logsumexp(logits);
    }
    return loss / n;
}

bool GatedMoeObjective::moment_flag(std::span<const double> m) const {
    const int n = spec_.n_inputs, C = spec_.n_classes;
    const double* den = m.data() + static_cast<std::size_t>(n) * C;
    for (int j = 0; j < n; ++j)
        if (den[j] < spec_.denom_floor)
            return true;
    return false;
}

std::vector<BlockPoint> GatedMoeObjective::forces_at(const Ensemble& ens,
                                                     std::span<const double> m) const {
    require_shape(*this, ens, "gated_moe");
    const int n = spec_.n_inputs, C = spec_.n_classes, d = spec_.token_dim;
    const double* num = m.data();
    const double* den = m.data() + static_cast<std::size_t>(n) * C;

    // Per token: u_j = (softmax(Gamma_j) - e_y) / (n * clamp(D_j)) drives the
    // numerator block; v_j drives the denominator (zero when the clamp is active).
    std::vector<double> u(static_cast<std::size_t>(n) * C);
    std::vector<double> v(n);
    std::vector<double> logits(C);
    for (int j = 0; j < n; ++j) {
        const double dj = std::max(den[j], spec_.denom_floor);
        const bool clamped = den[j] < spec_.denom_floor;
        for (int cls = 0; cls < C; ++cls)
            logits[cls] = num[static_cast<std::size_t>(j) * C + cls] / dj;
        const double lse = logsumexp(logits);
        double vdot = 0.0;
        for (int cls = 0; cls < C; ++cls) {
            const double grad = std::exp(logits[cls] - lse) - (cls == spec_.labels[j] ? 1.0 : 0.0);
            u[static_cast<std::size_t>(j) * C + cls] = grad / (n * dj);
            vdot += grad * logits[cls];
        }
        v[j] = clamped ? 0.0 : -vdot / (n * dj);
    }

    std::vector<BlockPoint> forces;
    forces.reserve(ens.n_particles);
    for (const auto& particle : ens.positions) {
        const Matrix& omega = particle.block(0);
        const Matrix& g = particle.block(1);
        Matrix fo(d, C);
        Matrix fg(d, 1);
        for (int j = 0; j < n; ++j) {
            const auto& x = spec_.inputs[j];
            double score = 0.0;
            for (int c = 0; c < d; ++c)
                score += g(c, 0) * x[c];
            const double w = std::exp(score);
            const double* uj = u.data() + static_cast<std::size_t>(j) * C;
            double gate_term = v[j];
            for (int cls = 0; cls < C; ++cls) {
                double psi = 0.0;
                for (int c = 0; c < d; ++c)
                    psi += omega(c, cls) * x[c];
                gate_term += uj[cls] * psi;
                const double coeff = w * uj[cls];
                for (int c = 0; c < d; ++c)
                    fo(c, cls) += coeff * x[c];
            }
            const double coeff = w * gate_term;
            for (int c = 0; c < d; ++c)
                fg(c, 0) += coeff * x[c];
        }
        forces.push_back(BlockPoint(std::vector<Matrix>{std::move(fo), std::move(fg)}));
    }
    return forces;
}

// ---------------------------------------------------------------------------
// oracles and helpers

double fd_force_check(const Objective& obj, const Ensemble& ens, double step) {
    if (!(step > 0.0))
        throw InvalidInputError("fd_force_check: step must be positive");
    const auto forces = obj.forces(ens);
    const double n = static_cast<double>(ens.n_particles);

    double scale = 1.0;
    for (const auto& f : forces)
        for (int b = 0; b < f.block_count(); ++b)
            for (double x : f.block(b).entries())
                scale = std::max(scale, std::abs(x));

    Ensemble work = ens;
    double max_err = 0.0;
    for (int i = 0; i < ens.n_particles; ++i) {
        for (int b = 0; b < forces[i].block_count(); ++b) {
            auto coords = work.positions[i].block(b).entries();
            for (std::size_t k = 0; k < coords.size(); ++k) {
                const double saved = coords[k];
                coords[k] = saved + step;
                const double jp = obj.value(work);
                coords[k] = saved - step;
                const double jm = obj.value(work);
                coords[k] = saved;
                const double fd = n * (jp - jm) / (2.0 * step);
                const double a = forces[i].block(b).entries()[k];
                max_err = std::max(max_err, std::abs(fd - a) / scale);
            }
        }
    }
    return max_err;
}

double cross_entropy_value(const std::vector<std::vector<double>>& logits,
                           const std::vector<int>& labels) {
    if (logits.size() != labels.size())
        throw LengthMismatchError("cross_entropy_value: token count mismatch");
    double loss = 0.0;
    for (std::size_t t = 0; t < logits.size(); ++t)
        loss += -logits[t][labels[t]] + logsumexp(logits[t]);
    return loss / logits.size();
}

std::vector<std::vector<double>> cross_entropy_grad(const std::vector<std::vector<double>>& logits,
                                                    const std::vector<int>& labels) {
    if (logits.size() != labels.size())
        throw LengthMismatchError("cross_entropy_grad: token count mismatch");
    std::vector<std::vector<double>> grad(logits.size());
    for (std::size_t t = 0; t < logits.size(); ++t) {
        const double lse = logsumexp(logits[t]);
        grad[t].resize(logits[t].size());
        for (std::size_t c = 0; c < logits[t].size(); ++c)
            grad[t][c] = std::exp(logits[t][c] - lse) -
                         (static_cast<int>(c) == labels[t] ? 1.0 : 0.0);
    }
    return grad;
}

} // namespace muonflow
