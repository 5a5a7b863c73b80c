#pragma once

#include "muonflow/block.hpp"
#include "muonflow/rng.hpp"

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace muonflow {

/// Trajectory smoothness constants an objective can certify for the rate
/// calculators (M_R = +inf means unbounded but multiplied by a zero term).
struct CurvatureConstants {
    double m_d;
    double m_d2;
    double m_r;
    double m_r2;
};

/// Probability objective J(rho) = R(integral F d rho) evaluated on empirical
/// laws. The moment is the empirical feature average m_N = (1/N) sum F(theta_i)
/// flattened to a vector; forces are the mean-field gradients
/// a_i = DF(theta_i)^* grad R(m) with no 1/N factor, so the particle scheme
/// consumes them unmodified.
class Objective {
public:
    virtual ~Objective() = default;

    virtual const BlockShape& shape() const = 0;
    virtual std::size_t moment_dim() const = 0;

    virtual std::vector<double> moment(const Ensemble& ens) const = 0;
    virtual double value_from_moment(std::span<const double> m) const = 0;
    virtual std::vector<BlockPoint> forces_at(const Ensemble& ens,
                                              std::span<const double> m) const = 0;

    /// Run flag evaluated on a moment (e.g. a clamped denominator); never an error.
    virtual bool moment_flag(std::span<const double>) const { return false; }
    virtual std::optional<CurvatureConstants> curvature_constants() const { return std::nullopt; }

    double value(const Ensemble& ens) const { return value_from_moment(moment(ens)); }
    std::vector<BlockPoint> forces(const Ensemble& ens) const {
        return forces_at(ens, moment(ens));
    }
};

/// J_N = 1/2 | (1/N) sum W_i - target |_F^2 on a single matrix block. All
/// particles see the identical force (1/N) sum W_l - target.
struct MeanMatchSpec {
    int rows = 16;
    int cols = 8;
    Matrix target;
};

class MeanMatchObjective : public Objective {
public:
    explicit MeanMatchObjective(MeanMatchSpec spec);

    const BlockShape& shape() const override { return shape_; }
    std::size_t moment_dim() const override;
    std::vector<double> moment(const Ensemble& ens) const override;
    double value_from_moment(std::span<const double> m) const override;
    std::vector<BlockPoint> forces_at(const Ensemble& ens,
                                      std::span<const double> m) const override;
    std::optional<CurvatureConstants> curvature_constants() const override;

    const MeanMatchSpec& spec() const { return spec_; }

private:
    MeanMatchSpec spec_;
    BlockShape shape_;
};

/// Teacher-student tanh network on the product space R^{p x r} x R^{r x d}:
/// J_N = 1/(2 S p) sum_s | (1/N) sum_i A_i tanh(B_i x_s / sqrt(d)) - y_s |^2.
struct TeacherStudentSpec {
    int d = 10;
    int r = 6;
    int p = 4;
    int s_samples = 320;
    std::vector<std::vector<double>> inputs;  // S vectors of length d
    std::vector<std::vector<double>> targets; // S vectors of length p
};

/// Frozen teacher particles with blocks (A: p x r scaled 1/sqrt(r),
/// B: r x d scaled 1/sqrt(d)).
std::vector<BlockPoint> draw_teachers(RngStream& rng, int m_teachers, int d, int r, int p);
/// s_samples standard Gaussian vectors of the given dimension.
std::vector<std::vector<double>> draw_inputs(RngStream& rng, int s_samples, int dim);
/// y_s = (1/M) sum_j A_j tanh(B_j x_s / sqrt(d)).
std::vector<std::vector<double>> teacher_targets(const std::vector<BlockPoint>& teachers,
                                                 const std::vector<std::vector<double>>& inputs,
                                                 int d, int r, int p);

struct TeacherStudentData {
    TeacherStudentSpec spec;
    std::vector<BlockPoint> teachers;
};

/// Convenience bundle: teachers, inputs, and implied targets from one stream.
TeacherStudentData make_teacher_student(int d, int r, int p, int s_samples, int m_teachers,
                                        RngStream& rng);

class TeacherStudentObjective : public Objective {
public:
    explicit TeacherStudentObjective(TeacherStudentSpec spec);

    const BlockShape& shape() const override { return shape_; }
    std::size_t moment_dim() const override;
    std::vector<double> moment(const Ensemble& ens) const override;
    double value_from_moment(std::span<const double> m) const override;
    std::vector<BlockPoint> forces_at(const Ensemble& ens,
                                      std::span<const double> m) const override;

    const TeacherStudentSpec& spec() const { return spec_; }

private:
    TeacherStudentSpec spec_;
    BlockShape shape_;
};

/// Toy linear-expert gated mixture with softmax-normalized routing. Particle
/// blocks are (expert Omega in R^{d x C}, router g in R^{d x 1}); the moment
/// is the augmented pair (numerator, denominator) and the loss is token
/// cross-entropy of the normalized logits.
struct GatedMoeSpec {
    int token_dim = 4;
    int n_classes = 3;
    int n_inputs = 8;
    std::vector<std::vector<double>> inputs; // n vectors of length token_dim
    std::vector<int> labels;                 // class indices in [0, n_classes)
    double denom_floor = 1e-6;
};

GatedMoeSpec make_gated_moe(int token_dim, int n_classes, int n_inputs, RngStream& rng);

class GatedMoeObjective : public Objective {
public:
    explicit GatedMoeObjective(GatedMoeSpec spec);

    const BlockShape& shape() const override { return shape_; }
    std::size_t moment_dim() const override;
    std::vector<double> moment(const Ensemble& ens) const override;
    double value_from_moment(std::span<const double> m) const override;
    std::vector<BlockPoint> forces_at(const Ensemble& ens,
                                      std::span<const double> m) const override;
    bool moment_flag(std::span<const double> m) const override;

    const GatedMoeSpec& spec() const { return spec_; }

private:
    GatedMoeSpec spec_;
    BlockShape shape_;
};

/// Central-difference check of forces against the value function. Returns the
/// max over particle coordinates of |N * dJ_N/dtheta - a| / max(1, max|a|).
/// The N factor matches the mean-field pairing convention above.
double fd_force_check(const Objective& obj, const Ensemble& ens, double step = 1e-5);

/// Token cross-entropy helpers (averaged inner product over tokens).
double cross_entropy_value(const std::vector<std::vector<double>>& logits,
                           const std::vector<int>& labels);
/// Per-token gradients softmax(f_t) - e_{y_t}; the averaged-norm weight 1/n is
/// left to callers.
std::vector<std::vector<double>> cross_entropy_grad(const std::vector<std::vector<double>>& logits,
                                                    const std::vector<int>& labels);

} // namespace muonflow
