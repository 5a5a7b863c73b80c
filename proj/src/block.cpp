#include "muonflow/block.hpp"

#include "muonflow/errors.hpp"

#include <cmath>

namespace muonflow {

BlockShape::BlockShape(std::vector<std::pair<int, int>> d) : dims(std::move(d)) {
    if (dims.empty())
        throw InvalidInputError("BlockShape: at least one block required");
    for (auto [r, c] : dims)
        if (r <= 0 || c <= 0)
            throw InvalidInputError("BlockShape: block dimensions must be positive");
}

int BlockShape::q_total() const {
    int q = 0;
    for (auto [r, c] : dims)
        q += std::min(r, c);
    return q;
}

BlockPoint BlockPoint::zeros(const BlockShape& shape) {
    std::vector<Matrix> blocks;
    blocks.reserve(shape.dims.size());
    for (auto [r, c] : shape.dims)
        blocks.emplace_back(r, c);
    return BlockPoint(std::move(blocks));
}

BlockShape BlockPoint::shape() const {
    BlockShape s;
    s.dims.reserve(blocks_.size());
    for (const auto& b : blocks_)
        s.dims.emplace_back(b.rows(), b.cols());
    return s;
}

bool BlockPoint::same_shape(const BlockPoint& other) const {
    if (blocks_.size() != other.blocks_.size())
        return false;
    for (std::size_t b = 0; b < blocks_.size(); ++b)
        if (!blocks_[b].same_shape(other.blocks_[b]))
            return false;
    return true;
}

bool BlockPoint::is_finite() const {
    for (const auto& b : blocks_)
        if (!b.is_finite())
            return false;
    return true;
}

BlockPoint& BlockPoint::operator+=(const BlockPoint& other) {
    if (!same_shape(other))
        throw ShapeMismatchError("BlockPoint addition shape mismatch");
    for (std::size_t b = 0; b < blocks_.size(); ++b)
        blocks_[b] += other.blocks_[b];
    return *this;
}

BlockPoint& BlockPoint::operator-=(const BlockPoint& other) {
    if (!same_shape(other))
        throw ShapeMismatchError("BlockPoint subtraction shape mismatch");
    for (std::size_t b = 0; b < blocks_.size(); ++b)
        blocks_[b] -= other.blocks_[b];
    return *this;
}

BlockPoint& BlockPoint::operator*=(double s) {
    for (auto& b : blocks_)
        b *= s;
    return *this;
}

void BlockPoint::axpy(double a, const BlockPoint& x) {
    if (!same_shape(x))
        throw ShapeMismatchError("BlockPoint axpy shape mismatch");
    for (std::size_t b = 0; b < blocks_.size(); ++b)
        blocks_[b].axpy(a, x.block(static_cast<int>(b)));
}

BlockPoint operator+(BlockPoint a, const BlockPoint& b) {
    a += b;
    return a;
}

BlockPoint operator-(BlockPoint a, const BlockPoint& b) {
    a -= b;
    return a;
}

BlockPoint operator*(double s, BlockPoint a) {
    a *= s;
    return a;
}

double block_inner(const BlockPoint& a, const BlockPoint& b) {
    if (!a.same_shape(b))
        throw ShapeMismatchError("block_inner shape mismatch");
    double s = 0.0;
    for (int k = 0; k < a.block_count(); ++k)
        s += frobenius_inner(a.block(k), b.block(k));
    return s;
}

double block_norm(const BlockPoint& a) {
    double s = 0.0;
    for (int k = 0; k < a.block_count(); ++k) {
        const double nb = frobenius_norm(a.block(k));
        s += nb * nb;
    }
    return std::sqrt(s);
}

double avg_inner(const std::vector<BlockPoint>& u, const std::vector<BlockPoint>& v) {
    if (u.size() != v.size())
        throw LengthMismatchError("avg_inner: particle count mismatch");
    if (u.empty())
        throw LengthMismatchError("avg_inner: empty particle lists");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        s += block_inner(u[i], v[i]);
    return s / static_cast<double>(u.size());
}

BlockPoint block_orth_eps(const BlockPoint& p, EpsParam e) {
    std::vector<Matrix> out;
    out.reserve(p.block_count());
    for (int b = 0; b < p.block_count(); ++b)
        out.push_back(orth_eps(p.block(b), e));
    return BlockPoint(std::move(out));
}

BlockPoint block_orth_hard(const BlockPoint& p) {
    std::vector<Matrix> out;
    out.reserve(p.block_count());
    for (int b = 0; b < p.block_count(); ++b)
        out.push_back(orth_hard(p.block(b)));
    return BlockPoint(std::move(out));
}

BlockPoint block_newton_schulz5(const BlockPoint& p, int iters) {
    std::vector<Matrix> out;
    out.reserve(p.block_count());
    for (int b = 0; b < p.block_count(); ++b)
        out.push_back(newton_schulz5(p.block(b), iters));
    return BlockPoint(std::move(out));
}

double block_psi_eps(const BlockPoint& p, EpsParam e) {
    double s = 0.0;
    for (int b = 0; b < p.block_count(); ++b)
        s += psi_eps(p.block(b), e);
    return s;
}

double block_dissipation(const BlockPoint& p, EpsParam e) {
    double s = 0.0;
    for (int b = 0; b < p.block_count(); ++b)
        s += dissipation_density(p.block(b), e);
    return s;
}

double block_nuclear(const BlockPoint& p) {
    double s = 0.0;
    for (int b = 0; b < p.block_count(); ++b)
        s += norms(p.block(b)).nuc;
    return s;
}

Ensemble::Ensemble(std::vector<BlockPoint> pos, std::vector<BlockPoint> mom, long step_,
                   double time_)
    : n_particles(static_cast<int>(pos.size())), positions(std::move(pos)),
      momenta(std::move(mom)), step(step_), time(time_) {
    if (positions.empty())
        throw InvalidInputError("Ensemble: at least one particle required");
    if (positions.size() != momenta.size())
        throw LengthMismatchError("Ensemble: positions and momenta counts differ");
    for (const auto& p : positions)
        if (!p.same_shape(positions.front()))
            throw ShapeMismatchError("Ensemble: particle shapes differ");
    for (const auto& p : momenta)
        if (!p.same_shape(positions.front()))
            throw ShapeMismatchError("Ensemble: momentum shapes differ");
    for (const auto& p : positions)
        if (!p.is_finite())
            throw InvalidMatrixError("Ensemble: non-finite position");
    for (const auto& p : momenta)
        if (!p.is_finite())
            throw InvalidMatrixError("Ensemble: non-finite momentum");
}

BlockShape Ensemble::shape() const { return positions.front().shape(); }

bool Ensemble::is_finite() const {
    for (const auto& p : positions)
        if (!p.is_finite())
            return false;
    for (const auto& p : momenta)
        if (!p.is_finite())
            return false;
    return true;
}

double phase_distance(const Ensemble& a, const Ensemble& b) {
    if (a.n_particles != b.n_particles)
        throw LengthMismatchError("phase_distance: particle count mismatch");
    double s = 0.0;
    for (int i = 0; i < a.n_particles; ++i) {
        const double dth = block_norm(a.positions[i] - b.positions[i]);
        const double dp = block_norm(a.momenta[i] - b.momenta[i]);
        s += dth * dth + dp * dp;
    }
    return std::sqrt(s / a.n_particles);
}

} // namespace muonflow
