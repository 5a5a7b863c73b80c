#pragma once

#include "muonflow/matrix.hpp"
#include "muonflow/spectral.hpp"

#include <utility>
#include <vector>

namespace muonflow {

/// Shape of a finite product of matrix blocks.
struct BlockShape {
    std::vector<std::pair<int, int>> dims;

    BlockShape() = default;
    explicit BlockShape(std::vector<std::pair<int, int>> d);

    int block_count() const { return static_cast<int>(dims.size()); }
    /// Sum over blocks of min(rows, cols).
    int q_total() const;

    bool operator==(const BlockShape& other) const { return dims == other.dims; }
};

/// Ordered tuple of matrices over a product space; carries particle positions
/// and block momenta.
class BlockPoint {
public:
    BlockPoint() = default;
    explicit BlockPoint(std::vector<Matrix> blocks) : blocks_(std::move(blocks)) {}
    static BlockPoint zeros(const BlockShape& shape);

    int block_count() const { return static_cast<int>(blocks_.size()); }
    Matrix& block(int b) { return blocks_[b]; }
    const Matrix& block(int b) const { return blocks_[b]; }

    BlockShape shape() const;
    bool same_shape(const BlockPoint& other) const;
    bool is_finite() const;

    BlockPoint& operator+=(const BlockPoint& other);
    BlockPoint& operator-=(const BlockPoint& other);
    BlockPoint& operator*=(double s);
    void axpy(double a, const BlockPoint& x);

private:
    std::vector<Matrix> blocks_;
};

BlockPoint operator+(BlockPoint a, const BlockPoint& b);
BlockPoint operator-(BlockPoint a, const BlockPoint& b);
BlockPoint operator*(double s, BlockPoint a);

/// Sum of blockwise Frobenius inner products.
double block_inner(const BlockPoint& a, const BlockPoint& b);
double block_norm(const BlockPoint& a);

/// Mean-field pairing (1/N) sum_i <u_i, v_i>.
double avg_inner(const std::vector<BlockPoint>& u, const std::vector<BlockPoint>& v);

/// Blockwise spectral maps.
BlockPoint block_orth_eps(const BlockPoint& p, EpsParam e);
BlockPoint block_orth_hard(const BlockPoint& p);
BlockPoint block_newton_schulz5(const BlockPoint& p, int iters = 5);
double block_psi_eps(const BlockPoint& p, EpsParam e);
double block_dissipation(const BlockPoint& p, EpsParam e);
/// Sum of block nuclear norms (the eps -> 0 kinetic energy).
double block_nuclear(const BlockPoint& p);

/// N particle phase states plus step index and physical time.
struct Ensemble {
    int n_particles = 0;
    std::vector<BlockPoint> positions;
    std::vector<BlockPoint> momenta;
    long step = 0;
    double time = 0.0;

    Ensemble() = default;
    Ensemble(std::vector<BlockPoint> pos, std::vector<BlockPoint> mom, long step = 0,
             double time = 0.0);

    BlockShape shape() const;
    bool is_finite() const;
};

/// Root mean square phase-space distance per particle:
/// sqrt((1/N) sum_i (|dtheta_i|^2 + |dP_i|^2)).
double phase_distance(const Ensemble& a, const Ensemble& b);

} // namespace muonflow
