#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "muonflow/block.hpp"
#include "muonflow/errors.hpp"
#include "muonflow/rng.hpp"

#include <cmath>

using namespace muonflow;

namespace {

BlockPoint random_point(RngStream& rng, const BlockShape& shape, double scale = 1.0) {
    std::vector<Matrix> blocks;
    for (auto [r, c] : shape.dims)
        blocks.push_back(gaussian_matrix(rng, r, c, scale));
    return BlockPoint(std::move(blocks));
}

} // namespace

TEST_CASE("block shape") {
    const BlockShape shape({{4, 6}, {6, 10}});
    CHECK(shape.q_total() == 10);
    CHECK_THROWS_AS(BlockShape(std::vector<std::pair<int, int>>{}), InvalidInputError);
    CHECK_THROWS_AS(BlockShape({{0, 3}}), InvalidInputError);
}

TEST_CASE("block_inner") {
    const BlockShape shape({{2, 2}, {3, 1}});
    BlockPoint a = BlockPoint::zeros(shape);
    a.block(0) = Matrix::identity(2);
    BlockPoint b = a;
    CHECK(block_inner(a, b) == doctest::Approx(2.0)); // trace of I2

    RngStream rng(31);
    const BlockPoint t = random_point(rng, shape);
    CHECK(block_inner(t, t) >= 0.0);

    // single block reduces to the Frobenius inner product
    const BlockShape single({{4, 3}});
    const BlockPoint u = random_point(rng, single);
    const BlockPoint v = random_point(rng, single);
    CHECK(block_inner(u, v) == doctest::Approx(frobenius_inner(u.block(0), v.block(0))));

    BlockPoint wrong = BlockPoint::zeros(BlockShape({{2, 2}}));
    CHECK_THROWS_AS(block_inner(a, wrong), ShapeMismatchError);
}

TEST_CASE("avg_inner") {
    const BlockShape shape({{3, 2}});
    RngStream rng(32);
    const BlockPoint u = random_point(rng, shape);
    const BlockPoint v = random_point(rng, shape);

    CHECK(avg_inner({u}, {v}) == doctest::Approx(block_inner(u, v)));

    // scale invariance in N for repeated unit-norm points
    BlockPoint unit = u;
    unit *= 1.0 / block_norm(unit);
    const std::vector<BlockPoint> rep(5, unit);
    CHECK(avg_inner(rep, rep) == doctest::Approx(1.0));

    // orthogonal two-particle case
    BlockPoint e1 = BlockPoint::zeros(shape);
    BlockPoint e2 = BlockPoint::zeros(shape);
    e1.block(0)(0, 0) = 1.0;
    e2.block(0)(1, 1) = 1.0;
    CHECK(avg_inner({e1, e2}, {e2, e1}) == doctest::Approx(0.0));

    CHECK_THROWS_AS(avg_inner({u, v}, {u}), LengthMismatchError);

    // bilinearity and symmetry on random inputs
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<BlockPoint> x{random_point(rng, shape), random_point(rng, shape)};
        const std::vector<BlockPoint> y{random_point(rng, shape), random_point(rng, shape)};
        const std::vector<BlockPoint> z{random_point(rng, shape), random_point(rng, shape)};
        const double alpha = rng.next_gaussian();
        std::vector<BlockPoint> combo = y;
        for (std::size_t i = 0; i < combo.size(); ++i) {
            combo[i] *= alpha;
            combo[i] += z[i];
        }
        CHECK(avg_inner(x, combo) ==
              doctest::Approx(alpha * avg_inner(x, y) + avg_inner(x, z)).epsilon(1e-10));
        CHECK(avg_inner(x, y) == doctest::Approx(avg_inner(y, x)));
    }
}

TEST_CASE("block_orth_eps") {
    const BlockShape shape({{2, 2}, {3, 4}});
    BlockPoint p = BlockPoint::zeros(shape);
    CHECK(block_norm(block_orth_eps(p, EpsParam(4.0))) == 0.0);

    p.block(0)(0, 0) = 3.0;
    p.block(0)(1, 1) = 4.0;
    const BlockPoint o = block_orth_eps(p, EpsParam(4.0));
    CHECK(o.block(0)(0, 0) == doctest::Approx(0.6).epsilon(1e-10));
    CHECK(o.block(0)(1, 1) == doctest::Approx(4.0 / std::sqrt(32.0)).epsilon(1e-10));
    CHECK(frobenius_norm(o.block(1)) == 0.0);

    RngStream rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const BlockPoint q = random_point(rng, shape);
        const BlockPoint oq = block_orth_eps(q, EpsParam(0.5));
        CHECK(block_norm(oq) <= std::sqrt(static_cast<double>(shape.q_total())) + 1e-12);
        // block separability: per-block orth equals the block of the tuple map
        for (int b = 0; b < q.block_count(); ++b)
            CHECK(frobenius_norm(oq.block(b) - orth_eps(q.block(b), EpsParam(0.5))) == 0.0);
        // Lipschitz in the product norm
        const BlockPoint q2 = random_point(rng, shape);
        const BlockPoint oq2 = block_orth_eps(q2, EpsParam(0.5));
        CHECK(block_norm(oq - oq2) <= 2.0 * block_norm(q - q2) + 1e-10);
    }
}

TEST_CASE("block_psi_eps and product fenchel equality") {
    const BlockShape two({{2, 2}, {2, 2}});
    BlockPoint p = BlockPoint::zeros(two);
    CHECK(block_psi_eps(p, EpsParam(1.0)) == 0.0);

    p.block(0)(0, 0) = 3.0;
    p.block(0)(1, 1) = 4.0;
    p.block(1)(0, 0) = 3.0;
    p.block(1)(1, 1) = 4.0;
    CHECK(block_psi_eps(p, EpsParam(4.0)) == doctest::Approx(5.3137085).epsilon(1e-7));

    // one-block tuple matches the single-matrix map exactly
    RngStream rng(34);
    const Matrix q = gaussian_matrix(rng, 5, 3, 1.0);
    CHECK(block_psi_eps(BlockPoint({q}), EpsParam(0.7)) == psi_eps(q, EpsParam(0.7)));

    // product Fenchel equality
    const BlockShape shape({{4, 3}, {2, 5}});
    for (double eps : {0.1, 1.0}) {
        const EpsParam e(eps);
        for (int trial = 0; trial < 20; ++trial) {
            const BlockPoint t = random_point(rng, shape);
            double phi_sum = 0.0, d_sum = 0.0;
            for (int b = 0; b < t.block_count(); ++b) {
                phi_sum += phi_eps(orth_eps(t.block(b), e), e);
                d_sum += dissipation_density(t.block(b), e);
            }
            CHECK(std::abs(block_psi_eps(t, e) + phi_sum - d_sum) <= 1e-9);
            CHECK(std::abs(d_sum - block_dissipation(t, e)) <= 1e-12);
        }
    }
}

TEST_CASE("block_psi_eps gradient is block_orth_eps") {
    RngStream rng(36);
    const BlockShape shape({{3, 2}, {2, 4}});
    const BlockPoint p = random_point(rng, shape);
    const EpsParam e(0.5);
    const BlockPoint grad = block_orth_eps(p, e);
    const double step = 1e-5;
    BlockPoint work = p;
    for (int b = 0; b < p.block_count(); ++b)
        for (int i = 0; i < p.block(b).rows(); ++i)
            for (int j = 0; j < p.block(b).cols(); ++j) {
                const double saved = work.block(b)(i, j);
                work.block(b)(i, j) = saved + step;
                const double plus = block_psi_eps(work, e);
                work.block(b)(i, j) = saved - step;
                const double minus = block_psi_eps(work, e);
                work.block(b)(i, j) = saved;
                const double fd = (plus - minus) / (2.0 * step);
                CHECK(std::abs(fd - grad.block(b)(i, j)) <=
                      1e-6 * std::max(1.0, std::abs(grad.block(b)(i, j))));
            }
}

TEST_CASE("ensemble validation") {
    const BlockShape shape({{2, 3}});
    RngStream rng(35);
    std::vector<BlockPoint> pos{random_point(rng, shape), random_point(rng, shape)};
    std::vector<BlockPoint> mom{BlockPoint::zeros(shape), BlockPoint::zeros(shape)};
    const Ensemble ens(pos, mom, 3, 0.03);
    CHECK(ens.n_particles == 2);
    CHECK(ens.step == 3);
    CHECK(ens.shape() == shape);

    CHECK_THROWS_AS(Ensemble(pos, {BlockPoint::zeros(shape)}), LengthMismatchError);
    std::vector<BlockPoint> bad_shape{random_point(rng, shape),
                                      BlockPoint::zeros(BlockShape({{3, 2}}))};
    CHECK_THROWS_AS(Ensemble(bad_shape, mom), ShapeMismatchError);
}

TEST_CASE("phase distance") {
    const BlockShape shape({{2, 2}});
    std::vector<BlockPoint> pos{BlockPoint::zeros(shape), BlockPoint::zeros(shape)};
    Ensemble a(pos, pos);
    Ensemble b = a;
    CHECK(phase_distance(a, b) == 0.0);
    b.positions[0].block(0)(0, 0) = 2.0;
    CHECK(phase_distance(a, b) == doctest::Approx(std::sqrt(4.0 / 2.0)));
}
