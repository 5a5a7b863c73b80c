#include "muonflow/rng.hpp"

#include "muonflow/errors.hpp"

#include <cmath>
#include <numbers>

namespace muonflow {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

} // namespace

RngStream::RngStream(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

RngStream RngStream::substream(std::uint64_t label) const {
    return RngStream(key_ ^ mix64(label * kGolden + 0x5851f42d4c957f2dULL));
}

std::uint64_t RngStream::next_u64() {
    return mix64(key_ + (++counter_) * kGolden);
}

double RngStream::next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Matrix gaussian_matrix(RngStream& rng, int rows, int cols, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw InvalidScaleError("gaussian_matrix: scale must be strictly positive");
    Matrix m(rows, cols);
    for (double& x : m.entries())
        x = scale * rng.next_gaussian();
    return m;
}

} // namespace muonflow
