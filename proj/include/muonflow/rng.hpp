#pragma once

#include "muonflow/matrix.hpp"

#include <cstdint>

namespace muonflow {

/// Counter-based deterministic stream: a splitmix-style key schedule feeding a
/// 64-bit finalizer permutation. Identical seeds give identical streams on any
/// platform and under any threading layout; substreams partition the keyspace.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    /// Independent stream derived from this stream's key and a label.
    RngStream substream(std::uint64_t label) const;

    std::uint64_t next_u64();
    /// Uniform on (0, 1].
    double next_uniform();
    /// Standard normal via Box-Muller (two uniforms per draw).
    double next_gaussian();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// rows x cols matrix of i.i.d. N(0, scale^2) entries in row-major draw order.
Matrix gaussian_matrix(RngStream& rng, int rows, int cols, double scale);

} // namespace muonflow
