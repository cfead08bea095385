#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace rtrunc {

using cplx = std::complex<double>;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

/// Caller-owned random stream. Every sampler takes one by reference; nothing
/// in the library keeps RNG state of its own.
using Rng = std::mt19937_64;

/// Execution policy for kernels that have both a serial reference path and an
/// OpenMP path. Both paths produce identical results for a fixed input.
enum class Exec
{
    serial,
    parallel,
};

/// Derive an independent stream for chunk `index` of a computation seeded
/// with `seed`. Used so parallel and serial paths consume identical streams.
inline Rng derived_stream(std::uint64_t seed, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

} // namespace rtrunc
