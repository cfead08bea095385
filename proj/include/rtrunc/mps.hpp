#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtrunc/common.hpp"

namespace rtrunc::mps {

/// Open-boundary matrix product state. Site j holds one r_j x r_{j+1}
/// matrix per physical index; r_0 = r_n = 1. When `center` is set to a bond
/// m in [1, n-1], sites 0..m-1 are left isometries, sites m..n-1 are right
/// isometries, and `spectrum` holds the singular values across bond m.
struct MPSState
{
    int n = 0;
    int phys_dim = 2;
    std::vector<std::vector<CMat>> sites;
    std::optional<int> center;
    RVec spectrum;

    std::vector<int> bond_dims() const;
};

enum class Strategy
{
    dtrunc,
    rtrunc_td,
    rtrunc_rob,
};

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

/// Independent standard complex Gaussian entries with bonds
/// min(max_bond, p^j, p^(n-j)), canonicalized at bond 1 and normalized.
MPSState random_mps(int n, int phys_dim, int max_bond, Rng& rng);

/// Mixed-canonical form with center at bond m (1 <= m <= n-1). Singular
/// values below 1e-14 are dropped.
MPSState canonicalize_mps(MPSState mps, int m);

/// Max over sites of the isometry residual implied by `center`.
double isometry_residual(const MPSState& mps);

/// Sweeps bonds 1..n-1 left to right, replacing each center spectrum with the
/// normalized power law j^(-gamma) and keeping the Schmidt bases.
MPSState respectrum_power_law(MPSState mps, double gamma);

/// Truncates bond m to at most D Schmidt values (canonicalizing first if
/// needed). The randomized strategies draw one coefficient vector from the
/// optimal trace-distance or robustness ensemble of the bond spectrum.
MPSState truncate_bond(MPSState mps, int m, int D, Strategy strategy, Rng& rng);

/// Truncates every bond left to right, recanonicalizing between bonds.
MPSState truncate_all(MPSState mps, int D, Strategy strategy, Rng& rng);

/// <v| O_site |v> for a phys_dim x phys_dim operator.
double expectation_single_site(const MPSState& mps, int site, const CMat& op);

/// Dense coefficients; site 0 is the most significant digit.
CVec to_dense(const MPSState& mps);

/// <a|b> of two chains with equal n and phys_dim.
cplx overlap(const MPSState& a, const MPSState& b);

struct ExperimentConfig
{
    int n = 9;
    int max_bond = 0; ///< 0 means full rank
    std::vector<double> gammas{0.1, 0.3};
    int D = 0;        ///< 0 picks D per state with dtrunc fidelity closest to target_fidelity
    double target_fidelity = 0.99;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4};
    int samples = 100;
    int site = 4; ///< 0-based
    std::vector<Strategy> strategies{Strategy::dtrunc, Strategy::rtrunc_td};
};

struct ExperimentRecord
{
    double gamma = 0.0;
    int D = 0;
    std::uint64_t seed = 0;
    Strategy strategy = Strategy::dtrunc;
    double estimate = 0.0;
    double exact = 0.0;
    int sample_count = 1;
    double sample_std = 0.0;
    double dtrunc_fidelity = 0.0;
};

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config, Exec exec = Exec::parallel);

} // namespace rtrunc::mps
