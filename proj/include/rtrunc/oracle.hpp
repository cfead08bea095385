#pragma once

#include <optional>
#include <vector>

#include "rtrunc/common.hpp"
#include "rtrunc/ensemble.hpp"

// Independent reference computations used by the tests: explicit subset
// enumeration, first-order and face-enumeration solvers for T_k, and
// Monte Carlo moment estimates for sampled ensembles.

namespace rtrunc::oracle {

struct EnumeratedDistribution
{
    int n = 0;
    int ell = 0;
    std::vector<std::vector<int>> subsets; ///< lexicographic
    RVec probs;
    RVec q;
    RMat Q;
    double z = 0.0; ///< partition value for the given weights
    double entropy = 0.0;
    RVec mu; ///< weights used (fitted ones for the marginal form)
    int iterations = 0;
    double residual = 0.0;
};

/// All size-ell subsets of [n] with p(S) proportional to exp(-sum mu). n <= 20.
EnumeratedDistribution enumerate_maxent(const RVec& mu, int ell);

/// Max-entropy distribution with the given marginals, found by Newton's
/// method on the enumerated dual (exact Hessian) to residual `tol`.
EnumeratedDistribution enumerate_maxent_marginals(const RVec& q_target, double tol = 1e-12, int max_iter = 200);

/// Index of a sorted subset in the lexicographic order used above.
std::size_t subset_rank(const std::vector<int>& subset, int n);

/// T_k(v) = max over unit m of <m, v>^2 - ||m||_(k)^2 by projected supergradient
/// ascent from `restarts` random starts (plus `start` if given). Each run is
/// finished by an exact top-eigenvector solve on the face it settles on.
/// d <= 16. Restarts run in parallel on streams derived from one draw of
/// `rng`. `argmax` is reported against |v| sorted nonincreasing.
double brute_force_Tk(const RVec& v, int k, int restarts, Rng& rng, const std::optional<RVec>& start = std::nullopt,
                      RVec* argmax = nullptr);

/// The same maximum computed exactly by enumerating the faces of the sorted
/// nonnegative cone (blocks of equal entries, optional zero tail) and taking
/// the best feasible top eigenvector. O(2^d) eigenproblems; d <= 16.
double face_enumeration_Tk(const RVec& v, int k);

struct MomentReport
{
    double mean_estimate = 0.0;      ///< mean of w^dagger M w
    double sample_variance = 0.0;
    double variance_std_error = 0.0; ///< of the sample variance
    double mean_trace_distance = 0.0;
    double trace_distance_std_error = 0.0;
    int n_samples = 0;
    double sigma_trace_distance = 0.0; ///< T(v, sigma)
    double bias_bound = 0.0;           ///< sqrt(T(v, sigma))
    double variance_bound = 0.0;       ///< T (1 + sqrt(T))^2
};

/// Draws n states from the ensemble, with chunk c of 1024 draws using
/// derived_stream(seed, c), so serial and parallel runs agree exactly.
/// `op` is a Hermitian operator in the canonical basis with norm <= 1.
/// T(v, sigma) is computed from the dense second moment unless given.
MomentReport monte_carlo_moments(const SparseEnsemble& ens, const CMat& op, int n, std::uint64_t seed,
                                 Exec exec = Exec::parallel, std::optional<double> sigma_trace_distance = std::nullopt);

} // namespace rtrunc::oracle
