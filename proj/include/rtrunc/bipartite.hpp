#pragma once

#include "rtrunc/common.hpp"
#include "rtrunc/ensemble.hpp"
#include "rtrunc/specvec.hpp"

// Schmidt-rank-k approximation of a bipartite pure state reduces to the
// k-sparse problem on its Schmidt coefficient vector.

namespace rtrunc::bipartite {

struct BipartiteState
{
    int a = 0;
    int b = 0;
    CMat matrixized;   ///< a x b, entry (i, j) = coefficient i * b + j
    RVec schmidt;      ///< nonincreasing, unit norm, entries below 1e-14 zeroed
    CMat left_basis;   ///< a x min(a, b), column i is x_i
    CMat right_basis;  ///< b x min(a, b), column i is y_i with M = X diag(s) Y^dagger
    bool renormalized = false; ///< input norm was off by more than 1e-6

    int rank() const;
    CanonicalVector coefficient_vector() const { return CanonicalVector::from_sorted(schmidt); }
};

/// SVD of the a x b matrixization of `coeffs` (row-major, index i * b + j).
BipartiteState schmidt(const CVec& coeffs, int a, int b);

enum class Mode
{
    trace,
    robust,
};

struct EntangledResult
{
    double value = 0.0; ///< T_k or R_k of the Schmidt vector
    SparseEnsemble ensemble;
};

EntangledResult solve_entangled(const BipartiteState& state, int k, Mode mode,
                                const maxent::FitOptions& fit = {});

/// Coefficients (length a * b) of sum_i w_i x_i (x) conj(y_i) for a coefficient vector w over
/// Schmidt indices.
CVec lift_state(const BipartiteState& state, const RVec& w);

/// Draws one Schmidt-rank <= k state from the ensemble.
CVec sample_low_rank_state(const BipartiteState& state, const SparseEnsemble& ens, Rng& rng);

/// Maps an operator on the Schmidt index space to the full a*b space,
/// rho = V sigma V^dagger with V_{(i,j), t} = X_{i t} conj(Y_{j t}).
CMat lift_density(const BipartiteState& state, const RMat& sigma);

} // namespace rtrunc::bipartite
