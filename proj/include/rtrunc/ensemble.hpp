#pragma once

#include <optional>
#include <vector>

#include "rtrunc/common.hpp"
#include "rtrunc/maxent.hpp"
#include "rtrunc/specvec.hpp"

namespace rtrunc {

enum class EnsembleKind
{
    trace_distance,
    robustness,
};

/// A random k-sparse real state in canonical order:
///   w(S) = (prefix + amp * sum_{j in S} e_j) / norm_const
/// where S is a size-(r+1) subset of the window drawn from a max-entropy
/// subset distribution with the stored marginals. Window items whose
/// marginal is numerically 0 or 1 are excluded or always included, and the
/// model covers only the remaining free items.
struct SparseEnsemble
{
    EnsembleKind kind = EnsembleKind::trace_distance;
    CanonicalVector canon;
    int k = 1;

    RVec prefix;          ///< amplitudes for canonical positions [0, prefix.size())
    int window_begin = 0; ///< canonical positions [window_begin, window_end)
    int window_end = 0;
    double window_amp = 0.0;
    int subset_size = 0; ///< r + 1
    RVec marginals;      ///< target marginals over the window
    double norm_const = 1.0;

    std::vector<int> forced;     ///< window-relative, always included
    std::vector<int> free_items; ///< window-relative, covered by the model
    std::optional<maxent::MaxEntModel> model;
    double fit_residual = 0.0;
    int fit_iterations = 0;

    bool deterministic() const { return !model.has_value(); }
    int window_size() const { return window_end - window_begin; }
    int dim() const { return static_cast<int>(canon.dim()); }
};

/// Builds the ensemble: peels marginals within 1e-9 of 0 or 1, checks that
/// the marginals sum to subset_size within 1e-8, and fits the max-entropy
/// weights over the free items. A marginal outside [-1e-9, 1 + 1e-9] raises
/// InternalConsistencyError.
SparseEnsemble make_ensemble(EnsembleKind kind, const CanonicalVector& canon, int k, RVec prefix,
                             int window_begin, int window_end, double window_amp, RVec marginals,
                             double norm_const, const maxent::FitOptions& fit);

/// Ensemble that always returns `state` (canonical order, normalized).
SparseEnsemble point_mass_ensemble(EnsembleKind kind, const CanonicalVector& canon, int k, const RVec& state);

/// Window-relative sorted subset; O(window) per call.
std::vector<int> sample_subset(const SparseEnsemble& ens, Rng& rng);

/// The state w(S) for a given window-relative subset, canonical order.
RVec state_for_subset(const SparseEnsemble& ens, const std::vector<int>& subset);

/// One random state, canonical order, unit norm.
RVec sample_state(const SparseEnsemble& ens, Rng& rng);

/// Inclusion marginals actually realized by the sampler over the window
/// (fitted values for free items, 0/1 for peeled ones).
RVec realized_marginals(const SparseEnsemble& ens);

/// Pair marginals over the window, including peeled items.
RMat window_pair_marginals(const SparseEnsemble& ens, Exec exec = Exec::parallel);

/// E[w w^T] in the canonical basis, assembled from the prefix, marginals and
/// pair marginals (dense d x d).
RMat second_moment(const SparseEnsemble& ens, Exec exec = Exec::parallel);

} // namespace rtrunc
