#pragma once

#include <span>
#include <vector>

#include "rtrunc/common.hpp"

namespace rtrunc {

/// A unit vector split into sorted magnitudes, the permutation that sorted
/// them, and the per-coordinate phases.
///
/// Canonical position `c` holds magnitude `values()[c]`, which came from
/// original coordinate `perm()[c]`. `phases()` is indexed by original
/// coordinate. Zero entries are kept at the tail with phase 1.
class CanonicalVector
{
public:
    /// Empty placeholder; only useful as a target for assignment.
    CanonicalVector() = default;

    /// Normalizes `v` and sorts magnitudes nonincreasing (stable, so ties keep
    /// their original order). Throws InvalidInput for zero or non-finite input.
    static CanonicalVector from(const CVec& v);
    static CanonicalVector from(const RVec& v);

    /// Builds directly from magnitudes that are already sorted nonincreasing
    /// and nonnegative (e.g. Schmidt coefficients). Renormalizes.
    static CanonicalVector from_sorted(const RVec& values);

    std::size_t dim() const { return static_cast<std::size_t>(values_.size()); }
    const RVec& values() const { return values_; }
    const std::vector<int>& perm() const { return perm_; }
    const CVec& phases() const { return phases_; }

    /// Number of strictly positive magnitudes.
    std::size_t support() const { return support_; }

    /// Tail sums s[j] = sum_{i >= j} values[i] for j = 0..d, with s[d] = 0.
    /// (0-based; s[0] is the l1 norm.)
    const std::vector<double>& tail_sums() const { return tail_sums_; }

    /// The original vector, normalized.
    CVec original() const;

private:
    void finish();

    RVec values_;
    std::vector<int> perm_;
    CVec phases_;
    std::vector<double> tail_sums_;
    std::size_t support_ = 0;
};

/// Maps a real vector given in canonical order back to original coordinates,
/// re-attaching the phases.
CVec restore(const RVec& w, const CanonicalVector& canon);

struct KSupportResult
{
    double value = 0.0; ///< the k-support norm
    int r = 0;          ///< active window is the last r+1 slots of the top k
};

/// Top-k norm, i.e. the best k-sparse fidelity F_k.
double top_k_norm(const CanonicalVector& canon, int k);
/// Top-k norm of an arbitrary real vector (magnitudes are sorted internally).
double top_k_norm(std::span<const double> x, int k);

/// k-support norm of a sorted nonnegative vector via the window condition.
KSupportResult k_support_norm(const CanonicalVector& canon, int k);
KSupportResult k_support_norm(std::span<const double> x, int k);

/// Same as above for magnitudes already sorted nonincreasing with matching
/// 0-based tail sums (length d+1).
KSupportResult k_support_norm_sorted(std::span<const double> sorted,
                                     std::span<const double> tail_sums, int k);

double fidelity_k(const CanonicalVector& canon, int k);
double robustness_k(const CanonicalVector& canon, int k);

} // namespace rtrunc
