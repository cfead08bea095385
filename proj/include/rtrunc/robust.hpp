#pragma once

#include "rtrunc/common.hpp"
#include "rtrunc/density.hpp"
#include "rtrunc/ensemble.hpp"
#include "rtrunc/specvec.hpp"

// Robustness-optimal k-sparse mixture. With r from the k-support norm and
// a = s_{k-r} / (r+1), the ensemble draws
//   u(S) = sum_{i < k-r} v_i e_i + a sum_{j in S} e_j
// with inclusion marginals q_i = v_i / a over the window i >= k-r, and
// normalizes by sqrt(1 + R_k).

namespace rtrunc::robust {

struct DeltaCertificate
{
    double min_diag = 0.0;
    double max_offdiag = 0.0;
    double max_abs_rowsum = 0.0;

    bool passes(double diag_tol = 1e-12, double offdiag_tol = 1e-12, double rowsum_tol = 1e-10) const
    {
        return min_diag >= -diag_tol && max_offdiag <= offdiag_tol && max_abs_rowsum <= rowsum_tol;
    }
};

/// Weight fit defaults tighter than the generic ones so that the certificate
/// tolerances hold.
inline maxent::FitOptions default_fit()
{
    return {1e-13, 200};
}

SparseEnsemble build_ensemble(const CanonicalVector& canon, int k, const maxent::FitOptions& fit = default_fit());

struct TauResult
{
    RealDensityMatrix tau; ///< canonical basis
    DeltaCertificate cert; ///< on (1 + R_k) tau - v v^T
    double robustness;     ///< R_k
};

/// Dense tau and the certificate. Throws InternalConsistencyError if the
/// certificate fails its tolerances.
TauResult density_matrix(const SparseEnsemble& ens, Exec exec = Exec::parallel);

DeltaCertificate delta_certificate(const RMat& delta);

RVec sample_state(const SparseEnsemble& ens, Rng& rng);

} // namespace rtrunc::robust
