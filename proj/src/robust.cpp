#include "rtrunc/robust.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rtrunc/error.hpp"

namespace rtrunc::robust {

SparseEnsemble build_ensemble(const CanonicalVector& canon, int k, const maxent::FitOptions& fit)
{
    const auto ks = k_support_norm(canon, k);
    const int n = static_cast<int>(canon.support());
    const RVec& v = canon.values();
    if (n <= k) {
        return point_mass_ensemble(EnsembleKind::robustness, canon, k, v);
    }
    const int r = ks.r;
    const int p = k - r - 1;
    const double amp = canon.tail_sums()[static_cast<std::size_t>(p)] / (r + 1);
    RVec q(n - p);
    for (int j = p; j < n; ++j) {
        q[j - p] = v[j] / amp;
    }
    return make_ensemble(EnsembleKind::robustness, canon, k, v.head(p), p, n, amp, std::move(q), ks.value, fit);
}

DeltaCertificate delta_certificate(const RMat& delta)
{
    DeltaCertificate c;
    const auto d = delta.rows();
    c.min_diag = delta.diagonal().minCoeff();
    c.max_offdiag = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i != j) {
                c.max_offdiag = std::max(c.max_offdiag, delta(i, j));
            }
        }
    }
    if (d == 1) {
        c.max_offdiag = 0.0;
    }
    c.max_abs_rowsum = delta.rowwise().sum().cwiseAbs().maxCoeff();
    return c;
}

TauResult density_matrix(const SparseEnsemble& ens, Exec exec)
{
    const RVec& v = ens.canon.values();
    RealDensityMatrix tau(second_moment(ens, exec));
    const double scale = ens.norm_const * ens.norm_const;
    const RMat delta = scale * tau.matrix() - v * v.transpose();
    const auto cert = delta_certificate(delta);
    if (!cert.passes()) {
        std::ostringstream os;
        os << "robustness certificate failed: min_diag=" << cert.min_diag << " max_offdiag=" << cert.max_offdiag
           << " max_abs_rowsum=" << cert.max_abs_rowsum;
        throw InternalConsistencyError(os.str());
    }
    return {std::move(tau), cert, std::max(0.0, scale - 1.0)};
}

RVec sample_state(const SparseEnsemble& ens, Rng& rng)
{
    return rtrunc::sample_state(ens, rng);
}

} // namespace rtrunc::robust
