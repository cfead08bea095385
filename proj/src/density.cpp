#include "rtrunc/density.hpp"

#include <cmath>
#include <string>

#include "rtrunc/error.hpp"
#include "rtrunc/specvec.hpp"

namespace rtrunc {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kTraceTol = 1e-10;
constexpr double kPsdTol = 1e-10;

} // namespace

RVec hermitian_eigenvalues(const RMat& m)
{
    Eigen::SelfAdjointEigenSolver<RMat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

RVec hermitian_eigenvalues(const CMat& m)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

template <typename Scalar>
BasicDensityMatrix<Scalar>::BasicDensityMatrix(Matrix entries, bool validate) : entries_(std::move(entries))
{
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
        throw InvalidInput("density matrix must be square and nonempty");
    }
    if (!validate) {
        return;
    }
    const auto diag = diagnostics();
    if (diag.hermitian_error > kHermitianTol) {
        throw InternalConsistencyError("density matrix not Hermitian (error " + std::to_string(diag.hermitian_error) + ")");
    }
    if (diag.trace_error > kTraceTol) {
        throw InternalConsistencyError("density matrix trace off by " + std::to_string(diag.trace_error));
    }
    if (diag.min_eigenvalue < -kPsdTol) {
        throw InternalConsistencyError("density matrix has eigenvalue " + std::to_string(diag.min_eigenvalue));
    }
}

template <typename Scalar>
BasicDensityMatrix<Scalar> BasicDensityMatrix<Scalar>::pure(const Vector& v)
{
    const double n = v.norm();
    if (n == 0.0) {
        throw InvalidInput("pure: zero vector");
    }
    const Vector u = v / n;
    return BasicDensityMatrix(u * u.adjoint(), false);
}

template <typename Scalar>
DensityDiagnostics BasicDensityMatrix<Scalar>::diagnostics() const
{
    DensityDiagnostics d;
    d.hermitian_error = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
    d.trace_error = std::abs(std::real(entries_.trace()) - 1.0);
    const Matrix h = (entries_ + entries_.adjoint()) / 2.0;
    d.min_eigenvalue = hermitian_eigenvalues(h).minCoeff();
    return d;
}

template class BasicDensityMatrix<double>;
template class BasicDensityMatrix<cplx>;

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma)
{
    if (rho.dim() != sigma.dim()) {
        throw InvalidInput("trace_distance: dimension mismatch");
    }
    const CMat diff = rho.matrix() - sigma.matrix();
    return 0.5 * hermitian_eigenvalues(CMat((diff + diff.adjoint()) / 2.0)).cwiseAbs().sum();
}

double trace_distance(const RealDensityMatrix& rho, const RealDensityMatrix& sigma)
{
    if (rho.dim() != sigma.dim()) {
        throw InvalidInput("trace_distance: dimension mismatch");
    }
    const RMat diff = rho.matrix() - sigma.matrix();
    return 0.5 * hermitian_eigenvalues(RMat((diff + diff.transpose()) / 2.0)).cwiseAbs().sum();
}

double trace_distance(const RVec& v, const RealDensityMatrix& sigma)
{
    if (v.size() != sigma.dim()) {
        throw InvalidInput("trace_distance: dimension mismatch");
    }
    const RVec u = v / v.norm();
    RMat diff = u * u.transpose() - sigma.matrix();
    diff = (diff + diff.transpose()) / 2.0;
    return 0.5 * hermitian_eigenvalues(diff).cwiseAbs().sum();
}

CMat to_original_basis(const RMat& m, const CanonicalVector& canon)
{
    const auto d = static_cast<Eigen::Index>(canon.dim());
    if (m.rows() != d || m.cols() != d) {
        throw InvalidInput("to_original_basis: dimension mismatch");
    }
    const auto& perm = canon.perm();
    const auto& ph = canon.phases();
    CMat out(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        const int pa = perm[static_cast<std::size_t>(a)];
        for (Eigen::Index b = 0; b < d; ++b) {
            const int pb = perm[static_cast<std::size_t>(b)];
            out(pa, pb) = ph[pa] * m(a, b) * std::conj(ph[pb]);
        }
    }
    return out;
}

} // namespace rtrunc
