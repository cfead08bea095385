#pragma once

#include "rtrunc/common.hpp"

namespace rtrunc {

struct DensityDiagnostics
{
    double hermitian_error = 0.0; ///< max |M - M^dagger| entry
    double trace_error = 0.0;     ///< |tr M - 1|
    double min_eigenvalue = 0.0;
};

/// Dense Hermitian unit-trace matrix. Construction validates the invariants
/// (Hermitian within 1e-12, unit trace within 1e-10, min eigenvalue at least
/// -1e-10) unless `validate` is false, in which case `diagnostics()` can be
/// called explicitly.
template <typename Scalar>
class BasicDensityMatrix
{
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    explicit BasicDensityMatrix(Matrix entries, bool validate = true);

    /// Projector onto a (normalized copy of a) pure state.
    static BasicDensityMatrix pure(const Vector& v);

    Eigen::Index dim() const { return entries_.rows(); }
    const Matrix& matrix() const { return entries_; }

    DensityDiagnostics diagnostics() const;

private:
    Matrix entries_;
};

using DensityMatrix = BasicDensityMatrix<cplx>;
using RealDensityMatrix = BasicDensityMatrix<double>;

/// Trace distance: half the sum of absolute eigenvalues of the difference.
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);
double trace_distance(const RealDensityMatrix& rho, const RealDensityMatrix& sigma);

/// Trace distance between the pure state v and sigma, without materializing
/// a second density matrix object.
double trace_distance(const RVec& v, const RealDensityMatrix& sigma);

/// Eigenvalues (ascending) of a Hermitian difference matrix.
RVec hermitian_eigenvalues(const RMat& m);
RVec hermitian_eigenvalues(const CMat& m);

/// Lift a real matrix given in canonical order back to original coordinates:
/// out[perm[a], perm[b]] = phase[perm[a]] * m[a, b] * conj(phase[perm[b]]).
class CanonicalVector;
CMat to_original_basis(const RMat& m, const CanonicalVector& canon);

} // namespace rtrunc
