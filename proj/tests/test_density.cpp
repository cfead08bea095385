#include <doctest.h>

#include "rtrunc/density.hpp"
#include "rtrunc/error.hpp"
#include "rtrunc/specvec.hpp"
#include "test_util.hpp"

using namespace rtrunc;
using doctest::Approx;

TEST_SUITE("density")
{
    TEST_CASE("validation rejects malformed matrices")
    {
        RMat m(2, 2);
        m << 0.5, 0.1, 0.2, 0.5;
        CHECK_THROWS_AS(RealDensityMatrix{m}, InternalConsistencyError);
        m << 0.7, 0.0, 0.0, 0.7;
        CHECK_THROWS_AS(RealDensityMatrix{m}, InternalConsistencyError);
        m << 1.5, 0.0, 0.0, -0.5;
        CHECK_THROWS_AS(RealDensityMatrix{m}, InternalConsistencyError);
        CHECK_THROWS_AS(RealDensityMatrix(RMat(2, 3)), InvalidInput);
        CHECK_NOTHROW(RealDensityMatrix(m, false));
    }

    TEST_CASE("pure states and diagnostics")
    {
        Rng rng(2);
        const CVec v = testutil::random_complex(5, rng) * 3.0;
        const auto rho = DensityMatrix::pure(v);
        const auto diag = rho.diagnostics();
        CHECK(diag.hermitian_error < 1e-15);
        CHECK(diag.trace_error < 1e-14);
        CHECK(diag.min_eigenvalue > -1e-14);
        CHECK_THROWS_AS(DensityMatrix::pure(CVec::Zero(3)), InvalidInput);
    }

    TEST_CASE("pure-versus-mixed trace distance matches the dense computation")
    {
        Rng rng(3);
        for (int t = 0; t < 10; ++t) {
            const RVec v = testutil::random_real(4, rng);
            const RVec w = testutil::random_real(4, rng);
            const RVec x = testutil::random_real(4, rng);
            const RMat sigma = 0.3 * w * w.transpose() + 0.7 * x * x.transpose();
            const RealDensityMatrix s(sigma);
            const double dense = trace_distance(RealDensityMatrix::pure(v), s);
            CHECK(trace_distance(v, s) == Approx(dense).epsilon(1e-12));
        }
    }

    TEST_CASE("mapping back to the original basis conjugates by phases and permutation")
    {
        CVec v(3);
        v << cplx(0, 0.2), -0.9, 0.4;
        const auto c = CanonicalVector::from(v);
        const RMat canon_proj = c.values() * c.values().transpose();
        const CMat orig = to_original_basis(canon_proj, c);
        const CVec u = v.normalized();
        CHECK((orig - u * u.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    }

    TEST_CASE("eigenvalues ascend")
    {
        RMat m(2, 2);
        m << 2.0, 1.0, 1.0, 2.0;
        const RVec e = hermitian_eigenvalues(m);
        CHECK(e[0] == Approx(1.0));
        CHECK(e[1] == Approx(3.0));
    }
}
