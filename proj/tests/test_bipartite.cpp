#include <doctest.h>

#include <cmath>

#include "rtrunc/bipartite.hpp"
#include "rtrunc/error.hpp"
#include "rtrunc/robust.hpp"
#include "rtrunc/tracedist.hpp"
#include "test_util.hpp"

using namespace rtrunc;
using doctest::Approx;

namespace {

int numerical_rank(const CVec& coeffs, int a, int b)
{
    CMat M(a, b);
    for (int i = 0; i < a; ++i) {
        for (int j = 0; j < b; ++j) {
            M(i, j) = coeffs[i * b + j];
        }
    }
    const RVec s = Eigen::JacobiSVD<CMat>(M).singularValues();
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        r += s[i] > 1e-10;
    }
    return r;
}

} // namespace

TEST_SUITE("bipartite")
{
    TEST_CASE("product state has one Schmidt coefficient")
    {
        Rng rng(1);
        const CVec x = testutil::random_complex(3, rng);
        const CVec y = testutil::random_complex(4, rng);
        CVec psi(12);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 4; ++j) {
                psi[i * 4 + j] = x[i] * y[j];
            }
        }
        const auto st = bipartite::schmidt(psi, 3, 4);
        CHECK(st.rank() == 1);
        CHECK(st.schmidt[0] == Approx(1.0).epsilon(1e-12));
        for (int k = 1; k <= 3; ++k) {
            CHECK(bipartite::solve_entangled(st, k, bipartite::Mode::trace).value == 0.0);
        }
    }

    TEST_CASE("Bell state")
    {
        CVec psi = CVec::Zero(4);
        psi[0] = psi[3] = 1.0 / std::sqrt(2.0);
        const auto st = bipartite::schmidt(psi, 2, 2);
        CHECK(st.schmidt[0] == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        CHECK(st.schmidt[1] == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        const auto td = bipartite::solve_entangled(st, 1, bipartite::Mode::trace);
        CHECK(td.value == Approx(0.5).epsilon(1e-12));
        const auto rob = bipartite::solve_entangled(st, 1, bipartite::Mode::robust);
        CHECK(rob.value == Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("maximally entangled states")
    {
        for (int d : {3, 5, 8}) {
            CVec psi = CVec::Zero(d * d);
            for (int i = 0; i < d; ++i) {
                psi[i * d + i] = 1.0 / std::sqrt(static_cast<double>(d));
            }
            const auto st = bipartite::schmidt(psi, d, d);
            for (int k = 1; k < d; ++k) {
                CHECK(bipartite::solve_entangled(st, k, bipartite::Mode::trace).value ==
                      Approx(1.0 - static_cast<double>(k) / d).epsilon(1e-10));
                CHECK(bipartite::solve_entangled(st, k, bipartite::Mode::robust).value ==
                      Approx(static_cast<double>(d) / k - 1.0).epsilon(1e-10));
            }
        }
    }

    TEST_CASE("decomposition reconstructs the matrix")
    {
        Rng rng(3);
        const CVec psi = testutil::random_complex(12, rng);
        const auto st = bipartite::schmidt(psi, 3, 4);
        CHECK(st.schmidt.size() == 3);
        CHECK(!st.renormalized);
        const CMat rebuilt = st.left_basis * st.schmidt.cast<cplx>().asDiagonal() * st.right_basis.adjoint();
        CHECK((rebuilt - st.matrixized).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((bipartite::lift_state(st, st.schmidt) - psi).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(bipartite::schmidt(2.0 * psi, 3, 4).renormalized);
    }

    TEST_CASE("local unitaries leave T_k unchanged")
    {
        Rng rng(5);
        const CVec psi = testutil::random_complex(20, rng);
        CMat G(4, 4), H(5, 5);
        for (int i = 0; i < 4; ++i) {
            G.col(i) = testutil::random_complex(4, rng);
        }
        for (int i = 0; i < 5; ++i) {
            H.col(i) = testutil::random_complex(5, rng);
        }
        const CMat U = Eigen::HouseholderQR<CMat>(G).householderQ();
        const CMat V = Eigen::HouseholderQR<CMat>(H).householderQ();
        CVec rotated(20);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 5; ++j) {
                cplx acc = 0.0;
                for (int p = 0; p < 4; ++p) {
                    for (int q = 0; q < 5; ++q) {
                        acc += U(i, p) * V(j, q) * psi[p * 5 + q];
                    }
                }
                rotated[i * 5 + j] = acc;
            }
        }
        const auto s1 = bipartite::schmidt(psi, 4, 5);
        const auto s2 = bipartite::schmidt(rotated, 4, 5);
        for (int k = 1; k <= 3; ++k) {
            CHECK(bipartite::solve_entangled(s1, k, bipartite::Mode::trace).value ==
                  Approx(bipartite::solve_entangled(s2, k, bipartite::Mode::trace).value).epsilon(1e-10));
        }
    }

    TEST_CASE("samples have Schmidt rank at most k")
    {
        Rng rng(7);
        const CVec psi = testutil::random_complex(30, rng);
        const auto st = bipartite::schmidt(psi, 5, 6);
        for (auto mode : {bipartite::Mode::trace, bipartite::Mode::robust}) {
            const auto res = bipartite::solve_entangled(st, 2, mode);
            for (int t = 0; t < 50; ++t) {
                const CVec s = bipartite::sample_low_rank_state(st, res.ensemble, rng);
                CHECK(s.norm() == Approx(1.0).epsilon(1e-10));
                CHECK(numerical_rank(s, 5, 6) <= 2);
            }
        }
    }

    TEST_CASE("lifted sigma is the sampled second moment")
    {
        Rng rng(9);
        const CVec psi = testutil::random_complex(12, rng);
        const auto st = bipartite::schmidt(psi, 3, 4);
        const auto res = bipartite::solve_entangled(st, 2, bipartite::Mode::trace);
        const RMat sigma = second_moment(res.ensemble);
        const CMat rho = bipartite::lift_density(st, sigma);
        CHECK(rho.trace().real() == Approx(1.0).epsilon(1e-10));
        // trace distance to the pure state is preserved by the isometry
        const CMat diff = psi * psi.adjoint() - rho;
        const RVec ev = hermitian_eigenvalues(diff);
        CHECK(0.5 * ev.cwiseAbs().sum() == Approx(res.value).epsilon(1e-9));

        CMat mc = CMat::Zero(12, 12);
        const int n = 40000;
        for (int t = 0; t < n; ++t) {
            const CVec s = bipartite::sample_low_rank_state(st, res.ensemble, rng);
            mc += s * s.adjoint();
        }
        mc /= n;
        CHECK((mc - rho).cwiseAbs().maxCoeff() <= 0.02);
    }

    TEST_CASE("invalid input")
    {
        CHECK_THROWS_AS(bipartite::schmidt(CVec::Zero(6), 2, 3), InvalidInput);
        CHECK_THROWS_AS(bipartite::schmidt(CVec::Ones(5), 2, 3), InvalidInput);
        const auto st = bipartite::schmidt(CVec::Ones(6), 2, 3);
        CHECK_THROWS_AS(bipartite::solve_entangled(st, 3, bipartite::Mode::trace), InvalidInput);
        CHECK_THROWS_AS(bipartite::lift_state(st, RVec::Ones(3)), InvalidInput);
    }
}
