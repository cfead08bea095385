#include <doctest.h>

#include <cmath>

#include "rtrunc/error.hpp"
#include "rtrunc/mps.hpp"
#include "test_util.hpp"

using namespace rtrunc;
using doctest::Approx;

namespace {

mps::MPSState ghz(int n)
{
    mps::MPSState s;
    s.n = n;
    s.phys_dim = 2;
    s.sites.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const int rows = j == 0 ? 1 : 2;
        const int cols = j == n - 1 ? 1 : 2;
        for (int p = 0; p < 2; ++p) {
            CMat a = CMat::Zero(rows, cols);
            a(rows == 1 ? 0 : p, cols == 1 ? 0 : p) = j == n - 1 ? 1.0 / std::sqrt(2.0) : 1.0;
            s.sites[static_cast<std::size_t>(j)].push_back(a);
        }
    }
    return s;
}

CMat pauli_z()
{
    CMat z = CMat::Zero(2, 2);
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;
    return z;
}

double dense_z(const CVec& psi, int n, int site)
{
    double acc = 0.0;
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        const int bit = static_cast<int>((i >> (n - 1 - site)) & 1);
        acc += (bit ? -1.0 : 1.0) * std::norm(psi[i]);
    }
    return acc;
}

} // namespace

TEST_SUITE("mps")
{
    TEST_CASE("random chain is normalized and reproducible")
    {
        Rng a(5), b(5);
        const auto s1 = mps::random_mps(8, 2, 6, a);
        const auto s2 = mps::random_mps(8, 2, 6, b);
        CHECK(std::abs(mps::overlap(s1, s1)) == Approx(1.0).epsilon(1e-12));
        CHECK((mps::to_dense(s1) - mps::to_dense(s2)).norm() == 0.0);
        CHECK(s1.bond_dims() == std::vector<int>{1, 2, 4, 6, 6, 6, 4, 2, 1});
        CHECK(mps::isometry_residual(s1) <= 1e-12);
        CHECK(mps::to_dense(s1).norm() == Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("GHZ spectra and expectations")
    {
        const auto g = ghz(5);
        const CVec psi = mps::to_dense(g);
        CHECK(std::abs(psi[0]) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
        CHECK(std::abs(psi[31]) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
        for (int m = 1; m < 5; ++m) {
            const auto c = mps::canonicalize_mps(g, m);
            REQUIRE(c.spectrum.size() == 2);
            CHECK(c.spectrum[0] == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
            CHECK(c.spectrum[1] == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
            CHECK(mps::isometry_residual(c) <= 1e-12);
        }
        for (int site = 0; site < 5; ++site) {
            CHECK(mps::expectation_single_site(g, site, pauli_z()) == Approx(0.0).scale(1.0).epsilon(1e-14));
        }
    }

    TEST_CASE("all-zero product state")
    {
        mps::MPSState s;
        s.n = 4;
        s.sites.resize(4);
        for (auto& site : s.sites) {
            site = {CMat::Ones(1, 1), CMat::Zero(1, 1)};
        }
        for (int j = 0; j < 4; ++j) {
            CHECK(mps::expectation_single_site(s, j, pauli_z()) == Approx(1.0).epsilon(1e-14));
        }
    }

    TEST_CASE("expectation matches the dense vector")
    {
        Rng rng(7);
        const auto s = mps::random_mps(7, 2, 5, rng);
        const CVec psi = mps::to_dense(s);
        for (int site = 0; site < 7; ++site) {
            CHECK(mps::expectation_single_site(s, site, pauli_z()) == Approx(dense_z(psi, 7, site)).epsilon(1e-12));
        }
    }

    TEST_CASE("canonicalization preserves the state")
    {
        Rng rng(11);
        const auto s = mps::random_mps(6, 2, 8, rng);
        const CVec psi = mps::to_dense(s);
        for (int m = 1; m < 6; ++m) {
            const auto c = mps::canonicalize_mps(s, m);
            CHECK((mps::to_dense(c) - psi).norm() <= 1e-12);
            CHECK(c.spectrum.norm() == Approx(1.0).epsilon(1e-12));
            CHECK(mps::isometry_residual(c) <= 1e-12);
        }
    }

    TEST_CASE("power-law respectrum")
    {
        Rng rng(13);
        const auto s = mps::respectrum_power_law(mps::random_mps(8, 2, 16, rng), 0.5);
        CHECK(std::abs(mps::overlap(s, s)) == Approx(1.0).epsilon(1e-10));
        // the last bond replaced is read back exactly; earlier bonds may drift
        const auto c = mps::canonicalize_mps(s, 7);
        RVec expected(c.spectrum.size());
        for (Eigen::Index j = 0; j < expected.size(); ++j) {
            expected[j] = 1.0 / std::sqrt(static_cast<double>(j + 1));
        }
        expected.normalize();
        CHECK((c.spectrum - expected).cwiseAbs().maxCoeff() <= 1e-10);
        for (int m = 1; m < 8; ++m) {
            CHECK(mps::canonicalize_mps(s, m).spectrum.norm() == Approx(1.0).epsilon(1e-10));
        }
    }

    TEST_CASE("deterministic truncation keeps the top Schmidt values")
    {
        Rng rng(17);
        const auto s = mps::canonicalize_mps(mps::random_mps(8, 2, 16, rng), 4);
        for (int D = 1; D <= 16; ++D) {
            const auto t = mps::truncate_bond(s, 4, D, mps::Strategy::dtrunc, rng);
            const double keep = s.spectrum.head(std::min<Eigen::Index>(D, s.spectrum.size())).norm();
            CHECK(std::abs(mps::overlap(s, t)) == Approx(keep).epsilon(1e-10));
            CHECK(std::abs(mps::overlap(t, t)) == Approx(1.0).epsilon(1e-10));
            CHECK(t.bond_dims()[4] == std::min(D, 16));
        }
        // D at the full bond is the identity
        const auto same = mps::truncate_bond(s, 4, 16, mps::Strategy::rtrunc_td, rng);
        CHECK((mps::to_dense(same) - mps::to_dense(s)).norm() <= 1e-12);
    }

    TEST_CASE("randomized truncation respects the bond limit")
    {
        Rng rng(19);
        const auto s = mps::respectrum_power_law(mps::random_mps(8, 2, 16, rng), 0.3);
        for (auto strat : {mps::Strategy::rtrunc_td, mps::Strategy::rtrunc_rob}) {
            for (int t = 0; t < 10; ++t) {
                const auto out = mps::truncate_all(s, 4, strat, rng);
                for (int r : out.bond_dims()) {
                    CHECK(r <= 4);
                }
                CHECK(std::abs(mps::overlap(out, out)) == Approx(1.0).epsilon(1e-10));
            }
        }
    }

    TEST_CASE("wide D reproduces the exact expectation")
    {
        mps::ExperimentConfig cfg;
        cfg.n = 6;
        cfg.D = 8;
        cfg.seeds = {1};
        cfg.samples = 3;
        cfg.site = 2;
        cfg.strategies = {mps::Strategy::dtrunc, mps::Strategy::rtrunc_td, mps::Strategy::rtrunc_rob};
        for (const auto& rec : mps::run_experiment(cfg)) {
            CHECK(rec.estimate == Approx(rec.exact).epsilon(1e-10));
            CHECK(rec.dtrunc_fidelity == Approx(1.0).epsilon(1e-10));
        }
    }

    TEST_CASE("experiment is deterministic across execution modes")
    {
        mps::ExperimentConfig cfg;
        cfg.n = 7;
        cfg.seeds = {3, 4};
        cfg.samples = 6;
        cfg.site = 3;
        const auto a = mps::run_experiment(cfg, Exec::serial);
        const auto b = mps::run_experiment(cfg, Exec::parallel);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].estimate == b[i].estimate);
            CHECK(a[i].sample_std == b[i].sample_std);
            CHECK(a[i].D == b[i].D);
        }
    }

    TEST_CASE("strategy names and bad input")
    {
        for (auto s : {mps::Strategy::dtrunc, mps::Strategy::rtrunc_td, mps::Strategy::rtrunc_rob}) {
            CHECK(mps::strategy_from_string(mps::to_string(s)) == s);
        }
        CHECK_THROWS_AS(mps::strategy_from_string("nope"), InvalidInput);
        Rng rng(1);
        CHECK_THROWS_AS(mps::random_mps(1, 2, 2, rng), InvalidInput);
        const auto s = mps::random_mps(4, 2, 4, rng);
        CHECK_THROWS_AS(mps::truncate_bond(s, 0, 2, mps::Strategy::dtrunc, rng), InvalidInput);
        CHECK_THROWS_AS(mps::truncate_bond(s, 1, 0, mps::Strategy::dtrunc, rng), InvalidInput);
        CHECK_THROWS_AS(mps::expectation_single_site(s, 4, pauli_z()), InvalidInput);
    }
}
