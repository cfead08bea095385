#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "rtrunc/error.hpp"
#include "rtrunc/maxent.hpp"
#include "rtrunc/oracle.hpp"
#include "frozen_values.hpp"
#include "test_util.hpp"

using namespace rtrunc;
using namespace rtrunc::maxent;
using doctest::Approx;

namespace {

RVec random_mu(int n, Rng& rng, double spread = 2.0)
{
    std::uniform_real_distribution<double> u(-spread, spread);
    RVec mu(n);
    for (int i = 0; i < n; ++i) {
        mu[i] = u(rng);
    }
    return mu;
}

std::span<const double> span_of(const RVec& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Random feasible marginals: the marginals of a random model.
RVec random_marginals(int n, int ell, Rng& rng)
{
    const RVec mu = random_mu(n, rng, 3.0);
    return marginals(build_model(span_of(mu), ell));
}

double binom(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

} // namespace

TEST_SUITE("maxent")
{
    TEST_CASE("uniform weights count subsets")
    {
        const RVec mu = RVec::Zero(5);
        const auto m = build_model(span_of(mu), 2);
        CHECK(std::exp(m.log_z_unshifted()) == Approx(10.0).epsilon(1e-13));
        CHECK(m.mu().array().exp().inverse().sum() == Approx(2.0).epsilon(1e-14));
        const RVec q = marginals(m);
        for (int i = 0; i < 5; ++i) {
            CHECK(q[i] == Approx(0.4).epsilon(1e-14));
        }
    }

    TEST_CASE("single item")
    {
        RVec mu(1);
        mu << 0.7;
        const auto m = build_model(span_of(mu), 1);
        CHECK(std::exp(m.log_z_unshifted()) == Approx(std::exp(-0.7)).epsilon(1e-14));
        CHECK(marginals(m)[0] == Approx(1.0));
        Rng rng(1);
        CHECK(sample_sequential(m, rng).items == std::vector<int>{0});
        CHECK(sample_glauber(m, rng).items == std::vector<int>{0});
    }

    TEST_CASE("partition value matches enumeration")
    {
        Rng rng(2);
        for (int t = 0; t < 10; ++t) {
            const RVec mu = random_mu(10, rng);
            const auto m = build_model(span_of(mu), 4);
            const auto e = oracle::enumerate_maxent(mu, 4);
            CHECK(e.subsets.size() == 210);
            CHECK(std::exp(m.log_z_unshifted()) == Approx(e.z).epsilon(1e-10));
        }
    }

    TEST_CASE("bad inputs")
    {
        const RVec mu = RVec::Zero(3);
        CHECK_THROWS_AS(build_model(span_of(mu), 0), InvalidInput);
        CHECK_THROWS_AS(build_model(span_of(mu), 4), InvalidInput);
        RVec bad = mu;
        bad[1] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(build_model(span_of(bad), 1), InvalidInput);
    }

    TEST_CASE("recursion table boundary values and binomials")
    {
        const RVec mu = RVec::Zero(6);
        const auto tab = partition_recursive(span_of(mu), 3);
        for (int i = 0; i <= 6; ++i) {
            CHECK(tab.z(0, i) == 1.0);
            for (int a = 1; a <= 3; ++a) {
                CHECK(tab.z(a, i) == Approx(binom(6 - i, a)));
            }
        }
    }

    TEST_CASE("power-sum recursion")
    {
        RVec mu(4);
        mu << 0.1, -0.3, 0.7, 1.2;
        CHECK(partition_power_sums(span_of(mu), 1) == Approx(mu.array().operator-().exp().sum()).epsilon(1e-14));
        const RVec zero = RVec::Zero(6);
        CHECK(partition_power_sums(span_of(zero), 3) == Approx(20.0).epsilon(1e-13));
        Rng rng(3);
        for (int n : {12, 20, 30}) {
            const RVec m = random_mu(n, rng, 1.0);
            const int ell = n / 2 - 1;
            const double rec = std::exp(partition_recursive(span_of(m), ell).log_z(ell, 0));
            CHECK(partition_power_sums(span_of(m), ell) == Approx(rec).epsilon(1e-9));
        }
    }

    TEST_CASE("marginal examples")
    {
        const RVec c = RVec::Constant(7, 1.3);
        const RVec q = marginals(build_model(span_of(c), 3));
        for (int i = 0; i < 7; ++i) {
            CHECK(q[i] == Approx(3.0 / 7.0).epsilon(1e-14));
        }
        RVec mu(2);
        mu << 0.0, std::log(3.0);
        const RVec q2 = marginals(build_model(span_of(mu), 1));
        CHECK(q2[0] == Approx(0.75).epsilon(1e-14));
        CHECK(q2[1] == Approx(0.25).epsilon(1e-14));
    }

    TEST_CASE("marginals and pair marginals match enumeration")
    {
        Rng rng(4);
        for (int t = 0; t < 20; ++t) {
            const int n = 2 + t % 9;
            const int ell = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
            RVec mu = random_mu(n, rng);
            if (n >= 4 && t % 2 == 0) {
                mu[3 % n] = mu[1]; // exact tie
            }
            const auto m = build_model(span_of(mu), ell);
            const auto e = oracle::enumerate_maxent(mu, ell);
            CHECK((marginals(m) - e.q).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((pair_marginals(m) - e.Q).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((pair_marginals(m, Exec::serial) - pair_marginals(m, Exec::parallel)).cwiseAbs().maxCoeff() == 0.0);
        }
    }

    TEST_CASE("tied pair matches enumeration")
    {
        Rng rng(5);
        RVec mu = random_mu(9, rng);
        mu[6] = mu[2];
        const auto m = build_model(span_of(mu), 4);
        const auto e = oracle::enumerate_maxent(mu, 4);
        const RMat Q = pair_marginals(m);
        CHECK(std::abs(Q(2, 6) - e.Q(2, 6)) < 1e-10);
        CHECK((Q - e.Q).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("near-tied weights stay accurate")
    {
        Rng rng(6);
        RVec mu = random_mu(8, rng);
        mu[5] = mu[1] + 1e-9;
        mu[7] = mu[1] - 3e-7;
        const auto m = build_model(span_of(mu), 3);
        const auto e = oracle::enumerate_maxent(mu, 3);
        CHECK((pair_marginals(m) - e.Q).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("pair marginal structure")
    {
        const RVec c = RVec::Constant(6, 0.4);
        const RMat Q = pair_marginals(build_model(span_of(c), 2));
        CHECK(Q(0, 1) == Approx(2.0 * 1.0 / (6.0 * 5.0)).epsilon(1e-14));
        const RMat full = pair_marginals(build_model(span_of(c), 6));
        CHECK((full.array() - 1.0).abs().maxCoeff() < 1e-12);

        Rng rng(7);
        for (int t = 0; t < 30; ++t) {
            const int n = 3 + t % 12;
            const int ell = 1 + t % (n - 1);
            const auto m = build_model(span_of(RVec(random_mu(n, rng))), ell);
            const RVec q = marginals(m);
            const RMat P = pair_marginals(m);
            CHECK(q.sum() == Approx(ell).epsilon(1e-12));
            CHECK((P - P.transpose()).cwiseAbs().maxCoeff() == 0.0);
            for (int i = 0; i < n; ++i) {
                CHECK(P(i, i) == Approx(q[i]).epsilon(1e-13));
                CHECK(P.row(i).sum() == Approx(q[i] * ell).epsilon(1e-10));
                for (int j = 0; j < n; ++j) {
                    if (i != j) {
                        CHECK(P(i, j) < q[i] * q[j]);
                        if (ell >= 2) {
                            CHECK(P(i, j) > 0.0);
                        }
                    }
                }
            }
        }
    }

    TEST_CASE("shift invariance")
    {
        Rng rng(8);
        const RVec mu = random_mu(9, rng);
        const RVec q1 = marginals(build_model(span_of(mu), 4));
        const RVec shifted = (mu.array() + 17.25).matrix();
        const RVec q2 = marginals(build_model(span_of(shifted), 4));
        CHECK((q1 - q2).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("extreme weights use the log domain and stay exact")
    {
        RVec mu(6);
        mu << -400.0, -380.0, 0.0, 2.0, 390.0, 420.0;
        const auto m = build_model(span_of(mu), 3);
        CHECK(m.domain() == Domain::log);
        const auto e = oracle::enumerate_maxent(mu, 3);
        CHECK((marginals(m) - e.q).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(std::isfinite(m.log_z()));
        Rng rng(9);
        const auto s = sample_sequential(m, rng);
        CHECK(s.items.size() == 3);
    }

    TEST_CASE("fit reaches symmetric fixed point immediately")
    {
        const RVec q = RVec::Constant(8, 3.0 / 8.0);
        const auto r = fit_weights(q);
        CHECK(r.converged);
        CHECK(r.iterations <= 1);
        CHECK((r.model.mu().array() - r.model.mu()[0]).abs().maxCoeff() < 1e-12);
        CHECK(r.model.mu()[0] == Approx(std::log(8.0 / 3.0)).epsilon(1e-12));
    }

    TEST_CASE("fit matches the extended-precision reference")
    {
        RVec q(4);
        q << 0.9, 0.7, 0.3, 0.1;
        const auto r = fit_weights(q);
        CHECK(r.converged);
        CHECK(r.residual <= 1e-10);
        for (int i = 0; i < 4; ++i) {
            CHECK(r.model.mu()[i] == Approx(frozen::kFitMu[i]).epsilon(1e-9));
        }
        const RMat Q = pair_marginals(r.model);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                CHECK(std::abs(Q(i, j) - frozen::kFitQ[i * 4 + j]) < 1e-10);
            }
        }
        const auto e = oracle::enumerate_maxent_marginals(q);
        CHECK((e.Q - Q).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("fit converges on random feasible marginals")
    {
        Rng rng(10);
        for (int t = 0; t < 40; ++t) {
            const int n = 2 + t % 40;
            const int ell = 1 + static_cast<int>(rng() % static_cast<unsigned>(n - 1));
            const RVec q = random_marginals(n, ell, rng);
            if (q.minCoeff() <= 1e-12 || q.maxCoeff() >= 1 - 1e-12) {
                continue;
            }
            const auto r = fit_weights(q);
            CHECK(r.converged);
            CHECK(r.residual <= 1e-10);
            CHECK((marginals(r.model) - q).cwiseAbs().maxCoeff() <= 1e-10);
            for (std::size_t h = 1; h < r.dual_history.size(); ++h) {
                CHECK(r.dual_history[h] <= r.dual_history[h - 1] + 1e-12);
            }
        }
    }

    TEST_CASE("fit handles marginals close to the boundary")
    {
        RVec q(4);
        q << 1.0 - 1e-9, 0.5, 0.5 - 2e-10, 1e-9 + 2e-10;
        const auto r = fit_weights(q);
        CHECK(r.converged);
        CHECK(r.residual <= 1e-10);
    }

    TEST_CASE("fit preconditions")
    {
        RVec q(3);
        q << 1.0, 0.5, 0.5;
        CHECK_THROWS_AS(fit_weights(q), InvalidInput);
        q << 0.0, 0.5, 0.5;
        CHECK_THROWS_AS(fit_weights(q), InvalidInput);
        q << 0.3, 0.3, 0.3;
        CHECK_THROWS_AS(fit_weights(q), InvalidInput);
        CHECK_THROWS_AS(fit_weights(RVec()), InvalidInput);
    }

    TEST_CASE("fit reports non-convergence within a tiny budget")
    {
        RVec q(5);
        q << 0.99, 0.9, 0.6, 0.4, 0.11;
        const auto r = fit_weights(q, {1e-14, 1});
        CHECK_FALSE(r.converged);
        CHECK(r.residual > 1e-14);
    }

    TEST_CASE("dual gap bounds the total variation distance")
    {
        Rng rng(11);
        for (int t = 0; t < 10; ++t) {
            const int n = 4 + t % 7;
            const int ell = 1 + t % (n - 1);
            const RVec mu_star = random_mu(n, rng);
            const RVec mu = mu_star + 0.3 * random_mu(n, rng, 1.0);
            const auto p_star = oracle::enumerate_maxent(mu_star, ell);
            const auto p = oracle::enumerate_maxent(mu, ell);
            const double gap = dual_objective(build_model(span_of(mu), ell), p_star.q) -
                               dual_objective(build_model(span_of(mu_star), ell), p_star.q);
            CHECK(gap >= -1e-12);
            const double tv = 0.5 * (p.probs - p_star.probs).cwiseAbs().sum();
            CHECK(tv <= std::sqrt(std::max(gap, 0.0) / 2.0) + 1e-12);
        }
    }

    TEST_CASE("enumerated max-entropy beats marginal-preserving perturbations")
    {
        RVec q(4);
        q << 0.9, 0.7, 0.3, 0.1;
        const auto e = oracle::enumerate_maxent_marginals(q);
        // moving mass around a 4-cycle of subsets {a,c},{b,d} <-> {a,d},{b,c} keeps all marginals
        const auto idx = [&](std::vector<int> s) { return oracle::subset_rank(s, 4); };
        const std::vector<std::array<std::size_t, 4>> cycles{
            {idx({0, 2}), idx({1, 3}), idx({0, 3}), idx({1, 2})},
            {idx({0, 1}), idx({2, 3}), idx({0, 2}), idx({1, 3})},
        };
        for (const auto& c : cycles) {
            for (double delta : {1e-3, -1e-3}) {
                RVec p = e.probs;
                p[static_cast<Eigen::Index>(c[0])] += delta;
                p[static_cast<Eigen::Index>(c[1])] += delta;
                p[static_cast<Eigen::Index>(c[2])] -= delta;
                p[static_cast<Eigen::Index>(c[3])] -= delta;
                if (p.minCoeff() <= 0.0) {
                    continue;
                }
                double h = 0.0;
                for (Eigen::Index s = 0; s < p.size(); ++s) {
                    h -= p[s] * std::log(p[s]);
                }
                CHECK(h < e.entropy);
            }
        }
    }

    TEST_CASE("samplers return the full set when ell = n")
    {
        Rng rng(12);
        const RVec mu = random_mu(5, rng);
        const auto m = build_model(span_of(mu), 5);
        CHECK(sample_sequential(m, rng).items == std::vector<int>{0, 1, 2, 3, 4});
        CHECK(sample_glauber(m, rng).items == std::vector<int>{0, 1, 2, 3, 4});
    }

    TEST_CASE("uniform pairs are equally likely")
    {
        const RVec mu = RVec::Zero(6);
        const auto m = build_model(span_of(mu), 2);
        Rng rng(13);
        std::map<std::pair<int, int>, int> counts;
        const int N = 100000;
        for (int s = 0; s < N; ++s) {
            const auto x = sample_sequential(m, rng).items;
            ++counts[{x[0], x[1]}];
        }
        CHECK(counts.size() == 15);
        const double p = 1.0 / 15.0;
        const double sd = std::sqrt(p * (1 - p) / N);
        for (const auto& [pair, c] : counts) {
            CHECK(std::abs(static_cast<double>(c) / N - p) < 4 * sd);
        }
    }

    TEST_CASE("samplers match the enumerated distribution")
    {
        Rng rng(14);
        const RVec mu = random_mu(8, rng);
        const auto m = build_model(span_of(mu), 3);
        const auto e = oracle::enumerate_maxent(mu, 3);
        std::vector<double> seq(e.subsets.size(), 0.0), gl(e.subsets.size(), 0.0);
        const int N = 100000;
        for (int s = 0; s < N; ++s) {
            seq[oracle::subset_rank(sample_sequential(m, rng).items, 8)] += 1.0;
            gl[oracle::subset_rank(sample_glauber(m, rng).items, 8)] += 1.0;
        }
        const std::vector<double> probs(e.probs.data(), e.probs.data() + e.probs.size());
        CHECK(testutil::chi_squared_pvalue(seq, probs) > 0.001);
        CHECK(testutil::chi_squared_pvalue(gl, probs) > 0.001);
        CHECK(testutil::two_sample_pvalue(seq, gl) > 0.001);
    }

    TEST_CASE("glauber restarts stay small for balanced weights")
    {
        const RVec mu = RVec::Zero(10);
        const auto m = build_model(span_of(mu), 5);
        Rng rng(15);
        long total = 0;
        for (int s = 0; s < 10000; ++s) {
            total += sample_glauber(m, rng).restarts;
        }
        CHECK(static_cast<double>(total) / 10000 <= 20.0);
    }

    TEST_CASE("glauber reports an exhausted budget")
    {
        // a single round succeeds with probability about 0.04 here
        const RVec mu = RVec::Zero(400);
        const auto m = build_model(span_of(mu), 200);
        Rng rng(16);
        int thrown = 0;
        for (int t = 0; t < 20; ++t) {
            try {
                sample_glauber(m, rng, 0);
            } catch (const NonConvergence& e) {
                ++thrown;
                CHECK(e.iterations() == 0);
            }
        }
        CHECK(thrown >= 10);
    }
}
