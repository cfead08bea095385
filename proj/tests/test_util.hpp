#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "rtrunc/common.hpp"

namespace testutil {

using rtrunc::CVec;
using rtrunc::RVec;
using rtrunc::Rng;

inline RVec random_real(int d, Rng& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    RVec v(d);
    for (int i = 0; i < d; ++i) {
        v[i] = g(rng);
    }
    return v.normalized();
}

inline CVec random_complex(int d, Rng& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    CVec v(d);
    for (int i = 0; i < d; ++i) {
        v[i] = {g(rng), g(rng)};
    }
    return v.normalized();
}

/// Positive decreasing-ish vector without ties, useful when the sorted order matters.
inline RVec random_positive(int d, Rng& rng)
{
    std::uniform_real_distribution<double> u(0.05, 1.0);
    RVec v(d);
    for (int i = 0; i < d; ++i) {
        v[i] = u(rng);
    }
    return v.normalized();
}

inline RVec uniform(int d)
{
    return RVec::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
}

/// Pearson goodness-of-fit p-value; cells with expected count < 5 are pooled.
inline double chi_squared_pvalue(const std::vector<double>& counts, const std::vector<double>& probs)
{
    double total = 0.0;
    for (double c : counts) {
        total += c;
    }
    double stat = 0.0, pooled_obs = 0.0, pooled_exp = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = probs[i] * total;
        if (e < 5.0) {
            pooled_obs += counts[i];
            pooled_exp += e;
            continue;
        }
        stat += (counts[i] - e) * (counts[i] - e) / e;
        ++cells;
    }
    if (pooled_exp > 0.0) {
        stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++cells;
    }
    if (cells < 2) {
        return 1.0;
    }
    boost::math::chi_squared dist(cells - 1);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Two-sample chi-squared homogeneity p-value over the same cells.
inline double two_sample_pvalue(const std::vector<double>& a, const std::vector<double>& b)
{
    double na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a[i];
        nb += b[i];
    }
    double stat = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double tot = a[i] + b[i];
        if (tot == 0.0) {
            continue;
        }
        const double ea = tot * na / (na + nb);
        const double eb = tot * nb / (na + nb);
        stat += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
        ++cells;
    }
    if (cells < 2) {
        return 1.0;
    }
    boost::math::chi_squared dist(cells - 1);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

} // namespace testutil
