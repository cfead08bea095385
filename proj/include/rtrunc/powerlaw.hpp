#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "rtrunc/common.hpp"
#include "rtrunc/specvec.hpp"

namespace rtrunc::powerlaw {

/// v_i = i^(-gamma) / sqrt(Z), i = 1..d, Z = sum i^(-2 gamma).
CanonicalVector powerlaw_vector(int d, double gamma);

/// Geometric k grid: `count` distinct integers from k_min to k_max inclusive.
std::vector<int> geometric_ks(int k_min, int k_max, int count);

/// Ten geometric k values matching the asymptotic regime of gamma: for
/// gamma < 1/2 small epsilon needs k/d near 1, so k runs over [d/4, 7d/8];
/// otherwise d is large compared to k and k runs over [d/64, d/8].
std::vector<int> default_ks(int d, double gamma);

struct SweepConfig
{
    std::vector<double> gammas{0.25, 0.75, 1.5};
    int d = 4096;
    std::vector<int> ks; ///< empty means default_ks(d, gamma) per gamma
    std::uint64_t seed = 0;
    int fit_points = 10; ///< smallest-epsilon points used by the slope fit
};

struct SweepRow
{
    double gamma = 0.0;
    int d = 0;
    int k = 0;
    double epsilon = 0.0; ///< 1 - F_k^2
    double T = 0.0;
    double R = 0.0;
    double exponent = 0.0; ///< fitted slope for this gamma, repeated per row
};

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// One row per (gamma, k), grouped by gamma with k ascending. Points with
/// epsilon = 0 (k >= d) are skipped.
std::vector<SweepRow> powerlaw_sweep(const SweepConfig& config, Exec exec = Exec::parallel);

/// Fitted exponent per gamma from a finished sweep.
std::map<double, double> exponents(const std::vector<SweepRow>& rows);

} // namespace rtrunc::powerlaw
