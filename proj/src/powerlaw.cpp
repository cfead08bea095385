#include "rtrunc/powerlaw.hpp"

#include <algorithm>
#include <cmath>

#include "rtrunc/error.hpp"
#include "rtrunc/tracedist.hpp"

namespace rtrunc::powerlaw {

CanonicalVector powerlaw_vector(int d, double gamma)
{
    if (d < 2) {
        throw InvalidInput("powerlaw_vector: d must be at least 2");
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw InvalidInput("powerlaw_vector: gamma must be finite and nonnegative");
    }
    RVec v(d);
    for (int i = 0; i < d; ++i) {
        v[i] = std::pow(static_cast<double>(i + 1), -gamma);
    }
    return CanonicalVector::from_sorted(v);
}

std::vector<int> geometric_ks(int k_min, int k_max, int count)
{
    if (k_min < 1 || k_max < k_min || count < 1) {
        throw InvalidInput("geometric_ks: need 1 <= k_min <= k_max and count >= 1");
    }
    std::vector<int> ks;
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        ks.push_back(static_cast<int>(std::lround(k_min * std::pow(static_cast<double>(k_max) / k_min, t))));
    }
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
}

std::vector<int> default_ks(int d, double gamma)
{
    if (d < 2) {
        throw InvalidInput("default_ks: d must be at least 2");
    }
    const double lo = gamma < 0.5 ? d / 4.0 : d / 64.0;
    const double hi = gamma < 0.5 ? 7.0 * d / 8.0 : d / 8.0;
    const int k_max = std::clamp(static_cast<int>(std::lround(hi)), 1, d - 1);
    const int k_min = std::clamp(static_cast<int>(std::lround(lo)), 1, k_max);
    return geometric_ks(k_min, k_max, 10);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw InvalidInput("loglog_slope: need at least two paired points");
    }
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw InvalidInput("loglog_slope: values must be positive");
        }
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    if (den <= 0.0) {
        throw InvalidInput("loglog_slope: x values are all equal");
    }
    return (n * sxy - sx * sy) / den;
}

std::vector<SweepRow> powerlaw_sweep(const SweepConfig& config, Exec exec)
{
    if (config.d < 2) {
        throw InvalidInput("powerlaw_sweep: d must be at least 2");
    }
    for (double g : config.gammas) {
        if (!(g > 0.0)) {
            throw InvalidInput("powerlaw_sweep: gamma must be positive");
        }
    }
    const int ng = static_cast<int>(config.gammas.size());
    std::vector<CanonicalVector> vecs(static_cast<std::size_t>(ng));
    std::vector<std::pair<int, int>> points; // (gamma index, k)
    for (int g = 0; g < ng; ++g) {
        const double gamma = config.gammas[static_cast<std::size_t>(g)];
        vecs[static_cast<std::size_t>(g)] = powerlaw_vector(config.d, gamma);
        std::vector<int> ks = config.ks.empty() ? default_ks(config.d, gamma) : config.ks;
        ks.erase(std::remove_if(ks.begin(), ks.end(), [&](int k) { return k < 1 || k >= config.d; }), ks.end());
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
        for (int k : ks) {
            points.emplace_back(g, k);
        }
    }
    const int np = static_cast<int>(points.size());

    std::vector<SweepRow> rows(static_cast<std::size_t>(np));
    auto point = [&](int idx) {
        const auto [g, k] = points[static_cast<std::size_t>(idx)];
        const auto& canon = vecs[static_cast<std::size_t>(g)];
        SweepRow& row = rows[static_cast<std::size_t>(idx)];
        row.gamma = config.gammas[static_cast<std::size_t>(g)];
        row.d = config.d;
        row.k = k;
        // 1 - F_k^2 summed from the tail to avoid cancellation
        double tail = 0.0;
        for (int i = static_cast<int>(canon.dim()) - 1; i >= k; --i) {
            tail += canon.values()[i] * canon.values()[i];
        }
        row.epsilon = tail;
        row.T = tracedist::solve(canon, k).lambda;
        row.R = robustness_k(canon, k);
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int idx = 0; idx < np; ++idx) {
            point(idx);
        }
    } else {
        for (int idx = 0; idx < np; ++idx) {
            point(idx);
        }
    }

    for (int g = 0; g < ng; ++g) {
        std::vector<SweepRow*> group;
        for (int j = 0; j < np; ++j) {
            SweepRow& row = rows[static_cast<std::size_t>(j)];
            if (points[static_cast<std::size_t>(j)].first == g && row.epsilon > 0.0 && row.T > 0.0) {
                group.push_back(&row);
            }
        }
        std::sort(group.begin(), group.end(), [](const SweepRow* a, const SweepRow* b) { return a->epsilon < b->epsilon; });
        const auto use = std::min<std::size_t>(group.size(), static_cast<std::size_t>(std::max(2, config.fit_points)));
        double slope = std::nan("");
        if (use >= 2) {
            std::vector<double> x, y;
            for (std::size_t i = 0; i < use; ++i) {
                x.push_back(group[i]->epsilon);
                y.push_back(group[i]->T);
            }
            slope = loglog_slope(x, y);
        }
        for (int j = 0; j < np; ++j) {
            if (points[static_cast<std::size_t>(j)].first == g) {
                rows[static_cast<std::size_t>(j)].exponent = slope;
            }
        }
    }
    return rows;
}

std::map<double, double> exponents(const std::vector<SweepRow>& rows)
{
    std::map<double, double> out;
    for (const auto& r : rows) {
        out[r.gamma] = r.exponent;
    }
    return out;
}

} // namespace rtrunc::powerlaw
