#include "rtrunc/tracedist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "rtrunc/error.hpp"

namespace rtrunc::tracedist {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// 1-based view of the nonzero part of v with the sums the window equations need.
struct Prep
{
    int k = 0;
    int d = 0;              ///< full dimension
    int n = 0;              ///< support size
    std::vector<double> v;  ///< v[0] = inf, v[1..n], v[n+1] = 0
    std::vector<double> s;  ///< s[j] = sum_{i >= j} v_i, j = 1..n+1
    std::vector<double> p2; ///< p2[j] = sum_{i < j} v_i^2
    std::vector<double> t2; ///< t2[j] = sum_{i >= j} v_i^2
    double slack = 0.0;

    Prep(const CanonicalVector& canon, int k_) : k(k_), d(static_cast<int>(canon.dim()))
    {
        if (k < 1 || k > d) {
            throw InvalidInput("k = " + std::to_string(k) + " out of range [1, " + std::to_string(d) + "]");
        }
        n = static_cast<int>(canon.support());
        const RVec& vals = canon.values();
        v.assign(static_cast<std::size_t>(n + 2), 0.0);
        v[0] = kInf;
        for (int i = 1; i <= n; ++i) {
            v[static_cast<std::size_t>(i)] = vals[i - 1];
        }
        s.assign(static_cast<std::size_t>(n + 2), 0.0);
        t2.assign(static_cast<std::size_t>(n + 2), 0.0);
        for (int i = n; i >= 1; --i) {
            s[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i + 1)] + v[static_cast<std::size_t>(i)];
            t2[static_cast<std::size_t>(i)] =
                t2[static_cast<std::size_t>(i + 1)] + v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        }
        p2.assign(static_cast<std::size_t>(n + 2), 0.0);
        for (int i = 1; i <= n; ++i) {
            p2[static_cast<std::size_t>(i + 1)] =
                p2[static_cast<std::size_t>(i)] + v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        }
        slack = 1e-12 * std::max(1.0, n > 0 ? v[1] : 1.0);
    }

    double at(int i) const { return v[static_cast<std::size_t>(i)]; }

    struct Coeffs
    {
        double A, B, c1, c2, C;
    };

    Coeffs coeffs(int r, int ell) const
    {
        const int p = k - r;
        return {p2[static_cast<std::size_t>(p)], s[static_cast<std::size_t>(p)] - s[static_cast<std::size_t>(ell)],
                static_cast<double>(r + 1), static_cast<double>(ell - p), t2[static_cast<std::size_t>(ell)]};
    }

    double theta(int r, int ell, double lambda) const
    {
        const auto c = coeffs(r, ell);
        return c.B / (c.c1 + c.c2 * lambda);
    }

    /// Largest violation of the window inequalities (<= 0 means accepted).
    double violation(int r, int ell, double lambda) const
    {
        const int p = k - r;
        const double th = theta(r, ell, lambda);
        const double top = (1.0 + lambda) * th;
        const double bottom = lambda * th;
        double viol = at(p) - top - slack;                          // top >= v_p
        if (p > 1) {
            viol = std::max(viol, top - at(p - 1) - slack);         // top < v_{p-1}
        }
        viol = std::max(viol, bottom - at(ell - 1) - slack);        // bottom <= v_{ell-1}
        if (ell <= n) {
            viol = std::max(viol, at(ell) - bottom - slack);        // bottom > v_ell
        }
        return viol;
    }

    /// <v, m~> for the layout (r, ell) at lambda.
    double inner(int r, int ell, double lambda) const
    {
        const auto c = coeffs(r, ell);
        double out = c.A / (1.0 + lambda) + c.B * c.B / (c.c1 + c.c2 * lambda);
        if (c.C > 0.0) {
            out += c.C / lambda;
        }
        return out;
    }

    /// First ell >= k+1 with v_ell <= lambda theta_{r,ell}; monotone in ell.
    int ell_for(int r, double lambda) const
    {
        int lo = k + 1, hi = n + 1;
        while (lo < hi) {
            const int mid = lo + (hi - lo) / 2;
            if (at(mid) <= lambda * theta(r, mid, lambda)) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        return lo;
    }

    struct Layout
    {
        int r, ell;
        bool operator==(const Layout&) const = default;
    };

    /// Layout of the maximizer of <v,x> - |x|^2_(k)/2 - lambda |x|^2/2.
    Layout layout_at(double lambda) const
    {
        Layout best{0, k + 1};
        double best_viol = kInf;
        for (int r = 0; r < k; ++r) {
            const int ell = ell_for(r, lambda);
            const int p = k - r;
            const double top = (1.0 + lambda) * theta(r, ell, lambda);
            double viol = std::max(0.0, at(p) - top);
            if (p > 1 && top >= at(p - 1)) {
                viol += top - at(p - 1) + std::numeric_limits<double>::min();
            }
            if (viol == 0.0) {
                return {r, ell};
            }
            if (viol < best_viol) {
                best_viol = viol;
                best = {r, ell};
            }
        }
        return best;
    }

    Solution build(int r, int ell, double lambda) const
    {
        Solution sol;
        sol.lambda = lambda;
        sol.k = k;
        sol.r = r;
        sol.ell = ell;
        sol.theta = theta(r, ell, lambda);
        sol.m_tilde = RVec::Zero(d);
        const int p = k - r;
        for (int i = 1; i <= n; ++i) {
            double x;
            if (i < p) {
                x = at(i) / (1.0 + lambda);
            } else if (i < ell) {
                x = sol.theta;
            } else {
                x = at(i) / lambda;
            }
            sol.m_tilde[i - 1] = x;
        }
        sol.m = sol.m_tilde / sol.m_tilde.norm();
        return sol;
    }

    Solution trivial(const CanonicalVector& canon) const
    {
        Solution sol;
        sol.lambda = 0.0;
        sol.k = k;
        sol.r = 0;
        sol.ell = d + 1;
        sol.theta = 0.0;
        sol.m_tilde = canon.values();
        sol.m = canon.values();
        return sol;
    }
};

std::string describe_miss(int r, int ell, double lambda, double viol)
{
    std::ostringstream os;
    os << "no accepting (r, ell, lambda); nearest miss r=" << r << " ell=" << ell << " lambda=" << lambda
       << " violation=" << viol;
    return os.str();
}

/// Root of the normalization equation for a fixed layout, starting near x0.
double polish_rational(const Prep::Coeffs& c, double x0)
{
    double x = x0;
    for (int it = 0; it < 50; ++it) {
        const double a = 1.0 + x;
        const double b = c.c1 + c.c2 * x;
        double g = c.A / a + c.B * c.B / b - 1.0;
        double dg = -c.A / (a * a) - c.B * c.B * c.c2 / (b * b);
        if (c.C > 0.0) {
            g += c.C / x;
            dg -= c.C / (x * x);
        }
        if (dg == 0.0) {
            break;
        }
        double next = x - g / dg;
        if (!(next > 0.0)) {
            next = 0.5 * x;
        }
        if (std::abs(next - x) <= 1e-16 * x) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

} // namespace

std::vector<double> cubic_positive_roots(double A, double B2, double c1, double c2, double C)
{
    if (!(A >= 0.0) || !(B2 >= 0.0) || !(C >= 0.0) || !(c1 >= 1.0) || !(c2 >= 1.0)) {
        throw InvalidInput("cubic_positive_roots: need A, B2, C >= 0 and c1, c2 >= 1");
    }
    // lambda(1+lambda)(c1+c2 lambda) - A lambda(c1+c2 lambda) - B2 lambda(1+lambda) - C(1+lambda)(c1+c2 lambda)
    std::vector<double> coef = {
        -C * c1,
        c1 - A * c1 - B2 - C * (c1 + c2),
        c1 + c2 - A * c2 - B2 - C * c2,
        c2,
    };
    auto eval = [&](double x, double& deriv) {
        double p = 0.0, dp = 0.0;
        for (std::size_t i = coef.size(); i-- > 0;) {
            dp = dp * x + p;
            p = p * x + coef[i];
        }
        deriv = dp;
        return p;
    };

    // degree reduction: trim vanishing leading terms, then factor out x = 0
    std::vector<double> poly = coef;
    while (!poly.empty() && std::abs(poly.back()) < 1e-300) {
        poly.pop_back();
    }
    if (poly.empty()) {
        throw NumericalError("cubic_positive_roots: polynomial vanishes identically");
    }
    while (poly.size() > 1 && std::abs(poly.front()) < 1e-300) {
        poly.erase(poly.begin());
    }
    const int deg = static_cast<int>(poly.size()) - 1;
    std::vector<double> roots;
    if (deg == 0) {
        return roots;
    }
    RMat comp = RMat::Zero(deg, deg);
    for (int i = 0; i < deg; ++i) {
        comp(0, i) = -poly[static_cast<std::size_t>(deg - 1 - i)] / poly[static_cast<std::size_t>(deg)];
    }
    for (int i = 1; i < deg; ++i) {
        comp(i, i - 1) = 1.0;
    }
    Eigen::EigenSolver<RMat> es(comp, false);
    for (int i = 0; i < deg; ++i) {
        const cplx z = es.eigenvalues()[i];
        if (std::abs(z.imag()) > 1e-9 * std::abs(z) || z.real() <= 0.0) {
            continue;
        }
        double x = z.real();
        for (int it = 0; it < 2; ++it) {
            double dp = 0.0;
            const double p = eval(x, dp);
            if (dp == 0.0) {
                break;
            }
            x -= p / dp;
        }
        if (x > 0.0 && std::isfinite(x)) {
            roots.push_back(x);
        }
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }),
                roots.end());
    return roots;
}

Solution solve(const CanonicalVector& canon, int k)
{
    const Prep P(canon, k);
    if (P.n <= k) {
        return P.trivial(canon);
    }

    // <v, m~(lambda)> is nonincreasing in lambda; T_k is where it crosses 1.
    // The root lies in [1 - F_k^2, sqrt(1 - F_k^2)].
    auto f = [&](double lambda) {
        const auto L = P.layout_at(lambda);
        return P.inner(L.r, L.ell, lambda) - 1.0;
    };
    const double tail = P.t2[static_cast<std::size_t>(k + 1)];
    double lo = 0.5 * tail;
    double hi = std::min(1.0, 2.0 * std::sqrt(tail));
    while (f(lo) < 0.0 && lo > 1e-300) {
        lo *= 0.5;
    }
    if (f(hi) > 0.0) {
        hi = 1.0;
    }
    for (int it = 0; it < 4000; ++it) {
        const double mid = hi > 4.0 * lo ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        (f(mid) > 0.0 ? lo : hi) = mid;
    }

    const double mid = 0.5 * (lo + hi);
    std::vector<Prep::Layout> layouts;
    for (double x : {mid, lo, hi}) {
        const auto L = P.layout_at(x);
        if (std::find(layouts.begin(), layouts.end(), L) == layouts.end()) {
            layouts.push_back(L);
        }
    }

    int best_r = 0, best_ell = k + 1;
    double best_lambda = mid, best_viol = kInf;
    for (const auto& L : layouts) {
        const auto c = P.coeffs(L.r, L.ell);
        auto candidates = cubic_positive_roots(c.A, c.B * c.B, c.c1, c.c2, c.C);
        candidates.push_back(polish_rational(c, mid));
        for (double x : candidates) {
            const double viol = P.violation(L.r, L.ell, x);
            // prefer the candidate closest to the bisection point among valid ones
            const double score = viol <= 0.0 ? std::abs(x - mid) - kInf : viol;
            const double best_score = best_viol <= 0.0 ? std::abs(best_lambda - mid) - kInf : best_viol;
            if (score < best_score) {
                best_r = L.r;
                best_ell = L.ell;
                best_lambda = x;
                best_viol = viol;
            }
        }
    }
    if (best_viol > 0.0) {
        throw InternalConsistencyError(describe_miss(best_r, best_ell, best_lambda, best_viol));
    }
    return P.build(best_r, best_ell, best_lambda);
}

Solution solve_exhaustive(const CanonicalVector& canon, int k)
{
    const Prep P(canon, k);
    if (P.n <= k) {
        return P.trivial(canon);
    }
    int miss_r = 0, miss_ell = k + 1;
    double miss_lambda = 0.0, miss_viol = kInf;
    for (int r = 0; r < k; ++r) {
        for (int ell = k + 1; ell <= P.n + 1; ++ell) {
            const auto c = P.coeffs(r, ell);
            for (double x : cubic_positive_roots(c.A, c.B * c.B, c.c1, c.c2, c.C)) {
                const double viol = P.violation(r, ell, x);
                if (viol <= 0.0) {
                    return P.build(r, ell, x);
                }
                if (viol < miss_viol) {
                    miss_r = r;
                    miss_ell = ell;
                    miss_lambda = x;
                    miss_viol = viol;
                }
            }
        }
    }
    throw InternalConsistencyError(describe_miss(miss_r, miss_ell, miss_lambda, miss_viol));
}

SparseEnsemble build_ensemble(const Solution& sol, const CanonicalVector& canon, const maxent::FitOptions& fit)
{
    const int d = static_cast<int>(canon.dim());
    const int k = sol.k;
    if (sol.m_tilde.size() != d) {
        throw InvalidInput("build_ensemble: solution does not match the vector dimension");
    }
    if (sol.lambda == 0.0) {
        RVec state = RVec::Zero(d);
        state.head(k) = canon.values().head(k);
        return point_mass_ensemble(EnsembleKind::trace_distance, canon, k, state / state.norm());
    }
    const int p = sol.prefix_size();
    const int wb = sol.window_begin();
    const int we = sol.window_end();
    RVec prefix = sol.m_tilde.head(p);
    RVec q(we - wb);
    for (int j = wb; j < we; ++j) {
        q[j - wb] = canon.values()[j] / sol.theta - sol.lambda;
    }
    const double norm = std::sqrt(prefix.squaredNorm() + (sol.r + 1) * sol.theta * sol.theta);
    return make_ensemble(EnsembleKind::trace_distance, canon, k, std::move(prefix), wb, we, sol.theta, std::move(q),
                         norm, fit);
}

SigmaResult density_matrix(const SparseEnsemble& ens, Exec exec)
{
    RealDensityMatrix sigma(second_moment(ens, exec));
    const double t = trace_distance(ens.canon.values(), sigma);
    return {std::move(sigma), t};
}

RVec sample_state(const SparseEnsemble& ens, Rng& rng)
{
    return rtrunc::sample_state(ens, rng);
}

double fenchel_gap(const RVec& v, const RVec& m, double lambda, int k)
{
    const RVec u = v.dot(m) * v - lambda * m;
    const double dual = k_support_norm(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())), k).value;
    const double primal = top_k_norm(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())), k);
    return std::abs(dual * dual + primal * primal - 2.0 * u.dot(m));
}

OptimalityReport verify_optimality(const CanonicalVector& canon, const Solution& sol, const RealDensityMatrix& sigma)
{
    const RVec& v = canon.values();
    if (sigma.dim() != v.size() || sol.m.size() != v.size()) {
        throw InvalidInput("verify_optimality: dimension mismatch");
    }
    RMat D = v * v.transpose() - sigma.matrix();
    D = 0.5 * (D + D.transpose());
    OptimalityReport rep;
    rep.eigen_residual = (D * sol.m - sol.lambda * sol.m).norm();
    rep.fenchel_gap = fenchel_gap(v, sol.m, sol.lambda, sol.k);
    const RVec eig = hermitian_eigenvalues(D);
    rep.spectral_gap = 0.5 * eig.cwiseAbs().sum() - sol.lambda;
    rep.second_eigenvalue = eig.size() >= 2 ? eig[eig.size() - 2] : 0.0;
    return rep;
}

} // namespace rtrunc::tracedist
