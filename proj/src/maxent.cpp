#include "rtrunc/maxent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "rtrunc/error.hpp"

namespace rtrunc::maxent {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Linear-domain recursion is used only while every weight and every
// reachable partition value stays inside this band.
constexpr double kLinearMax = 1e300;
constexpr double kLinearMin = 1e-290;
// Partition values are bounded by prod(1 + w_i) <= exp(sum w_i) = exp(ell)
// in the shifted gauge, so ell past this forces the log domain.
constexpr int kLinearMaxEll = 650;
// Pairs whose weight ratio is this close to 1 use the direct formula
// instead of the difference quotient.
constexpr double kNearTieRatio = 1e-5;

double lse(double a, double b)
{
    if (a == kNegInf) {
        return b;
    }
    if (b == kNegInf) {
        return a;
    }
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

void check_ell(int n, int ell)
{
    if (n < 1) {
        throw InvalidInput("maxent: need at least one item");
    }
    if (ell < 1 || ell > n) {
        throw InvalidInput("maxent: subset size " + std::to_string(ell) + " out of range [1, " + std::to_string(n) + "]");
    }
}

void check_finite(std::span<const double> mu)
{
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!std::isfinite(mu[i])) {
            throw InvalidInput("maxent: mu_" + std::to_string(i) + " is not finite");
        }
    }
}

/// Tabulates Z(a, S_i) where S_i runs over the sets visited when adding items
/// in `order` one at a time. Column c holds the set of the first c items of
/// `order`. Shared by the suffix (reversed order) and prefix tables.
struct Tables
{
    Domain domain = Domain::linear;
    std::vector<double> log;
    std::vector<double> lin;
};

Tables tabulate(std::span<const double> log_w, int ell, bool reversed)
{
    const int n = static_cast<int>(log_w.size());
    const auto stride = static_cast<std::size_t>(ell + 1);
    const auto cols = static_cast<std::size_t>(n + 1);
    auto item_at = [&](int c) { return reversed ? n - 1 - c : c; };

    Tables t;
    bool linear_ok = ell <= kLinearMaxEll;
    for (double lw : log_w) {
        if (lw > std::log(kLinearMax) || lw < std::log(kLinearMin)) {
            linear_ok = false;
        }
    }

    if (linear_ok) {
        t.lin.assign(stride * cols, 0.0);
        t.lin[0] = 1.0;
        for (int c = 0; c < n; ++c) {
            const double w = std::exp(log_w[static_cast<std::size_t>(item_at(c))]);
            const double* prev = &t.lin[static_cast<std::size_t>(c) * stride];
            double* cur = &t.lin[static_cast<std::size_t>(c + 1) * stride];
            cur[0] = 1.0;
            const int amax = std::min(ell, c + 1);
            for (int a = 1; a <= amax; ++a) {
                cur[a] = prev[a] + w * prev[a - 1];
            }
            for (int a = 1; a <= amax; ++a) {
                if (!std::isfinite(cur[a]) || cur[a] < kLinearMin || cur[a] > kLinearMax) {
                    linear_ok = false;
                }
            }
            if (!linear_ok) {
                break;
            }
        }
    }

    t.log.assign(stride * cols, kNegInf);
    if (linear_ok) {
        t.domain = Domain::linear;
        for (std::size_t i = 0; i < t.lin.size(); ++i) {
            t.log[i] = t.lin[i] > 0.0 ? std::log(t.lin[i]) : kNegInf;
        }
        return t;
    }

    t.domain = Domain::log;
    t.lin.clear();
    t.log[0] = 0.0;
    for (int c = 0; c < n; ++c) {
        const double lw = log_w[static_cast<std::size_t>(item_at(c))];
        const double* prev = &t.log[static_cast<std::size_t>(c) * stride];
        double* cur = &t.log[static_cast<std::size_t>(c + 1) * stride];
        cur[0] = 0.0;
        const int amax = std::min(ell, c + 1);
        for (int a = 1; a <= amax; ++a) {
            cur[a] = lse(prev[a], lw + prev[a - 1]);
        }
    }
    return t;
}

/// Re-index a reversed-order table so that column i is the suffix {i..n-1}.
std::vector<double> as_suffix(const std::vector<double>& by_count, int n, int ell)
{
    const auto stride = static_cast<std::size_t>(ell + 1);
    std::vector<double> out(by_count.size());
    for (int i = 0; i <= n; ++i) {
        const auto src = static_cast<std::size_t>(n - i) * stride;
        const auto dst = static_cast<std::size_t>(i) * stride;
        std::copy_n(by_count.begin() + static_cast<std::ptrdiff_t>(src), stride,
                    out.begin() + static_cast<std::ptrdiff_t>(dst));
    }
    return out;
}

PartitionTable suffix_table(std::span<const double> log_w, int ell)
{
    const int n = static_cast<int>(log_w.size());
    auto t = tabulate(log_w, ell, true);
    auto lin = t.lin.empty() ? std::vector<double>{} : as_suffix(t.lin, n, ell);
    return PartitionTable(n, ell, t.domain, as_suffix(t.log, n, ell), std::move(lin));
}

RVec logistic_probabilities(const RVec& mu, int ell)
{
    const auto n = mu.size();
    RVec p(n);
    if (ell == n) {
        p.setOnes();
        return p;
    }
    auto total = [&](double c) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            s += 1.0 / (1.0 + std::exp(mu[i] + c));
        }
        return s;
    };
    double lo = -1.0, hi = 1.0;
    while (total(lo) < ell) {
        lo *= 2.0;
    }
    while (total(hi) > ell) {
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) > ell ? lo : hi) = mid;
    }
    const double c = 0.5 * (lo + hi);
    for (Eigen::Index i = 0; i < n; ++i) {
        p[i] = 1.0 / (1.0 + std::exp(mu[i] + c));
    }
    return p;
}

} // namespace

PartitionTable::PartitionTable(int n, int ell, Domain domain, std::vector<double> log_values,
                               std::vector<double> linear_values)
    : n_(n), ell_(ell), domain_(domain), log_(std::move(log_values)), lin_(std::move(linear_values))
{
}

PartitionTable partition_recursive(std::span<const double> mu, int ell)
{
    check_ell(static_cast<int>(mu.size()), ell);
    check_finite(mu);
    std::vector<double> log_w(mu.size());
    std::transform(mu.begin(), mu.end(), log_w.begin(), [](double m) { return -m; });
    return suffix_table(log_w, ell);
}

double partition_power_sums(std::span<const double> mu, int ell)
{
    const int n = static_cast<int>(mu.size());
    check_ell(n, ell);
    check_finite(mu);

    std::vector<double> w(mu.size());
    std::transform(mu.begin(), mu.end(), w.begin(), [](double m) { return std::exp(-m); });

    // p[j] = sum_i w_i^j, naive O(n ell)
    std::vector<double> p(static_cast<std::size_t>(ell + 1), 0.0);
    for (double wi : w) {
        double pw = 1.0;
        for (int j = 1; j <= ell; ++j) {
            pw *= wi;
            p[static_cast<std::size_t>(j)] += pw;
        }
    }

    std::vector<double> z(static_cast<std::size_t>(ell + 1), 0.0);
    z[0] = 1.0;
    for (int a = 1; a <= ell; ++a) {
        double acc = 0.0;
        for (int j = 1; j <= a; ++j) {
            const double term = p[static_cast<std::size_t>(j)] * z[static_cast<std::size_t>(a - j)];
            acc += (j % 2 == 1) ? term : -term;
        }
        z[static_cast<std::size_t>(a)] = acc / a;
    }

    const double result = z[static_cast<std::size_t>(ell)];
    const double reference = std::exp(partition_recursive(mu, ell).log_z(ell, 0));
    if (!(result > 0.0) || !std::isfinite(result)) {
        throw NumericalError("power-sum partition value is " + std::to_string(result) +
                             "; the alternating sum cancelled, use partition_recursive");
    }
    if (std::isfinite(reference) && std::abs(result - reference) > 1e-6 * reference) {
        throw NumericalError("power-sum partition value disagrees with the recursion by relative " +
                             std::to_string(std::abs(result - reference) / reference) +
                             "; use partition_recursive");
    }
    return result;
}

MaxEntModel MaxEntModel::build(std::span<const double> mu, int ell)
{
    const int n = static_cast<int>(mu.size());
    check_ell(n, ell);
    check_finite(mu);

    // shift c with sum exp(-(mu_i + c)) = ell, computed as a log-sum-exp
    double lsum = kNegInf;
    for (double m : mu) {
        lsum = lse(lsum, -m);
    }
    const double shift = lsum - std::log(static_cast<double>(ell));

    MaxEntModel model;
    model.n_ = n;
    model.ell_ = ell;
    model.shift_ = shift;
    model.mu_.resize(n);
    model.log_weights_.resize(n);
    model.weights_.resize(n);
    for (int i = 0; i < n; ++i) {
        model.mu_[i] = mu[static_cast<std::size_t>(i)] + shift;
        model.log_weights_[i] = -model.mu_[i];
        model.weights_[i] = std::exp(model.log_weights_[i]);
        if (!std::isfinite(model.mu_[i])) {
            throw NumericalError("maxent: mu_" + std::to_string(i) + " overflows after the gauge shift");
        }
    }
    model.table_ = suffix_table(std::span<const double>(model.log_weights_.data(), static_cast<std::size_t>(n)), ell);
    model.bernoulli_ = logistic_probabilities(model.mu_, ell);
    return model;
}

double MaxEntModel::z() const
{
    return std::exp(log_z());
}

RVec marginals(const MaxEntModel& model)
{
    const int n = model.n();
    const int ell = model.ell();
    const auto& suffix = model.table();
    const auto lw = std::span<const double>(model.log_weights().data(), static_cast<std::size_t>(n));
    const auto prefix = tabulate(lw, ell, false);
    const auto stride = static_cast<std::size_t>(ell + 1);
    const bool linear = prefix.domain == Domain::linear && suffix.domain() == Domain::linear;

    // q_i = w_i Z(ell-1, [n] \ {i}) / Z, with the complement split into the
    // prefix {0..i-1} and the suffix {i+1..n-1}.
    RVec q(n);
    const double log_z = model.log_z();
    const double z = linear ? suffix.z(ell, 0) : 0.0;
    for (int i = 0; i < n; ++i) {
        const int a_lo = std::max(0, ell - 1 - (n - i - 1));
        const int a_hi = std::min(i, ell - 1);
        const double* f = (linear ? prefix.lin.data() : prefix.log.data()) + static_cast<std::size_t>(i) * stride;
        if (linear) {
            double acc = 0.0;
            for (int a = a_lo; a <= a_hi; ++a) {
                acc += f[a] * suffix.z(ell - 1 - a, i + 1);
            }
            q[i] = model.weights()[i] * acc / z;
        } else {
            double acc = kNegInf;
            for (int a = a_lo; a <= a_hi; ++a) {
                acc = lse(acc, f[a] + suffix.log_z(ell - 1 - a, i + 1));
            }
            q[i] = std::exp(lw[static_cast<std::size_t>(i)] + acc - log_z);
        }
    }
    return q;
}

RMat pair_marginals(const MaxEntModel& model, Exec exec)
{
    const int n = model.n();
    const int ell = model.ell();
    const RVec q = marginals(model);
    const RVec& lw = model.log_weights();
    RMat Q = RMat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        Q(i, i) = q[i];
    }
    if (n == 1) {
        return Q;
    }
    if (ell == n) {
        Q.setOnes();
        return Q;
    }
    if (ell == 1) {
        return Q;
    }

    const auto prefix = tabulate(std::span<const double>(lw.data(), static_cast<std::size_t>(n)), ell, false);
    const auto stride = static_cast<std::size_t>(ell + 1);
    const auto& suffix = model.table();
    const double log_z = model.log_z();

    // Q_ij = w_i w_j Z(ell-2, [n] \ {i,j}) / Z evaluated directly.
    auto direct = [&](int i, int j) {
        std::vector<double> g(static_cast<std::size_t>(ell - 1));
        const double* f = prefix.log.data() + static_cast<std::size_t>(i) * stride;
        std::copy_n(f, ell - 1, g.begin());
        for (int t = i + 1; t < j; ++t) {
            for (int a = ell - 2; a >= 1; --a) {
                g[static_cast<std::size_t>(a)] = lse(g[static_cast<std::size_t>(a)], lw[t] + g[static_cast<std::size_t>(a - 1)]);
            }
        }
        double acc = kNegInf;
        for (int a = 0; a <= ell - 2; ++a) {
            acc = lse(acc, g[static_cast<std::size_t>(a)] + suffix.log_z(ell - 2 - a, j + 1));
        }
        return std::exp(lw[i] + lw[j] + acc - log_z);
    };

    auto fill_row = [&](int i) {
        for (int j = i + 1; j < n; ++j) {
            if (lw[i] == lw[j]) {
                continue; // exact ties resolved by the row-sum identity below
            }
            // rho = w_small / w_big in (0, 1)
            const bool i_big = lw[i] > lw[j];
            const double rho = std::exp(-std::abs(lw[i] - lw[j]));
            double v;
            if (1.0 - rho < kNearTieRatio) {
                v = direct(i, j);
            } else {
                const double q_big = i_big ? q[i] : q[j];
                const double q_small = i_big ? q[j] : q[i];
                v = (q_small - q_big * rho) / (1.0 - rho);
            }
            Q(i, j) = v;
            Q(j, i) = v;
        }
    };

    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 8)
        for (int i = 0; i < n; ++i) {
            fill_row(i);
        }
    } else {
        for (int i = 0; i < n; ++i) {
            fill_row(i);
        }
    }

    // Tie groups: within a group all off-diagonal entries of a row are equal,
    // and each row sums to q_i * ell.
    std::map<double, std::vector<int>> groups;
    for (int i = 0; i < n; ++i) {
        groups[lw[i]].push_back(i);
    }
    for (const auto& [key, members] : groups) {
        if (members.size() < 2) {
            continue;
        }
        const double c = static_cast<double>(members.size() - 1);
        std::vector<double> row_value(members.size());
        for (std::size_t m = 0; m < members.size(); ++m) {
            const int i = members[m];
            double outside = 0.0;
            for (int k = 0; k < n; ++k) {
                if (lw[k] != key) {
                    outside += Q(i, k);
                }
            }
            row_value[m] = (q[i] * (ell - 1) - outside) / c;
        }
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                const double v = 0.5 * (row_value[a] + row_value[b]);
                Q(members[a], members[b]) = v;
                Q(members[b], members[a]) = v;
            }
        }
    }
    return Q;
}

double dual_objective(const MaxEntModel& model, const RVec& q_target)
{
    if (q_target.size() != model.n()) {
        throw InvalidInput("dual_objective: size mismatch");
    }
    return model.mu().dot(q_target) + model.log_z();
}

FitResult fit_weights(const RVec& q_target, const FitOptions& options)
{
    const auto n = q_target.size();
    if (n == 0) {
        throw InvalidInput("fit_weights: empty marginal vector");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double qi = q_target[i];
        if (!std::isfinite(qi) || qi <= 1e-12 || qi >= 1.0 - 1e-12) {
            throw InvalidInput("fit_weights: q_" + std::to_string(i) + " = " + std::to_string(qi) +
                               " is at the boundary; include (q = 1) or exclude (q = 0) it deterministically "
                               "and fit the remaining items");
        }
    }
    const double total = q_target.sum();
    const int ell = static_cast<int>(std::lround(total));
    if (std::abs(total - ell) > 1e-6 || ell < 1 || ell >= n) {
        throw InvalidInput("fit_weights: marginals sum to " + std::to_string(total) +
                           ", which is not an integer subset size within 1e-6");
    }

    // exact ties in the target keep exactly tied weights
    std::map<double, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < n; ++i) {
        groups[q_target[i]].push_back(i);
    }
    auto symmetrize = [&](RVec& x) {
        for (const auto& [key, members] : groups) {
            if (members.size() < 2) {
                continue;
            }
            double avg = 0.0;
            for (auto i : members) {
                avg += x[i];
            }
            avg /= static_cast<double>(members.size());
            for (auto i : members) {
                x[i] = avg;
            }
        }
    };

    RVec mu(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        mu[i] = -std::log(q_target[i] / (1.0 - q_target[i]));
    }
    auto span_of = [](const RVec& v) { return std::span<const double>(v.data(), static_cast<std::size_t>(v.size())); };

    MaxEntModel model = MaxEntModel::build(span_of(mu), ell);
    RVec q = marginals(model);
    RVec grad = q_target - q;
    double residual = grad.cwiseAbs().maxCoeff();
    double g = dual_objective(model, q_target);

    FitResult result{model, 0, residual, g, residual <= options.tol, false, {g}};
    bool full = false;
    int stall = 0;

    for (int it = 1; it <= options.max_iter && residual > options.tol; ++it) {
        RVec step(n);
        if (full) {
            const RMat Q = pair_marginals(model, Exec::serial);
            RMat K = Q - q * q.transpose();
            // K is singular along the all-ones direction; the gradient is
            // orthogonal to it, so adding J leaves the solution unchanged.
            K.array() += 1.0 / static_cast<double>(n);
            step = K.ldlt().solve(-grad);
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                step[i] = -grad[i] / (q[i] * (1.0 - q[i]));
            }
        }
        step = step.cwiseMax(-10.0).cwiseMin(10.0);
        symmetrize(step);
        double slope = grad.dot(step);
        if (!(slope < 0.0)) {
            step = -grad;
            slope = -grad.squaredNorm();
        }

        // Armijo backtracking on the dual; near the optimum the dual cannot
        // resolve progress, so a strict residual decrease is also accepted.
        double t = 1.0;
        bool accepted = false;
        MaxEntModel trial = model;
        RVec trial_q;
        double trial_g = g;
        double trial_res = residual;
        for (int ls = 0; ls < 40; ++ls) {
            RVec trial_mu = model.mu() + t * step;
            symmetrize(trial_mu);
            trial = MaxEntModel::build(span_of(trial_mu), ell);
            trial_q = marginals(trial);
            trial_g = dual_objective(trial, q_target);
            trial_res = (q_target - trial_q).cwiseAbs().maxCoeff();
            if (trial_g <= g + 1e-4 * t * slope || trial_res < residual) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (!full) {
                full = true;
                result.used_full_newton = true;
                continue;
            }
            break;
        }

        stall = trial_res > 0.5 * residual ? stall + 1 : 0;
        if (stall >= 5 && !full) {
            full = true;
            result.used_full_newton = true;
        }

        model = std::move(trial);
        q = std::move(trial_q);
        grad = q_target - q;
        residual = trial_res;
        g = trial_g;
        result.dual_history.push_back(g);
        result.iterations = it;
        if (residual < result.residual) {
            result.model = model;
            result.residual = residual;
            result.dual_objective = g;
        }
    }
    result.converged = result.residual <= options.tol;
    return result;
}

SubsetSample sample_sequential(const MaxEntModel& model, Rng& rng)
{
    const int n = model.n();
    int need = model.ell();
    const auto& t = model.table();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    SubsetSample out;
    out.items.reserve(static_cast<std::size_t>(need));
    const bool linear = t.domain() == Domain::linear;
    for (int i = 0; i < n && need > 0; ++i) {
        if (need == n - i) {
            for (int j = i; j < n; ++j) {
                out.items.push_back(j);
            }
            break;
        }
        const double p = linear ? model.weights()[i] * t.z(need - 1, i + 1) / t.z(need, i)
                                : std::exp(model.log_weights()[i] + t.log_z(need - 1, i + 1) - t.log_z(need, i));
        if (unif(rng) < p) {
            out.items.push_back(i);
            --need;
        }
    }
    return out;
}

SubsetSample sample_glauber(const MaxEntModel& model, Rng& rng, int max_restarts)
{
    const int n = model.n();
    const int ell = model.ell();
    const RVec& p = model.bernoulli_probabilities();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::uniform_int_distribution<int> when(0, n);
    std::vector<char> x(static_cast<std::size_t>(n));

    for (int restart = 0; restart <= max_restarts; ++restart) {
        int weight = 0;
        for (int i = 0; i < n; ++i) {
            x[static_cast<std::size_t>(i)] = unif(rng) < p[i] ? 1 : 0;
            weight += x[static_cast<std::size_t>(i)];
        }
        // The check time is drawn before the walk. Stopping at the first hit
        // of weight ell instead would bias the output toward states near the
        // starting weight.
        const int t_check = when(rng);
        for (int step = 0; step < t_check; ++step) {
            const int i = pick(rng);
            const char nx = unif(rng) < p[i] ? 1 : 0;
            weight += nx - x[static_cast<std::size_t>(i)];
            x[static_cast<std::size_t>(i)] = nx;
        }
        if (weight == ell) {
            SubsetSample out;
            out.restarts = restart;
            out.items.reserve(static_cast<std::size_t>(ell));
            for (int i = 0; i < n; ++i) {
                if (x[static_cast<std::size_t>(i)]) {
                    out.items.push_back(i);
                }
            }
            return out;
        }
    }
    throw NonConvergence("sample_glauber: no subset of size " + std::to_string(ell) + " after " +
                             std::to_string(max_restarts) + " restarts",
                         max_restarts, 0.0);
}

} // namespace rtrunc::maxent
