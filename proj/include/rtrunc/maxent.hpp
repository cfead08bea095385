#pragma once

#include <span>
#include <vector>

#include "rtrunc/common.hpp"

// Max-entropy (conditional Poisson) distributions over size-ell subsets of
// n items:  p_mu(S) = exp(-sum_{i in S} mu_i) / Z.

namespace rtrunc::maxent {

enum class Domain
{
    linear,
    log,
};

/// Partition values Z(a, {i, ..., n-1}) for 0 <= a <= ell and 0 <= i <= n
/// (suffix sets; i = n is the empty set). Always readable in log form; the
/// linear values are kept as well when the linear recursion stayed in range.
class PartitionTable
{
public:
    PartitionTable() = default;
    PartitionTable(int n, int ell, Domain domain, std::vector<double> log_values, std::vector<double> linear_values);

    int n() const { return n_; }
    int ell() const { return ell_; }
    Domain domain() const { return domain_; }

    double log_z(int a, int i) const { return log_[idx(a, i)]; }
    /// Only valid when domain() == Domain::linear.
    double z(int a, int i) const { return lin_[idx(a, i)]; }

private:
    std::size_t idx(int a, int i) const
    {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(ell_ + 1) + static_cast<std::size_t>(a);
    }

    int n_ = 0;
    int ell_ = 0;
    Domain domain_ = Domain::linear;
    std::vector<double> log_;
    std::vector<double> lin_;
};

/// Z recursion over suffix sets for the raw (unshifted) weights exp(-mu).
/// Runs in the linear domain and falls back to log-sum-exp when weights or
/// partition values leave the safe floating-point range.
PartitionTable partition_recursive(std::span<const double> mu, int ell);

/// Z(ell, [n]) from the signed power-sum (Newton identity) recursion, with
/// naive O(n ell) power sums. Throws NumericalError when the alternating sum
/// cancels badly (negative result, or relative disagreement with the
/// recursion above 1e-6).
double partition_power_sums(std::span<const double> mu, int ell);

class MaxEntModel
{
public:
    /// Shifts mu so that sum exp(-mu_i) = ell and tabulates suffix partition
    /// values. Throws InvalidInput for ell outside [1, n] or non-finite mu.
    static MaxEntModel build(std::span<const double> mu, int ell);

    int n() const { return n_; }
    int ell() const { return ell_; }
    /// Weights in the sum exp(-mu) = ell gauge.
    const RVec& mu() const { return mu_; }
    const RVec& weights() const { return weights_; }
    const RVec& log_weights() const { return log_weights_; }
    /// Constant added to the caller's mu to reach the gauge.
    double shift() const { return shift_; }

    const PartitionTable& table() const { return table_; }
    Domain domain() const { return table_.domain(); }

    /// log Z(ell, [n]) in the shifted gauge.
    double log_z() const { return table_.log_z(ell_, 0); }
    double z() const;
    /// log Z for the weights the caller passed in.
    double log_z_unshifted() const { return log_z() + shift_ * ell_; }

    /// Inclusion probabilities of the product Bernoulli law whose conditioning
    /// on |x| = ell is p_mu (odds proportional to the weights).
    const RVec& bernoulli_probabilities() const { return bernoulli_; }

private:
    MaxEntModel() = default;

    int n_ = 0;
    int ell_ = 0;
    double shift_ = 0.0;
    RVec mu_;
    RVec weights_;
    RVec log_weights_;
    RVec bernoulli_;
    PartitionTable table_;
};

inline MaxEntModel build_model(std::span<const double> mu, int ell)
{
    return MaxEntModel::build(mu, ell);
}

/// Single-item inclusion probabilities q_i, O(n ell).
RVec marginals(const MaxEntModel& model);

/// Pair inclusion probabilities Q_ij (Q_ii = q_i), O(n^2) plus O(n ell) per
/// near-tied pair.
RMat pair_marginals(const MaxEntModel& model, Exec exec = Exec::parallel);

/// Dual objective g_q(mu) = sum mu_i q_i + log Z(mu); gauge invariant when
/// sum q = ell.
double dual_objective(const MaxEntModel& model, const RVec& q_target);

struct FitOptions
{
    double tol = 1e-10; ///< infinity-norm marginal residual
    int max_iter = 200;
};

struct FitResult
{
    MaxEntModel model;
    int iterations = 0;
    double residual = 0.0;
    double dual_objective = 0.0;
    bool converged = false;
    bool used_full_newton = false;
    std::vector<double> dual_history;
};

/// Newton fitting of the weights so that marginals(model) matches q_target.
/// Uses the diagonal covariance with backtracking line search, switching to
/// the dense covariance when progress stalls. Returns the best iterate with
/// converged = false if max_iter is exhausted.
FitResult fit_weights(const RVec& q_target, const FitOptions& options = {});

struct SubsetSample
{
    std::vector<int> items; ///< sorted, size ell
    int restarts = 0;
};

/// Exact sample by sequential conditioning on suffix partition values; O(n).
SubsetSample sample_sequential(const MaxEntModel& model, Rng& rng);

/// Exact sample by product-Bernoulli proposal plus Glauber updates. Each
/// round runs the walk for a number of steps drawn uniformly from {0..n}
/// and accepts if the Hamming weight is then ell; otherwise it restarts.
/// Throws NonConvergence when the restart budget is exhausted.
SubsetSample sample_glauber(const MaxEntModel& model, Rng& rng, int max_restarts = 10000);

} // namespace rtrunc::maxent
