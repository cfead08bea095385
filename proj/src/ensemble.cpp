#include "rtrunc/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rtrunc/error.hpp"

namespace rtrunc {

namespace {

constexpr double kPeelTol = 1e-9;
constexpr double kSumTol = 1e-8;

} // namespace

SparseEnsemble make_ensemble(EnsembleKind kind, const CanonicalVector& canon, int k, RVec prefix,
                             int window_begin, int window_end, double window_amp, RVec marginals,
                             double norm_const, const maxent::FitOptions& fit)
{
    const int w = window_end - window_begin;
    if (w < 0 || window_begin < 0 || window_end > static_cast<int>(canon.dim()) || marginals.size() != w ||
        prefix.size() > window_begin) {
        throw InvalidInput("make_ensemble: inconsistent window layout");
    }

    SparseEnsemble ens;
    ens.kind = kind;
    ens.canon = canon;
    ens.k = k;
    ens.prefix = std::move(prefix);
    ens.window_begin = window_begin;
    ens.window_end = window_end;
    ens.window_amp = window_amp;
    ens.subset_size = k - static_cast<int>(ens.prefix.size());
    ens.norm_const = norm_const;

    const double total = marginals.sum();
    if (std::abs(total - ens.subset_size) > kSumTol) {
        throw InternalConsistencyError("ensemble marginals sum to " + std::to_string(total) + ", expected " +
                                       std::to_string(ens.subset_size));
    }
    for (int j = 0; j < w; ++j) {
        const double q = marginals[j];
        if (q < -kPeelTol || q > 1.0 + kPeelTol) {
            throw InternalConsistencyError("ensemble marginal " + std::to_string(q) + " at canonical position " +
                                           std::to_string(window_begin + j) + " is outside [0, 1]");
        }
        if (q >= 1.0 - kPeelTol) {
            ens.forced.push_back(j);
        } else if (q > kPeelTol) {
            ens.free_items.push_back(j);
        }
    }
    ens.marginals = std::move(marginals);

    const int free_size = ens.subset_size - static_cast<int>(ens.forced.size());
    if (free_size < 0 || free_size > static_cast<int>(ens.free_items.size())) {
        throw InternalConsistencyError("ensemble: " + std::to_string(ens.forced.size()) +
                                       " forced items do not fit a subset of size " + std::to_string(ens.subset_size));
    }
    if (free_size == 0 || free_size == static_cast<int>(ens.free_items.size())) {
        // Everything left is forced one way or the other.
        for (int j : ens.free_items) {
            if (free_size > 0) {
                ens.forced.push_back(j);
            }
        }
        std::sort(ens.forced.begin(), ens.forced.end());
        ens.free_items.clear();
        return ens;
    }

    RVec q_free(static_cast<Eigen::Index>(ens.free_items.size()));
    for (std::size_t i = 0; i < ens.free_items.size(); ++i) {
        q_free[static_cast<Eigen::Index>(i)] = ens.marginals[ens.free_items[i]];
    }
    // Rescale the free block so it sums to the integer subset size exactly;
    // the shift is at most kSumTol spread over the block.
    q_free *= free_size / q_free.sum();

    auto result = maxent::fit_weights(q_free, fit);
    if (!result.converged) {
        throw NonConvergence("ensemble weight fit stopped at residual " + std::to_string(result.residual),
                             result.iterations, result.residual);
    }
    ens.fit_residual = result.residual;
    ens.fit_iterations = result.iterations;
    ens.model = std::move(result.model);
    return ens;
}

SparseEnsemble point_mass_ensemble(EnsembleKind kind, const CanonicalVector& canon, int k, const RVec& state)
{
    SparseEnsemble ens;
    ens.kind = kind;
    ens.canon = canon;
    ens.k = k;
    int last = static_cast<int>(state.size());
    while (last > 0 && state[last - 1] == 0.0) {
        --last;
    }
    ens.prefix = state.head(last);
    ens.window_begin = last;
    ens.window_end = last;
    ens.subset_size = 0;
    ens.marginals = RVec(0);
    ens.norm_const = state.norm();
    return ens;
}

std::vector<int> sample_subset(const SparseEnsemble& ens, Rng& rng)
{
    std::vector<int> out = ens.forced;
    if (ens.model) {
        const auto s = maxent::sample_sequential(*ens.model, rng);
        for (int i : s.items) {
            out.push_back(ens.free_items[static_cast<std::size_t>(i)]);
        }
        std::sort(out.begin(), out.end());
    }
    return out;
}

RVec state_for_subset(const SparseEnsemble& ens, const std::vector<int>& subset)
{
    RVec w = RVec::Zero(ens.dim());
    w.head(ens.prefix.size()) = ens.prefix;
    for (int j : subset) {
        w[ens.window_begin + j] = ens.window_amp;
    }
    return w / ens.norm_const;
}

RVec sample_state(const SparseEnsemble& ens, Rng& rng)
{
    return state_for_subset(ens, sample_subset(ens, rng));
}

RVec realized_marginals(const SparseEnsemble& ens)
{
    RVec q = RVec::Zero(ens.window_size());
    for (int j : ens.forced) {
        q[j] = 1.0;
    }
    if (ens.model) {
        const RVec qm = maxent::marginals(*ens.model);
        for (std::size_t i = 0; i < ens.free_items.size(); ++i) {
            q[ens.free_items[i]] = qm[static_cast<Eigen::Index>(i)];
        }
    }
    return q;
}

RMat window_pair_marginals(const SparseEnsemble& ens, Exec exec)
{
    const int w = ens.window_size();
    const RVec q = realized_marginals(ens);
    RMat Q = RMat::Zero(w, w);
    for (int a : ens.forced) {
        for (int j = 0; j < w; ++j) {
            Q(a, j) = q[j];
            Q(j, a) = q[j];
        }
    }
    if (ens.model) {
        const RMat Qm = maxent::pair_marginals(*ens.model, exec);
        const auto nf = ens.free_items.size();
        for (std::size_t a = 0; a < nf; ++a) {
            for (std::size_t b = 0; b < nf; ++b) {
                Q(ens.free_items[a], ens.free_items[b]) = Qm(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
        }
    }
    return Q;
}

RMat second_moment(const SparseEnsemble& ens, Exec exec)
{
    const int d = ens.dim();
    const int p = static_cast<int>(ens.prefix.size());
    const int wb = ens.window_begin;
    const int w = ens.window_size();
    const double amp = ens.window_amp;
    const double scale = 1.0 / (ens.norm_const * ens.norm_const);
    const RVec q = realized_marginals(ens);
    const RMat Q = window_pair_marginals(ens, exec);
    const RVec& y = ens.prefix;

    RMat out = RMat::Zero(d, d);
    auto fill_row = [&](int i) {
        if (i < p) {
            for (int j = 0; j < p; ++j) {
                out(i, j) = scale * y[i] * y[j];
            }
            for (int j = 0; j < w; ++j) {
                out(i, wb + j) = scale * amp * y[i] * q[j];
            }
        } else if (i >= wb && i < wb + w) {
            const int a = i - wb;
            for (int j = 0; j < p; ++j) {
                out(i, j) = scale * amp * q[a] * y[j];
            }
            for (int j = 0; j < w; ++j) {
                out(i, wb + j) = scale * amp * amp * Q(a, j);
            }
        }
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < d; ++i) {
            fill_row(i);
        }
    } else {
        for (int i = 0; i < d; ++i) {
            fill_row(i);
        }
    }
    return out;
}

} // namespace rtrunc
