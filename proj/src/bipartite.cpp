#include "rtrunc/bipartite.hpp"

#include <string>

#include <Eigen/SVD>

#include "rtrunc/error.hpp"
#include "rtrunc/robust.hpp"
#include "rtrunc/tracedist.hpp"

namespace rtrunc::bipartite {

namespace {

constexpr double kRankTol = 1e-14;

CMat embedding(const BipartiteState& st)
{
    const int r = static_cast<int>(st.schmidt.size());
    CMat V(st.a * st.b, r);
    for (int i = 0; i < st.a; ++i) {
        for (int j = 0; j < st.b; ++j) {
            for (int t = 0; t < r; ++t) {
                V(i * st.b + j, t) = st.left_basis(i, t) * std::conj(st.right_basis(j, t));
            }
        }
    }
    return V;
}

} // namespace

int BipartiteState::rank() const
{
    int r = 0;
    while (r < schmidt.size() && schmidt[r] > 0.0) {
        ++r;
    }
    return r;
}

BipartiteState schmidt(const CVec& coeffs, int a, int b)
{
    if (a < 1 || b < 1 || coeffs.size() != static_cast<Eigen::Index>(a) * b) {
        throw InvalidInput("schmidt: expected " + std::to_string(a) + " x " + std::to_string(b) + " coefficients, got " +
                           std::to_string(coeffs.size()));
    }
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        if (!std::isfinite(coeffs[i].real()) || !std::isfinite(coeffs[i].imag())) {
            throw InvalidInput("schmidt: non-finite coefficient at index " + std::to_string(i));
        }
    }
    const double norm = coeffs.norm();
    if (norm == 0.0) {
        throw InvalidInput("schmidt: zero state");
    }
    BipartiteState st;
    st.a = a;
    st.b = b;
    st.renormalized = std::abs(norm - 1.0) > 1e-6;
    st.matrixized.resize(a, b);
    for (int i = 0; i < a; ++i) {
        for (int j = 0; j < b; ++j) {
            st.matrixized(i, j) = coeffs[i * b + j] / norm;
        }
    }
    Eigen::JacobiSVD<CMat> svd(st.matrixized, Eigen::ComputeThinU | Eigen::ComputeThinV);
    st.schmidt = svd.singularValues();
    for (Eigen::Index i = 0; i < st.schmidt.size(); ++i) {
        if (st.schmidt[i] < kRankTol) {
            st.schmidt[i] = 0.0;
        }
    }
    st.schmidt /= st.schmidt.norm();
    st.left_basis = svd.matrixU();
    st.right_basis = svd.matrixV();
    return st;
}

EntangledResult solve_entangled(const BipartiteState& state, int k, Mode mode, const maxent::FitOptions& fit)
{
    const int rmax = static_cast<int>(state.schmidt.size());
    if (k < 1 || k > rmax) {
        throw InvalidInput("solve_entangled: k = " + std::to_string(k) + " out of range [1, " + std::to_string(rmax) +
                           "]");
    }
    const auto canon = state.coefficient_vector();
    if (mode == Mode::trace) {
        const auto sol = tracedist::solve(canon, k);
        return {sol.lambda, tracedist::build_ensemble(sol, canon, fit)};
    }
    auto ens = robust::build_ensemble(canon, k, fit.tol < robust::default_fit().tol ? fit : robust::default_fit());
    return {robustness_k(canon, k), std::move(ens)};
}

CVec lift_state(const BipartiteState& state, const RVec& w)
{
    if (w.size() != state.schmidt.size()) {
        throw InvalidInput("lift_state: coefficient length mismatch");
    }
    CVec out = CVec::Zero(static_cast<Eigen::Index>(state.a) * state.b);
    for (Eigen::Index t = 0; t < w.size(); ++t) {
        if (w[t] == 0.0) {
            continue;
        }
        for (int i = 0; i < state.a; ++i) {
            const cplx xi = w[t] * state.left_basis(i, t);
            for (int j = 0; j < state.b; ++j) {
                out[i * state.b + j] += xi * std::conj(state.right_basis(j, t));
            }
        }
    }
    return out;
}

CVec sample_low_rank_state(const BipartiteState& state, const SparseEnsemble& ens, Rng& rng)
{
    // Schmidt coefficients are already sorted, so canonical order is index order
    const CVec w = restore(sample_state(ens, rng), ens.canon);
    return lift_state(state, w.real());
}

CMat lift_density(const BipartiteState& state, const RMat& sigma)
{
    const CMat V = embedding(state);
    return V * sigma.cast<cplx>() * V.adjoint();
}

} // namespace rtrunc::bipartite
