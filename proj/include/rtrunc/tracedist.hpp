#pragma once

#include <vector>

#include "rtrunc/common.hpp"
#include "rtrunc/density.hpp"
#include "rtrunc/ensemble.hpp"
#include "rtrunc/specvec.hpp"

// Optimal k-sparse approximation of a pure state in trace distance.
//
// Notation (1-based canonical positions, v sorted nonincreasing, s tail sums):
// the optimal unnormalized measurement vector has the form
//   m~_i = v_i / (1 + lambda)   for i <  k - r
//   m~_i = theta                for k - r <= i < ell
//   m~_i = v_i / lambda         for i >= ell
// with theta = (s_{k-r} - s_ell) / (r + 1 + (ell - k + r) lambda) and
// <v, m~> = 1, where lambda = T_k(v).

namespace rtrunc::tracedist {

struct Solution
{
    double lambda = 0.0; ///< T_k(v)
    int k = 1;
    int r = 0;
    int ell = 0; ///< 1-based, in {k+1, ..., d+1}
    double theta = 0.0;
    RVec m_tilde; ///< canonical order, <v, m~> = 1
    RVec m;       ///< m~ normalized

    /// Number of leading canonical positions kept at v_i / (1 + lambda).
    int prefix_size() const { return k - r - 1; }
    /// 0-based half-open window of canonical positions holding theta.
    int window_begin() const { return k - r - 1; }
    int window_end() const { return ell - 1; }
};

/// Fast solver: bisection on lambda over the monotone map lambda -> <v, m~(lambda)>,
/// then the exact normalization equation for the located (r, ell).
/// Zero entries are ignored; support <= k gives lambda = 0.
Solution solve(const CanonicalVector& canon, int k);

/// Literal double loop over (r ascending, ell ascending) solving the cubic
/// normalization equation for each pair; first accepting triple wins.
/// O(dk) cubic solves; the reference implementation for solve().
Solution solve_exhaustive(const CanonicalVector& canon, int k);

/// Positive real roots of
///   1 = A/(1+x) + B2/(c1 + c2 x) + C/x
/// after clearing denominators (companion-matrix eigenvalues, two Newton
/// polishing steps). Sorted ascending.
std::vector<double> cubic_positive_roots(double A, double B2, double c1, double c2, double C);

/// Max-entropy ensemble whose second moment is the optimal sigma.
SparseEnsemble build_ensemble(const Solution& sol, const CanonicalVector& canon,
                              const maxent::FitOptions& fit = {});

struct SigmaResult
{
    RealDensityMatrix sigma; ///< canonical basis
    double trace_distance;   ///< spectral T(v, sigma)
};

/// Dense sigma in the canonical basis with its spectral trace distance to v.
SigmaResult density_matrix(const SparseEnsemble& ens, Exec exec = Exec::parallel);

/// Unit-norm k-sparse state in canonical order.
RVec sample_state(const SparseEnsemble& ens, Rng& rng);

struct OptimalityReport
{
    double eigen_residual = 0.0;    ///< ||(v v^T - sigma) m - lambda m||
    double fenchel_gap = 0.0;       ///< | ||u||^2_(k,*) + ||m||^2_(k) - 2 <u, m> |
    double spectral_gap = 0.0;      ///< T(v, sigma) - lambda
    double second_eigenvalue = 0.0; ///< of v v^T - sigma
};

/// u = <v, m> v - lambda m; the gap vanishes exactly at the optimum.
double fenchel_gap(const RVec& v, const RVec& m, double lambda, int k);

OptimalityReport verify_optimality(const CanonicalVector& canon, const Solution& sol,
                                   const RealDensityMatrix& sigma);

} // namespace rtrunc::tracedist
