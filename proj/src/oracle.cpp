#include "rtrunc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "rtrunc/density.hpp"
#include "rtrunc/error.hpp"

namespace rtrunc::oracle {

namespace {

constexpr int kMaxEnumerate = 20;
constexpr int kMaxBrute = 16;
constexpr int kChunk = 1024;

void for_each_subset(int n, int ell, const std::function<void(const std::vector<int>&)>& fn)
{
    std::vector<int> c(static_cast<std::size_t>(ell));
    std::iota(c.begin(), c.end(), 0);
    while (true) {
        fn(c);
        int i = ell - 1;
        while (i >= 0 && c[static_cast<std::size_t>(i)] == n - ell + i) {
            --i;
        }
        if (i < 0) {
            return;
        }
        ++c[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < ell; ++j) {
            c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
}

void check_enumerable(int n, int ell)
{
    if (n < 1 || n > kMaxEnumerate) {
        throw InvalidInput("enumeration needs 1 <= n <= " + std::to_string(kMaxEnumerate) + ", got " + std::to_string(n));
    }
    if (ell < 1 || ell > n) {
        throw InvalidInput("enumeration: subset size out of range");
    }
}

/// Fills probs, q, Q, z and entropy for weights mu.
void tabulate(EnumeratedDistribution& out, const RVec& mu)
{
    const int n = out.n;
    std::vector<long double> logw;
    out.subsets.clear();
    for_each_subset(n, out.ell, [&](const std::vector<int>& s) {
        long double acc = 0.0L;
        for (int i : s) {
            acc -= mu[i];
        }
        logw.push_back(acc);
        out.subsets.push_back(s);
    });
    const long double top = *std::max_element(logw.begin(), logw.end());
    long double total = 0.0L;
    std::vector<long double> p(logw.size());
    for (std::size_t t = 0; t < logw.size(); ++t) {
        p[t] = std::exp(logw[t] - top);
        total += p[t];
    }
    std::vector<long double> q(static_cast<std::size_t>(n), 0.0L);
    std::vector<long double> Q(static_cast<std::size_t>(n * n), 0.0L);
    long double entropy = 0.0L;
    out.probs.resize(static_cast<Eigen::Index>(p.size()));
    for (std::size_t t = 0; t < p.size(); ++t) {
        p[t] /= total;
        out.probs[static_cast<Eigen::Index>(t)] = static_cast<double>(p[t]);
        if (p[t] > 0.0L) {
            entropy -= p[t] * std::log(p[t]);
        }
        const auto& s = out.subsets[t];
        for (int i : s) {
            q[static_cast<std::size_t>(i)] += p[t];
            for (int j : s) {
                Q[static_cast<std::size_t>(i * n + j)] += p[t];
            }
        }
    }
    out.q.resize(n);
    out.Q.resize(n, n);
    for (int i = 0; i < n; ++i) {
        out.q[i] = static_cast<double>(q[static_cast<std::size_t>(i)]);
        for (int j = 0; j < n; ++j) {
            out.Q(i, j) = static_cast<double>(Q[static_cast<std::size_t>(i * n + j)]);
        }
    }
    out.z = static_cast<double>(std::exp(top) * total);
    out.entropy = static_cast<double>(entropy);
    out.mu = mu;
}

double topk_sq(const RVec& m, int k)
{
    std::vector<double> a(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        a[static_cast<std::size_t>(i)] = m[i] * m[i];
    }
    std::nth_element(a.begin(), a.begin() + (k - 1), a.end(), std::greater<>());
    return std::accumulate(a.begin(), a.begin() + k, 0.0);
}

double objective(const RVec& a, const RVec& m, int k)
{
    const double ip = a.dot(m);
    return ip * ip - topk_sq(m, k);
}

/// Top eigenpair of the form a a^T - diag(1_k) restricted to a face given by
/// block sizes over the leading coordinates (the rest is zero). Returns the
/// eigenvalue if the eigenvector lies in the sorted nonnegative cone.
std::optional<double> face_value(const RVec& a, int k, const std::vector<int>& blocks, RVec* vec = nullptr)
{
    const auto d = a.size();
    const auto b = static_cast<Eigen::Index>(blocks.size());
    RMat B = RMat::Zero(d, b);
    int pos = 0;
    for (Eigen::Index j = 0; j < b; ++j) {
        const int size = blocks[static_cast<std::size_t>(j)];
        for (int t = 0; t < size; ++t) {
            B(pos + t, j) = 1.0 / std::sqrt(static_cast<double>(size));
        }
        pos += size;
    }
    RMat M = a * a.transpose();
    for (int i = 0; i < std::min<int>(k, static_cast<int>(d)); ++i) {
        M(i, i) -= 1.0;
    }
    const RMat R = B.transpose() * M * B;
    Eigen::SelfAdjointEigenSolver<RMat> es(R);
    RVec x = es.eigenvectors().col(b - 1);
    if (x.sum() < 0.0) {
        x = -x;
    }
    double prev = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < b; ++j) {
        const double val = x[j] / std::sqrt(static_cast<double>(blocks[static_cast<std::size_t>(j)]));
        if (val < -1e-12 || val > prev + 1e-12) {
            return std::nullopt;
        }
        prev = val;
    }
    if (vec) {
        *vec = B * x;
    }
    return es.eigenvalues()[b - 1];
}

/// Candidate faces near a sorted nonnegative vector: single-linkage
/// groupings of adjacent entries at every gap threshold.
std::vector<std::vector<int>> nearby_faces(const RVec& sorted)
{
    const auto d = sorted.size();
    std::vector<double> gaps(static_cast<std::size_t>(std::max<Eigen::Index>(d - 1, 0)));
    for (Eigen::Index i = 1; i < d; ++i) {
        gaps[static_cast<std::size_t>(i - 1)] = sorted[i - 1] - sorted[i];
    }
    std::vector<double> thresholds = gaps;
    thresholds.push_back(-1.0);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<std::vector<int>> faces;
    for (double thr : thresholds) {
        std::vector<int> blocks{1};
        for (Eigen::Index i = 1; i < d; ++i) {
            if (gaps[static_cast<std::size_t>(i - 1)] <= thr) {
                ++blocks.back();
            } else {
                blocks.push_back(1);
            }
        }
        faces.push_back(blocks);
        if (blocks.size() > 1) {
            blocks.pop_back(); // trailing block set to zero
            faces.push_back(blocks);
        }
    }
    return faces;
}

/// Hill climb over faces adjacent to `blocks` (merge two neighbouring
/// blocks, shift a boundary, split a block, drop or extend the zero tail) while the feasible top
/// eigenvalue improves.
double climb_faces(const RVec& a, int k, std::vector<int> blocks, double value, RVec& vec)
{
    const int d = static_cast<int>(a.size());
    for (bool improved = true; improved;) {
        improved = false;
        std::vector<std::vector<int>> moves;
        const int used = std::accumulate(blocks.begin(), blocks.end(), 0);
        for (std::size_t j = 0; j + 1 < blocks.size(); ++j) {
            auto nb = blocks;
            nb[j] += nb[j + 1];
            nb.erase(nb.begin() + static_cast<std::ptrdiff_t>(j) + 1);
            moves.push_back(std::move(nb));
        }
        for (std::size_t j = 0; j + 1 < blocks.size(); ++j) {
            // shift the boundary between blocks j and j+1 by one position
            for (int dir : {-1, 1}) {
                auto nb = blocks;
                nb[j] += dir;
                nb[j + 1] -= dir;
                if (nb[j] > 0 && nb[j + 1] > 0) {
                    moves.push_back(std::move(nb));
                }
            }
        }
        for (std::size_t j = 0; j < blocks.size(); ++j) {
            for (int cut = 1; cut < blocks[j]; ++cut) {
                auto nb = blocks;
                nb[j] = cut;
                nb.insert(nb.begin() + static_cast<std::ptrdiff_t>(j) + 1, blocks[j] - cut);
                moves.push_back(std::move(nb));
            }
        }
        if (blocks.size() > 1) {
            moves.emplace_back(blocks.begin(), blocks.end() - 1);
            auto shrink = blocks;
            if (--shrink.back() > 0) {
                moves.push_back(std::move(shrink));
            }
        }
        for (int extra = 1; used + extra <= d; ++extra) {
            auto grow = blocks;
            grow.back() += extra;
            moves.push_back(grow);
            auto fresh = blocks;
            fresh.push_back(extra);
            moves.push_back(std::move(fresh));
        }
        for (const auto& nb : moves) {
            RVec cand;
            const auto val = face_value(a, k, nb, &cand);
            if (val && *val > value + 1e-15) {
                value = *val;
                vec = cand;
                blocks = nb;
                improved = true;
                break;
            }
        }
    }
    return value;
}

RVec sorted_magnitudes(const RVec& v)
{
    RVec a = v.cwiseAbs();
    std::sort(a.data(), a.data() + a.size(), std::greater<>());
    return a / a.norm();
}

} // namespace

EnumeratedDistribution enumerate_maxent(const RVec& mu, int ell)
{
    const int n = static_cast<int>(mu.size());
    check_enumerable(n, ell);
    EnumeratedDistribution out;
    out.n = n;
    out.ell = ell;
    tabulate(out, mu);
    return out;
}

EnumeratedDistribution enumerate_maxent_marginals(const RVec& q_target, double tol, int max_iter)
{
    const int n = static_cast<int>(q_target.size());
    const double total = q_target.sum();
    const int ell = static_cast<int>(std::lround(total));
    check_enumerable(n, ell);
    if (std::abs(total - ell) > 1e-6) {
        throw InvalidInput("enumerate_maxent_marginals: marginals do not sum to an integer");
    }
    for (int i = 0; i < n; ++i) {
        if (!(q_target[i] > 0.0 && q_target[i] < 1.0)) {
            throw InvalidInput("enumerate_maxent_marginals: marginals must lie strictly inside (0, 1)");
        }
    }

    EnumeratedDistribution out;
    out.n = n;
    out.ell = ell;
    RVec mu(n);
    for (int i = 0; i < n; ++i) {
        mu[i] = -std::log(q_target[i] / (1.0 - q_target[i]));
    }
    auto dual = [&](const EnumeratedDistribution& e) { return e.mu.dot(q_target) + std::log(e.z); };

    tabulate(out, mu);
    double g = dual(out);
    int it = 0;
    for (; it < max_iter; ++it) {
        const RVec grad = q_target - out.q;
        if (grad.cwiseAbs().maxCoeff() <= tol) {
            break;
        }
        RMat H = out.Q - out.q * out.q.transpose();
        H.array() += 1.0 / n;
        const RVec step = H.ldlt().solve(-grad);
        const double slope = grad.dot(step);
        double t = 1.0;
        EnumeratedDistribution trial = out;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            trial.n = n;
            trial.ell = ell;
            tabulate(trial, out.mu + t * step);
            const double gt = dual(trial);
            const double rt = (q_target - trial.q).cwiseAbs().maxCoeff();
            if (gt <= g + 1e-4 * t * slope || rt < grad.cwiseAbs().maxCoeff()) {
                accepted = true;
                g = gt;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            break;
        }
        out = std::move(trial);
    }
    out.iterations = it;
    out.residual = (q_target - out.q).cwiseAbs().maxCoeff();
    if (out.residual > tol) {
        throw NonConvergence("enumerated max-entropy fit stopped at residual " + std::to_string(out.residual), it,
                             out.residual);
    }
    return out;
}

std::size_t subset_rank(const std::vector<int>& subset, int n)
{
    auto binom = [](int a, int b) -> std::size_t {
        if (b < 0 || b > a) {
            return 0;
        }
        std::size_t r = 1;
        for (int i = 1; i <= b; ++i) {
            r = r * static_cast<std::size_t>(a - b + i) / static_cast<std::size_t>(i);
        }
        return r;
    };
    const int ell = static_cast<int>(subset.size());
    std::size_t rank = 0;
    int prev = -1;
    for (int i = 0; i < ell; ++i) {
        for (int j = prev + 1; j < subset[static_cast<std::size_t>(i)]; ++j) {
            rank += binom(n - 1 - j, ell - 1 - i);
        }
        prev = subset[static_cast<std::size_t>(i)];
    }
    return rank;
}

double brute_force_Tk(const RVec& v, int k, int restarts, Rng& rng, const std::optional<RVec>& start, RVec* argmax)
{
    const auto d = static_cast<int>(v.size());
    if (d < 1 || d > kMaxBrute) {
        throw InvalidInput("brute_force_Tk: dimension must be in [1, " + std::to_string(kMaxBrute) + "]");
    }
    if (k < 1 || k > d) {
        throw InvalidInput("brute_force_Tk: k out of range");
    }
    const RVec a = sorted_magnitudes(v);

    struct Best
    {
        double value = -std::numeric_limits<double>::infinity();
        RVec m;
    };

    auto ascend = [&](RVec m) {
        Best out;
        auto consider = [&](const RVec& cand) {
            const double f = objective(a, cand, k);
            if (f > out.value) {
                out.value = f;
                out.m = cand;
            }
        };
        m.normalize();
        RVec run_best = m;
        double run_val = objective(a, m, k);
        for (int t = 0; t < 3000; ++t) {
            // supergradient: 2 <m,a> a - 2 P m, ties at the k-th magnitude averaged
            std::vector<int> order(static_cast<std::size_t>(d));
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int x, int y) { return std::abs(m[x]) > std::abs(m[y]); });
            const double kth = std::abs(m[order[static_cast<std::size_t>(k - 1)]]);
            int strict = 0, tied = 0;
            for (int i = 0; i < d; ++i) {
                const double mag = std::abs(m[i]);
                if (mag > kth + 1e-15) {
                    ++strict;
                } else if (mag >= kth - 1e-15) {
                    ++tied;
                }
            }
            const double tie_weight = tied > 0 ? static_cast<double>(k - strict) / tied : 0.0;
            RVec g = 2.0 * a.dot(m) * a;
            for (int i = 0; i < d; ++i) {
                const double mag = std::abs(m[i]);
                const double w = mag > kth + 1e-15 ? 1.0 : (mag >= kth - 1e-15 ? tie_weight : 0.0);
                g[i] -= 2.0 * w * m[i];
            }
            g -= g.dot(m) * m;
            const double eta = 0.5 / (1.0 + t / 100.0);
            m = (m + eta * g).normalized();
            const double f = objective(a, m, k);
            if (f > run_val) {
                run_val = f;
                run_best = m;
            }
        }
        consider(run_best);

        // finish on the face the run settled on
        RVec sorted = run_best.cwiseAbs();
        std::sort(sorted.data(), sorted.data() + d, std::greater<>());
        consider(sorted);
        std::optional<std::vector<int>> best_face;
        double best_face_val = -std::numeric_limits<double>::infinity();
        RVec best_face_vec;
        for (const auto& blocks : nearby_faces(sorted)) {
            RVec face_vec;
            if (const auto val = face_value(a, k, blocks, &face_vec)) {
                consider(face_vec);
                if (*val > best_face_val) {
                    best_face_val = *val;
                    best_face = blocks;
                    best_face_vec = face_vec;
                }
            }
        }
        if (best_face) {
            climb_faces(a, k, *best_face, best_face_val, best_face_vec);
            consider(best_face_vec);
        }
        return out;
    };

    if (start && start->size() != d) {
        throw InvalidInput("brute_force_Tk: start has the wrong length");
    }
    const int runs = restarts + (start ? 1 : 0);
    std::vector<Best> results(static_cast<std::size_t>(runs));
    const std::uint64_t seed = rng();
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < runs; ++s) {
        RVec m(d);
        if (start && s == restarts) {
            m = start->cwiseAbs();
        } else {
            Rng local = derived_stream(seed, static_cast<std::uint64_t>(s));
            std::normal_distribution<double> gauss(0.0, 1.0);
            for (int i = 0; i < d; ++i) {
                m[i] = gauss(local);
            }
        }
        results[static_cast<std::size_t>(s)] = ascend(m);
    }
    Best best{0.0, a};
    for (const auto& r : results) {
        if (r.value > best.value) {
            best = r;
        }
    }
    if (argmax) {
        *argmax = best.m;
    }
    return best.value;
}

double face_enumeration_Tk(const RVec& v, int k)
{
    const auto d = static_cast<int>(v.size());
    if (d < 1 || d > kMaxBrute) {
        throw InvalidInput("face_enumeration_Tk: dimension must be in [1, " + std::to_string(kMaxBrute) + "]");
    }
    if (k < 1 || k > d) {
        throw InvalidInput("face_enumeration_Tk: k out of range");
    }
    const RVec a = sorted_magnitudes(v);
    double best = 0.0;
    for (int t = 1; t <= d; ++t) {
        // compositions of t: bit i set means a block boundary after position i
        for (unsigned mask = 0; mask < (1u << (t - 1)); ++mask) {
            std::vector<int> blocks{1};
            for (int i = 0; i < t - 1; ++i) {
                if (mask & (1u << i)) {
                    blocks.push_back(1);
                } else {
                    ++blocks.back();
                }
            }
            if (auto val = face_value(a, k, blocks)) {
                best = std::max(best, *val);
            }
        }
    }
    return best;
}

MomentReport monte_carlo_moments(const SparseEnsemble& ens, const CMat& op, int n, std::uint64_t seed, Exec exec,
                                 std::optional<double> sigma_trace_distance)
{
    const int d = ens.dim();
    if (n < 2) {
        throw InvalidInput("monte_carlo_moments: need at least 2 samples");
    }
    if (op.rows() != d || op.cols() != d) {
        throw InvalidInput("monte_carlo_moments: operator dimension mismatch");
    }
    const RVec& v = ens.canon.values();
    const RMat op_re = op.real();

    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<double> td(static_cast<std::size_t>(n));
    const int chunks = (n + kChunk - 1) / kChunk;
    auto run_chunk = [&](int c) {
        Rng rng = derived_stream(seed, static_cast<std::uint64_t>(c));
        const int end = std::min(n, (c + 1) * kChunk);
        std::vector<int> nz;
        for (int s = c * kChunk; s < end; ++s) {
            const RVec w = sample_state(ens, rng);
            nz.clear();
            for (int i = 0; i < d; ++i) {
                if (w[i] != 0.0) {
                    nz.push_back(i);
                }
            }
            double val = 0.0;
            for (int i : nz) {
                for (int j : nz) {
                    val += w[i] * w[j] * op_re(i, j);
                }
            }
            const double ip = v.dot(w);
            x[static_cast<std::size_t>(s)] = val;
            td[static_cast<std::size_t>(s)] = std::sqrt(std::max(0.0, 1.0 - ip * ip));
        }
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int c = 0; c < chunks; ++c) {
            run_chunk(c);
        }
    } else {
        for (int c = 0; c < chunks; ++c) {
            run_chunk(c);
        }
    }

    MomentReport rep;
    rep.n_samples = n;
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double m2 = 0.0, m4 = 0.0;
    for (double xi : x) {
        const double dev = (xi - mean) * (xi - mean);
        m2 += dev;
        m4 += dev * dev;
    }
    rep.mean_estimate = mean;
    rep.sample_variance = m2 / (n - 1);
    const double pop_var = m2 / n;
    rep.variance_std_error = std::sqrt(std::max(0.0, m4 / n - pop_var * pop_var) / n);

    const double tmean = std::accumulate(td.begin(), td.end(), 0.0) / n;
    double tvar = 0.0;
    for (double t : td) {
        tvar += (t - tmean) * (t - tmean);
    }
    rep.mean_trace_distance = tmean;
    rep.trace_distance_std_error = std::sqrt(tvar / (n - 1) / n);

    if (sigma_trace_distance) {
        rep.sigma_trace_distance = *sigma_trace_distance;
    } else {
        const RealDensityMatrix sigma(second_moment(ens, exec));
        rep.sigma_trace_distance = trace_distance(v, sigma);
    }
    const double T = rep.sigma_trace_distance;
    rep.bias_bound = std::sqrt(T);
    rep.variance_bound = T * (1.0 + std::sqrt(T)) * (1.0 + std::sqrt(T));
    return rep;
}

} // namespace rtrunc::oracle
