#include "rtrunc/mps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "rtrunc/error.hpp"
#include "rtrunc/robust.hpp"
#include "rtrunc/tracedist.hpp"

namespace rtrunc::mps {

namespace {

constexpr double kDropTol = 1e-14;

using Site = std::vector<CMat>;

Eigen::Index rows_of(const Site& s) { return s.front().rows(); }
Eigen::Index cols_of(const Site& s) { return s.front().cols(); }

/// Stack A_s vertically: row s * r_l + a.
CMat left_matrix(const Site& site)
{
    const auto rl = rows_of(site), rr = cols_of(site);
    CMat out(rl * static_cast<Eigen::Index>(site.size()), rr);
    for (std::size_t s = 0; s < site.size(); ++s) {
        out.middleRows(static_cast<Eigen::Index>(s) * rl, rl) = site[s];
    }
    return out;
}

Site from_left_matrix(const CMat& m, int phys)
{
    const auto rl = m.rows() / phys;
    Site site(static_cast<std::size_t>(phys));
    for (int s = 0; s < phys; ++s) {
        site[static_cast<std::size_t>(s)] = m.middleRows(s * rl, rl);
    }
    return site;
}

/// Place A_s side by side: column s * r_r + b.
CMat right_matrix(const Site& site)
{
    const auto rl = rows_of(site), rr = cols_of(site);
    CMat out(rl, rr * static_cast<Eigen::Index>(site.size()));
    for (std::size_t s = 0; s < site.size(); ++s) {
        out.middleCols(static_cast<Eigen::Index>(s) * rr, rr) = site[s];
    }
    return out;
}

Site from_right_matrix(const CMat& m, int phys)
{
    const auto rr = m.cols() / phys;
    Site site(static_cast<std::size_t>(phys));
    for (int s = 0; s < phys; ++s) {
        site[static_cast<std::size_t>(s)] = m.middleCols(s * rr, rr);
    }
    return site;
}

/// Thin QR: m = q * r with q having orthonormal columns.
void thin_qr(const CMat& m, CMat& q, CMat& r)
{
    const auto k = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<CMat> qr(m);
    q = qr.householderQ() * CMat::Identity(m.rows(), k);
    r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

void absorb_center(MPSState& mps)
{
    if (!mps.center) {
        return;
    }
    const int m = *mps.center;
    for (auto& a : mps.sites[static_cast<std::size_t>(m)]) {
        a = mps.spectrum.cast<cplx>().asDiagonal() * a;
    }
    mps.center.reset();
    mps.spectrum.resize(0);
}

void keep_bond_indices(MPSState& mps, int m, const std::vector<int>& idx, const RVec& values)
{
    auto& left = mps.sites[static_cast<std::size_t>(m - 1)];
    auto& right = mps.sites[static_cast<std::size_t>(m)];
    const auto t = static_cast<Eigen::Index>(idx.size());
    for (auto& a : left) {
        CMat na(a.rows(), t);
        for (Eigen::Index c = 0; c < t; ++c) {
            na.col(c) = a.col(idx[static_cast<std::size_t>(c)]);
        }
        a = std::move(na);
    }
    for (auto& a : right) {
        CMat na(t, a.cols());
        for (Eigen::Index c = 0; c < t; ++c) {
            na.row(c) = a.row(idx[static_cast<std::size_t>(c)]);
        }
        a = std::move(na);
    }
    mps.spectrum = values;
}

void check_bond(const MPSState& mps, int m)
{
    if (mps.n < 2 || m < 1 || m > mps.n - 1) {
        throw InvalidInput("bond " + std::to_string(m) + " out of range [1, " + std::to_string(mps.n - 1) + "]");
    }
}

} // namespace

std::vector<int> MPSState::bond_dims() const
{
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n + 1));
    out.push_back(1);
    for (const auto& s : sites) {
        out.push_back(static_cast<int>(cols_of(s)));
    }
    return out;
}

std::string to_string(Strategy s)
{
    switch (s) {
    case Strategy::dtrunc:
        return "dtrunc";
    case Strategy::rtrunc_td:
        return "rtrunc-td";
    case Strategy::rtrunc_rob:
        return "rtrunc-rob";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& s)
{
    if (s == "dtrunc") {
        return Strategy::dtrunc;
    }
    if (s == "rtrunc-td") {
        return Strategy::rtrunc_td;
    }
    if (s == "rtrunc-rob") {
        return Strategy::rtrunc_rob;
    }
    throw InvalidInput("unknown truncation strategy '" + s + "'");
}

MPSState random_mps(int n, int phys_dim, int max_bond, Rng& rng)
{
    if (n < 2 || phys_dim < 1 || max_bond < 1) {
        throw InvalidInput("random_mps: need n >= 2, phys_dim >= 1, max_bond >= 1");
    }
    std::vector<int> bonds(static_cast<std::size_t>(n + 1), 1);
    for (int j = 1; j < n; ++j) {
        long long left = 1, right = 1;
        for (int t = 0; t < j && left < max_bond; ++t) {
            left *= phys_dim;
        }
        for (int t = 0; t < n - j && right < max_bond; ++t) {
            right *= phys_dim;
        }
        bonds[static_cast<std::size_t>(j)] = static_cast<int>(std::min<long long>({max_bond, left, right}));
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    MPSState mps;
    mps.n = n;
    mps.phys_dim = phys_dim;
    mps.sites.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        auto& site = mps.sites[static_cast<std::size_t>(j)];
        site.resize(static_cast<std::size_t>(phys_dim));
        for (auto& a : site) {
            a.resize(bonds[static_cast<std::size_t>(j)], bonds[static_cast<std::size_t>(j + 1)]);
            for (Eigen::Index c = 0; c < a.cols(); ++c) {
                for (Eigen::Index r = 0; r < a.rows(); ++r) {
                    const double re = gauss(rng);
                    const double im = gauss(rng);
                    a(r, c) = cplx(re, im);
                }
            }
        }
    }
    mps = canonicalize_mps(std::move(mps), 1);
    mps.spectrum /= mps.spectrum.norm();
    return mps;
}

MPSState canonicalize_mps(MPSState mps, int m)
{
    check_bond(mps, m);
    absorb_center(mps);
    const int p = mps.phys_dim;

    for (int j = mps.n - 1; j >= m; --j) {
        const CMat M = right_matrix(mps.sites[static_cast<std::size_t>(j)]);
        CMat q, r;
        thin_qr(M.adjoint(), q, r);
        mps.sites[static_cast<std::size_t>(j)] = from_right_matrix(q.adjoint(), p);
        const CMat l = r.adjoint();
        for (auto& a : mps.sites[static_cast<std::size_t>(j - 1)]) {
            a = a * l;
        }
    }

    CMat center;
    for (int j = 0; j < m; ++j) {
        CMat q, r;
        thin_qr(left_matrix(mps.sites[static_cast<std::size_t>(j)]), q, r);
        mps.sites[static_cast<std::size_t>(j)] = from_left_matrix(q, p);
        if (j < m - 1) {
            for (auto& a : mps.sites[static_cast<std::size_t>(j + 1)]) {
                a = r * a;
            }
        } else {
            center = r;
        }
    }

    // center = R couples site m-1 (left) and site m (right)
    Eigen::JacobiSVD<CMat> svd(center, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVec& sv = svd.singularValues();
    Eigen::Index t = 0;
    while (t < sv.size() && sv[t] >= kDropTol) {
        ++t;
    }
    t = std::max<Eigen::Index>(t, 1);
    const CMat U = svd.matrixU().leftCols(t);
    const CMat Vh = svd.matrixV().leftCols(t).adjoint();
    for (auto& a : mps.sites[static_cast<std::size_t>(m - 1)]) {
        a = a * U;
    }
    for (auto& a : mps.sites[static_cast<std::size_t>(m)]) {
        a = Vh * a;
    }
    mps.spectrum = sv.head(t);
    mps.center = m;
    return mps;
}

double isometry_residual(const MPSState& mps)
{
    if (!mps.center) {
        throw InvalidInput("isometry_residual: state is not canonical");
    }
    const int m = *mps.center;
    double worst = 0.0;
    for (int j = 0; j < mps.n; ++j) {
        const auto& site = mps.sites[static_cast<std::size_t>(j)];
        CMat g;
        if (j < m) {
            const CMat L = left_matrix(site);
            g = L.adjoint() * L;
        } else {
            const CMat R = right_matrix(site);
            g = R * R.adjoint();
        }
        worst = std::max(worst, (g - CMat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    }
    return worst;
}

MPSState respectrum_power_law(MPSState mps, double gamma)
{
    if (!(gamma >= 0.0)) {
        throw InvalidInput("respectrum_power_law: gamma must be nonnegative");
    }
    for (int m = 1; m < mps.n; ++m) {
        mps = canonicalize_mps(std::move(mps), m);
        RVec s(mps.spectrum.size());
        for (Eigen::Index j = 0; j < s.size(); ++j) {
            s[j] = std::pow(static_cast<double>(j + 1), -gamma);
        }
        mps.spectrum = s / s.norm();
    }
    return mps;
}

MPSState truncate_bond(MPSState mps, int m, int D, Strategy strategy, Rng& rng)
{
    check_bond(mps, m);
    if (D < 1) {
        throw InvalidInput("truncate_bond: D must be at least 1");
    }
    if (mps.center != m) {
        mps = canonicalize_mps(std::move(mps), m);
    }
    const auto r = static_cast<int>(mps.spectrum.size());
    if (D >= r) {
        return mps;
    }

    RVec w;
    if (strategy == Strategy::dtrunc) {
        w = RVec::Zero(r);
        w.head(D) = mps.spectrum.head(D);
        w /= w.norm();
    } else {
        const auto canon = CanonicalVector::from_sorted(mps.spectrum);
        SparseEnsemble ens;
        if (strategy == Strategy::rtrunc_td) {
            ens = tracedist::build_ensemble(tracedist::solve(canon, D), canon);
        } else {
            ens = robust::build_ensemble(canon, D);
        }
        // the spectrum is sorted, so canonical positions are bond indices
        const RVec c = sample_state(ens, rng);
        w = RVec::Zero(r);
        for (int i = 0; i < r; ++i) {
            w[canon.perm()[static_cast<std::size_t>(i)]] = c[i];
        }
    }

    std::vector<int> idx;
    for (int i = 0; i < r; ++i) {
        if (w[i] != 0.0) {
            idx.push_back(i);
        }
    }
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return w[a] > w[b]; });
    RVec values(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        values[static_cast<Eigen::Index>(i)] = w[idx[i]];
    }
    keep_bond_indices(mps, m, idx, values);
    return mps;
}

MPSState truncate_all(MPSState mps, int D, Strategy strategy, Rng& rng)
{
    for (int m = 1; m < mps.n; ++m) {
        mps = canonicalize_mps(std::move(mps), m);
        mps = truncate_bond(std::move(mps), m, D, strategy, rng);
    }
    return mps;
}

double expectation_single_site(const MPSState& state, int site, const CMat& op)
{
    if (site < 0 || site >= state.n) {
        throw InvalidInput("expectation_single_site: site out of range");
    }
    if (op.rows() != state.phys_dim || op.cols() != state.phys_dim) {
        throw InvalidInput("expectation_single_site: operator has the wrong size");
    }
    MPSState mps = state;
    absorb_center(mps);
    CMat L = CMat::Identity(1, 1);
    for (int j = 0; j < mps.n; ++j) {
        const auto& A = mps.sites[static_cast<std::size_t>(j)];
        CMat next = CMat::Zero(cols_of(A), cols_of(A));
        for (int s = 0; s < mps.phys_dim; ++s) {
            const CMat left = A[static_cast<std::size_t>(s)].adjoint() * L;
            for (int t = 0; t < mps.phys_dim; ++t) {
                const cplx o = j == site ? op(s, t) : (s == t ? cplx(1.0) : cplx(0.0));
                if (o != cplx(0.0)) {
                    next += o * left * A[static_cast<std::size_t>(t)];
                }
            }
        }
        L = std::move(next);
    }
    return L(0, 0).real();
}

CVec to_dense(const MPSState& state)
{
    MPSState mps = state;
    absorb_center(mps);
    CMat T = CMat::Identity(1, 1);
    for (int j = 0; j < mps.n; ++j) {
        const auto& A = mps.sites[static_cast<std::size_t>(j)];
        CMat next(T.rows() * mps.phys_dim, cols_of(A));
        for (Eigen::Index row = 0; row < T.rows(); ++row) {
            for (int s = 0; s < mps.phys_dim; ++s) {
                next.row(row * mps.phys_dim + s) = T.row(row) * A[static_cast<std::size_t>(s)];
            }
        }
        T = std::move(next);
    }
    return T.col(0);
}

cplx overlap(const MPSState& a_in, const MPSState& b_in)
{
    if (a_in.n != b_in.n || a_in.phys_dim != b_in.phys_dim) {
        throw InvalidInput("overlap: chains differ in length or physical dimension");
    }
    MPSState a = a_in, b = b_in;
    absorb_center(a);
    absorb_center(b);
    CMat E = CMat::Identity(1, 1);
    for (int j = 0; j < a.n; ++j) {
        const auto& A = a.sites[static_cast<std::size_t>(j)];
        const auto& B = b.sites[static_cast<std::size_t>(j)];
        CMat next = CMat::Zero(cols_of(A), cols_of(B));
        for (int s = 0; s < a.phys_dim; ++s) {
            next += A[static_cast<std::size_t>(s)].adjoint() * E * B[static_cast<std::size_t>(s)];
        }
        E = std::move(next);
    }
    return E(0, 0);
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg, Exec exec)
{
    if (cfg.n < 2 || cfg.samples < 1 || cfg.site < 0 || cfg.site >= cfg.n) {
        throw InvalidInput("run_experiment: invalid configuration");
    }
    CMat Z = CMat::Zero(2, 2);
    Z(0, 0) = 1.0;
    Z(1, 1) = -1.0;
    const int max_bond = cfg.max_bond > 0 ? cfg.max_bond : (1 << 20);

    std::vector<ExperimentRecord> out;
    for (std::uint64_t seed : cfg.seeds) {
        Rng state_rng = derived_stream(seed, 0);
        const MPSState base = random_mps(cfg.n, 2, max_bond, state_rng);
        for (std::size_t gi = 0; gi < cfg.gammas.size(); ++gi) {
            const double gamma = cfg.gammas[gi];
            const MPSState state = respectrum_power_law(base, gamma);
            const double exact = expectation_single_site(state, cfg.site, Z);

            int widest = 1;
            for (int r : state.bond_dims()) {
                widest = std::max(widest, r);
            }
            Rng unused(0);
            auto dtrunc_at = [&](int D) { return truncate_all(state, D, Strategy::dtrunc, unused); };
            int D = cfg.D;
            double fidelity = 0.0;
            if (D > 0) {
                fidelity = std::abs(overlap(state, dtrunc_at(D)));
            } else {
                double best = std::numeric_limits<double>::infinity();
                for (int cand = 1; cand < widest; ++cand) {
                    const double f = std::abs(overlap(state, dtrunc_at(cand)));
                    if (std::abs(f - cfg.target_fidelity) < best) {
                        best = std::abs(f - cfg.target_fidelity);
                        D = cand;
                        fidelity = f;
                    }
                }
            }

            for (Strategy strat : cfg.strategies) {
                ExperimentRecord rec;
                rec.gamma = gamma;
                rec.D = D;
                rec.seed = seed;
                rec.strategy = strat;
                rec.exact = exact;
                rec.dtrunc_fidelity = fidelity;
                if (strat == Strategy::dtrunc) {
                    rec.estimate = expectation_single_site(dtrunc_at(D), cfg.site, Z);
                    rec.sample_count = 1;
                    rec.sample_std = 0.0;
                } else {
                    std::vector<double> vals(static_cast<std::size_t>(cfg.samples));
                    const std::uint64_t stream_base =
                        (static_cast<std::uint64_t>(gi + 1) << 40) | (static_cast<std::uint64_t>(strat) << 32);
                    auto one = [&](int s) {
                        Rng rng = derived_stream(seed, stream_base + static_cast<std::uint64_t>(s));
                        vals[static_cast<std::size_t>(s)] =
                            expectation_single_site(truncate_all(state, D, strat, rng), cfg.site, Z);
                    };
                    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
                        for (int s = 0; s < cfg.samples; ++s) {
                            one(s);
                        }
                    } else {
                        for (int s = 0; s < cfg.samples; ++s) {
                            one(s);
                        }
                    }
                    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / cfg.samples;
                    double var = 0.0;
                    for (double x : vals) {
                        var += (x - mean) * (x - mean);
                    }
                    rec.estimate = mean;
                    rec.sample_count = cfg.samples;
                    rec.sample_std = cfg.samples > 1 ? std::sqrt(var / (cfg.samples - 1)) : 0.0;
                }
                out.push_back(rec);
            }
        }
    }
    return out;
}

} // namespace rtrunc::mps
