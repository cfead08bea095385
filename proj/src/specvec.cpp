#include "rtrunc/specvec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rtrunc/error.hpp"

namespace rtrunc {

namespace {

void check_k(std::size_t d, int k)
{
    if (k < 1 || static_cast<std::size_t>(k) > d) {
        throw InvalidInput("k = " + std::to_string(k) + " out of range [1, " + std::to_string(d) + "]");
    }
}

std::vector<double> sorted_magnitudes(std::span<const double> x)
{
    std::vector<double> a(x.size());
    std::transform(x.begin(), x.end(), a.begin(), [](double t) { return std::abs(t); });
    std::sort(a.begin(), a.end(), std::greater<>());
    return a;
}

std::vector<double> tail_sums_of(std::span<const double> sorted)
{
    std::vector<double> s(sorted.size() + 1, 0.0);
    for (std::size_t j = sorted.size(); j-- > 0;) {
        s[j] = s[j + 1] + sorted[j];
    }
    return s;
}

} // namespace

CanonicalVector CanonicalVector::from(const CVec& v)
{
    if (v.size() == 0) {
        throw InvalidInput("empty vector");
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) {
            throw InvalidInput("non-finite entry at index " + std::to_string(i));
        }
    }
    const double norm = v.norm();
    if (norm == 0.0) {
        throw InvalidInput("all-zero vector");
    }

    const auto d = static_cast<std::size_t>(v.size());
    CanonicalVector c;
    c.perm_.resize(d);
    std::iota(c.perm_.begin(), c.perm_.end(), 0);
    std::vector<double> mag(d);
    for (std::size_t i = 0; i < d; ++i) {
        mag[i] = std::abs(v[static_cast<Eigen::Index>(i)]) / norm;
    }
    std::stable_sort(c.perm_.begin(), c.perm_.end(), [&](int a, int b) { return mag[a] > mag[b]; });

    c.values_.resize(static_cast<Eigen::Index>(d));
    c.phases_.resize(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        const double a = std::abs(v[ei]);
        c.phases_[ei] = a > 0.0 ? v[ei] / a : cplx(1.0, 0.0);
    }
    for (std::size_t p = 0; p < d; ++p) {
        c.values_[static_cast<Eigen::Index>(p)] = mag[static_cast<std::size_t>(c.perm_[p])];
    }
    // re-normalize after the per-entry division to keep the unit norm tight
    c.values_ /= c.values_.norm();
    c.finish();
    return c;
}

CanonicalVector CanonicalVector::from(const RVec& v)
{
    return from(CVec(v.cast<cplx>()));
}

CanonicalVector CanonicalVector::from_sorted(const RVec& values)
{
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] < 0.0 || (i > 0 && values[i] > values[i - 1])) {
            throw InvalidInput("from_sorted expects finite nonnegative nonincreasing values");
        }
    }
    return from(values);
}

void CanonicalVector::finish()
{
    const auto d = dim();
    tail_sums_ = tail_sums_of(std::span<const double>(values_.data(), d));
    support_ = 0;
    while (support_ < d && values_[static_cast<Eigen::Index>(support_)] > 0.0) {
        ++support_;
    }
}

CVec CanonicalVector::original() const
{
    return restore(values_, *this);
}

CVec restore(const RVec& w, const CanonicalVector& canon)
{
    if (static_cast<std::size_t>(w.size()) != canon.dim()) {
        throw InvalidInput("restore: length " + std::to_string(w.size()) + " does not match dimension " +
                           std::to_string(canon.dim()));
    }
    CVec out(w.size());
    for (Eigen::Index c = 0; c < w.size(); ++c) {
        const int orig = canon.perm()[static_cast<std::size_t>(c)];
        out[orig] = canon.phases()[orig] * w[c];
    }
    return out;
}

double top_k_norm(const CanonicalVector& canon, int k)
{
    check_k(canon.dim(), k);
    return canon.values().head(k).norm();
}

double top_k_norm(std::span<const double> x, int k)
{
    check_k(x.size(), k);
    auto a = sorted_magnitudes(x);
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        acc += a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)];
    }
    return std::sqrt(acc);
}

KSupportResult k_support_norm_sorted(std::span<const double> v, std::span<const double> s, int k)
{
    check_k(v.size(), k);
    // 0-based: prefix of size p = k-r-1 is kept as is, window starts at p.
    // Condition: v[p-1] > s[p]/(r+1) >= v[p], with v[-1] = +inf.
    int best_r = -1;
    double best_violation = std::numeric_limits<double>::infinity();
    for (int r = 0; r < k; ++r) {
        const auto p = static_cast<std::size_t>(k - r - 1);
        const double avg = s[p] / (r + 1);
        const double upper = p == 0 ? std::numeric_limits<double>::infinity() : v[p - 1];
        if (upper > avg && avg >= v[p]) {
            best_r = r;
            break;
        }
        const double viol = std::max(0.0, avg - upper) + std::max(0.0, v[p] - avg);
        if (viol < best_violation) {
            best_violation = viol;
            best_r = r;
        }
    }
    const auto p = static_cast<std::size_t>(k - best_r - 1);
    double head = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        head += v[i] * v[i];
    }
    return {std::sqrt(head + s[p] * s[p] / (best_r + 1)), best_r};
}

KSupportResult k_support_norm(const CanonicalVector& canon, int k)
{
    return k_support_norm_sorted(std::span<const double>(canon.values().data(), canon.dim()), canon.tail_sums(), k);
}

KSupportResult k_support_norm(std::span<const double> x, int k)
{
    auto a = sorted_magnitudes(x);
    auto s = tail_sums_of(a);
    return k_support_norm_sorted(a, s, k);
}

double fidelity_k(const CanonicalVector& canon, int k)
{
    return top_k_norm(canon, k);
}

double robustness_k(const CanonicalVector& canon, int k)
{
    const double n = k_support_norm(canon, k).value;
    return std::max(0.0, n * n - 1.0);
}

} // namespace rtrunc
