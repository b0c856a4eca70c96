// core.hpp
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace simplexci {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Tolerance on Σp = 1 for a point of the closed simplex.
inline constexpr double kSimplexTolerance = 1e-12;

/// Raised when an iterative computation cannot meet its contract
/// (bracket failure, iteration budget exhausted, unreachable width).
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Rating histogram: counts[j] is the number of ratings in category j
 * (category 0 is the lowest star value).
 */
class Histogram {
public:
    Histogram() = default;

    explicit Histogram(std::vector<std::uint64_t> counts) : counts_(std::move(counts)) {
        if (counts_.size() < 2)
            throw std::invalid_argument("histogram needs at least 2 categories");
        n_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
    }

    std::size_t k() const noexcept { return counts_.size(); }
    std::uint64_t n() const noexcept { return n_; }
    const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
    std::uint64_t operator[](std::size_t j) const { return counts_.at(j); }

    friend bool operator==(const Histogram&, const Histogram&) = default;

private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t n_ = 0;
};

/**
 * A point of the closed probability simplex, optionally tagged with the
 * sample size it was estimated from (n == 0 marks a "true" distribution).
 */
class EmpiricalDistribution {
public:
    EmpiricalDistribution() = default;

    explicit EmpiricalDistribution(std::vector<double> probs, std::uint64_t n = 0)
        : probs_(std::move(probs)), n_(n) {
        if (probs_.size() < 2)
            throw std::invalid_argument("distribution needs at least 2 categories");
        double total = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0) || p > 1.0)
                throw std::invalid_argument("probabilities must lie in [0,1]");
            total += p;
        }
        if (std::fabs(total - 1.0) > kSimplexTolerance)
            throw std::invalid_argument("probabilities must sum to 1");
    }

    /// Rescales a nonnegative vector onto the simplex.
    static EmpiricalDistribution normalized(std::vector<double> weights, std::uint64_t n = 0) {
        double total = 0.0;
        for (double v : weights) {
            if (!(v >= 0.0)) throw std::invalid_argument("negative mass");
            total += v;
        }
        if (!(total > 0.0)) throw std::invalid_argument("zero total mass");
        for (double& v : weights) v /= total;
        return EmpiricalDistribution(std::move(weights), n);
    }

    std::size_t k() const noexcept { return probs_.size(); }
    std::uint64_t n() const noexcept { return n_; }
    const std::vector<double>& probs() const noexcept { return probs_; }
    double operator[](std::size_t j) const { return probs_.at(j); }

    friend bool operator==(const EmpiricalDistribution&, const EmpiricalDistribution&) = default;

private:
    std::vector<double> probs_;
    std::uint64_t n_ = 0;
};

/**
 * Linear functional F(P) = Σ w_j p_j, normalized so that w_0 = 0 and
 * w_{k-1} = 1 with nondecreasing weights in between.
 */
class LinearFunctional {
public:
    LinearFunctional() = default;

    explicit LinearFunctional(std::vector<double> weights) : weights_(std::move(weights)) {
        if (weights_.size() < 2)
            throw std::invalid_argument("functional needs at least 2 weights");
        if (weights_.front() != 0.0 || weights_.back() != 1.0)
            throw std::invalid_argument("weights must start at 0 and end at 1");
        for (std::size_t j = 1; j < weights_.size(); ++j)
            if (!(weights_[j] >= weights_[j - 1]))
                throw std::invalid_argument("weights must be nondecreasing");
    }

    /// Evenly spaced star values (0, 1/(k-1), ..., 1).
    static LinearFunctional canonical(std::size_t k) {
        if (k < 2) throw std::invalid_argument("k must be >= 2");
        std::vector<double> w(k);
        for (std::size_t j = 0; j < k; ++j) w[j] = double(j) / double(k - 1);
        w.back() = 1.0;
        return LinearFunctional(std::move(w));
    }

    std::size_t k() const noexcept { return weights_.size(); }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double operator[](std::size_t j) const { return weights_.at(j); }

    bool is_canonical() const {
        for (std::size_t j = 0; j < weights_.size(); ++j)
            if (std::fabs(weights_[j] - double(j) / double(weights_.size() - 1)) > 1e-12) return false;
        return true;
    }

    friend bool operator==(const LinearFunctional&, const LinearFunctional&) = default;

private:
    std::vector<double> weights_;
};

/// Closed subinterval of [0,1].
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    Interval() = default;
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!(0.0 <= lo && lo <= hi && hi <= 1.0))
            throw std::invalid_argument("interval must satisfy 0 <= lo <= hi <= 1");
    }

    /// Clips both endpoints into [0,1].
    static Interval clipped(double lo, double hi) {
        lo = std::clamp(lo, 0.0, 1.0);
        hi = std::clamp(hi, 0.0, 1.0);
        if (lo > hi) std::swap(lo, hi);
        return Interval(lo, hi);
    }

    double width() const noexcept { return hi - lo; }
    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
    bool contains(const Interval& o) const noexcept { return lo <= o.lo && o.hi <= hi; }
    bool overlaps(const Interval& o) const noexcept { return lo <= o.hi && o.lo <= hi; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Confidence level 1 - delta.
class Confidence {
public:
    explicit Confidence(double delta) : delta_(delta) {
        if (!(delta > 0.0 && delta < 1.0))
            throw std::invalid_argument("delta must lie in (0,1)");
    }
    double delta() const noexcept { return delta_; }

    /// The budget share frac*delta, e.g. for a union bound.
    Confidence share(double frac) const { return Confidence(delta_ * frac); }

private:
    double delta_;
};

inline EmpiricalDistribution normalize(const Histogram& h) {
    if (h.n() == 0) throw std::invalid_argument("no samples");
    std::vector<double> p(h.k());
    const double n = double(h.n());
    for (std::size_t j = 0; j < h.k(); ++j) p[j] = double(h[j]) / n;
    return EmpiricalDistribution::normalized(std::move(p), h.n());
}

namespace detail {

inline void require_same_k(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("length mismatch");
}

/// p log(p/q) with 0 log 0 = 0 and p>0, q=0 -> +inf.
inline double xlogx_over(double p, double q) {
    if (p <= 0.0) return 0.0;
    if (q <= 0.0) return kInf;
    return p * std::log(p / q);
}

}  // namespace detail

/// KL(p, q) = Σ p_j log(p_j / q_j), in nats.
inline double kl(std::span<const double> p, std::span<const double> q) {
    detail::require_same_k(p.size(), q.size());
    double total = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double term = detail::xlogx_over(p[j], q[j]);
        if (term == kInf) return kInf;
        total += term;
    }
    return std::max(total, 0.0);
}

inline double kl(const EmpiricalDistribution& p, const EmpiricalDistribution& q) {
    return kl(p.probs(), q.probs());
}

/// KL between Bernoulli(p) and Bernoulli(q).
inline double kl_binary(double p, double q) {
    const double a = detail::xlogx_over(p, q);
    const double b = detail::xlogx_over(1.0 - p, 1.0 - q);
    if (a == kInf || b == kInf) return kInf;
    return std::max(a + b, 0.0);
}

inline double mean(std::span<const double> p, const LinearFunctional& f) {
    detail::require_same_k(p.size(), f.k());
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) s += f[j] * p[j];
    return std::clamp(s, 0.0, 1.0);
}

inline double mean(const EmpiricalDistribution& p, const LinearFunctional& f) {
    return mean(p.probs(), f);
}

/// Population variance of the scalar variable taking value w_j with probability p_j.
inline double variance(std::span<const double> p, const LinearFunctional& f) {
    const double m = mean(p, f);
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) s += p[j] * (f[j] - m) * (f[j] - m);
    return std::max(s, 0.0);
}

inline double variance(const EmpiricalDistribution& p, const LinearFunctional& f) {
    return variance(p.probs(), f);
}

/// Star-scale view of a [0,1] value under canonical weights: 1 + (k-1) x.
inline double to_stars(double x, std::size_t k) { return 1.0 + double(k - 1) * x; }

}  // namespace simplexci
