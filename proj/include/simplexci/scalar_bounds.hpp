// scalar_bounds.hpp
//
// Classical intervals for the mean of a [0,1]-valued rating functional:
// Hoeffding, empirical Bernstein and Bernoulli-KL.
#pragma once

#include "core.hpp"

#include <string_view>

namespace simplexci {

enum class BoundMethod { hoeffding, empirical_bernstein, bernoulli_kl };

enum class Side { lower, upper };

/**
 * Inverts q -> kl_binary(phat, q) on one side of phat.
 *
 * Side::upper returns max{q in [phat,1] : kl_binary(phat,q) <= z} and
 * Side::lower returns min{q in [0,phat] : kl_binary(phat,q) <= z}. The
 * result is the outer end of the final bisection bracket, so it never
 * under-covers.
 */
inline double invert_kl_binary(double phat, double z, Side side) {
    if (!(phat >= 0.0 && phat <= 1.0)) throw std::invalid_argument("phat must lie in [0,1]");
    if (!(z >= 0.0)) throw std::invalid_argument("z must be nonnegative");
    if (z == 0.0) return phat;
    if (z == kInf) return side == Side::upper ? 1.0 : 0.0;

    double inside = phat;
    double outside = side == Side::upper ? 1.0 : 0.0;
    if (kl_binary(phat, outside) <= z) return outside;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (inside + outside);
        if (mid == inside || mid == outside) break;
        if (kl_binary(phat, mid) <= z)
            inside = mid;
        else
            outside = mid;
        if (std::fabs(outside - inside) <= 1e-15) break;
    }
    return outside;
}

inline double hoeffding_radius(std::uint64_t n, Confidence c) {
    return std::sqrt(std::log(2.0 / c.delta()) / (2.0 * double(n)));
}

inline Interval hoeffding_interval(const EmpiricalDistribution& phat, const LinearFunctional& f,
                                   Confidence c) {
    if (phat.n() < 1) throw std::invalid_argument("no samples");
    const double m = mean(phat, f);
    const double r = hoeffding_radius(phat.n(), c);
    return Interval::clipped(m - r, m + r);
}

/// Unbiased sample variance of the functional, (n/(n-1)) times the plug-in variance.
inline double sample_variance(const EmpiricalDistribution& phat, const LinearFunctional& f) {
    if (phat.n() < 2) throw std::invalid_argument("needs >= 2 samples");
    const double n = double(phat.n());
    return n / (n - 1.0) * variance(phat, f);
}

/// Per-side radius; each side carries delta/2, hence log(2/(delta/2)).
inline double empirical_bernstein_radius(double sample_var, std::uint64_t n, Confidence c) {
    if (n < 2) throw std::invalid_argument("needs >= 2 samples");
    const double log_term = std::log(4.0 / c.delta());
    const double nn = double(n);
    return std::sqrt(2.0 * sample_var * log_term / nn) + 7.0 * log_term / (3.0 * (nn - 1.0));
}

inline Interval empirical_bernstein_interval(const EmpiricalDistribution& phat,
                                             const LinearFunctional& f, Confidence c) {
    const double m = mean(phat, f);
    const double r = empirical_bernstein_radius(sample_variance(phat, f), phat.n(), c);
    return Interval::clipped(m - r, m + r);
}

/// Deviation threshold log(2/delta)/n of the two-sided Bernoulli-KL inequality.
inline double bernoulli_kl_threshold(std::uint64_t n, Confidence c) {
    if (n < 1) throw std::invalid_argument("no samples");
    return std::log(2.0 / c.delta()) / double(n);
}

inline Interval bernoulli_kl_interval(const EmpiricalDistribution& phat, const LinearFunctional& f,
                                      Confidence c) {
    const double z = bernoulli_kl_threshold(phat.n(), c);
    const double m = mean(phat, f);
    return Interval::clipped(invert_kl_binary(m, z, Side::lower), invert_kl_binary(m, z, Side::upper));
}

inline Interval hoeffding_interval(const Histogram& h, const LinearFunctional& f, Confidence c) {
    return hoeffding_interval(normalize(h), f, c);
}
inline Interval empirical_bernstein_interval(const Histogram& h, const LinearFunctional& f,
                                             Confidence c) {
    return empirical_bernstein_interval(normalize(h), f, c);
}
inline Interval bernoulli_kl_interval(const Histogram& h, const LinearFunctional& f, Confidence c) {
    return bernoulli_kl_interval(normalize(h), f, c);
}

inline Interval scalar_interval(BoundMethod method, const EmpiricalDistribution& phat,
                                const LinearFunctional& f, Confidence c) {
    switch (method) {
        case BoundMethod::hoeffding: return hoeffding_interval(phat, f, c);
        case BoundMethod::empirical_bernstein: return empirical_bernstein_interval(phat, f, c);
        case BoundMethod::bernoulli_kl: return bernoulli_kl_interval(phat, f, c);
    }
    throw std::invalid_argument("unknown bound method");
}

}  // namespace simplexci
