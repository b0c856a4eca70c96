// simplex_regions.hpp
//
// Confidence regions over the probability simplex built around an empirical
// distribution: the Sanov ball, the confidence polytope, the Csiszar
// level-set region C_F and the intersections of C_F with the other two.
#pragma once

#include "core.hpp"
#include "scalar_bounds.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace simplexci {

enum class RegionKind { sanov_ball, polytope, csiszar_level_set, csiszar_plus_sanov, csiszar_plus_polytope };

/// Which finite-sample Sanov inequality sets the ball radius.
enum class SanovBound {
    second_term,  ///< 2(k-1) exp(-nz/(k-1)) term only (default)
    minimum,      ///< min of both terms of the improved bound
    classical,    ///< binomial-coefficient bound; comparison only
};

inline std::string_view to_string(RegionKind kind) {
    switch (kind) {
        case RegionKind::sanov_ball: return "sanov_ball";
        case RegionKind::polytope: return "polytope";
        case RegionKind::csiszar_level_set: return "csiszar_level_set";
        case RegionKind::csiszar_plus_sanov: return "csiszar_plus_sanov";
        case RegionKind::csiszar_plus_polytope: return "csiszar_plus_polytope";
    }
    return "unknown";
}

inline std::string_view to_string(SanovBound b) {
    switch (b) {
        case SanovBound::second_term: return "second_term";
        case SanovBound::minimum: return "minimum";
        case SanovBound::classical: return "classical";
    }
    return "unknown";
}

inline bool uses_level_set(RegionKind kind) {
    return kind == RegionKind::csiszar_level_set || kind == RegionKind::csiszar_plus_sanov ||
           kind == RegionKind::csiszar_plus_polytope;
}

// ---------------------------------------------------------------------------
// Thresholds (all in nats)
// ---------------------------------------------------------------------------

namespace detail {

inline double log_sum_exp(std::span<const double> xs) {
    double hi = -kInf;
    for (double x : xs) hi = std::max(hi, x);
    if (hi == -kInf) return -kInf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - hi);
    return hi + std::log(s);
}

}  // namespace detail

/// log of the polynomial prefactor (6e/pi^{3/2})(1 + sum_{i=1}^{k-2} (e^3 n/(2 pi i))^{i/2}).
inline double improved_sanov_log_prefactor(std::uint64_t n, std::size_t k) {
    const double pi = 3.14159265358979323846;
    std::vector<double> terms{0.0};
    for (std::size_t i = 1; i + 2 <= k; ++i) {
        const double di = double(i);
        terms.push_back(0.5 * di * std::log(std::exp(3.0) * double(n) / (2.0 * pi * di)));
    }
    return std::log(6.0 * std::exp(1.0) / std::pow(pi, 1.5)) + detail::log_sum_exp(terms);
}

inline double sanov_threshold(std::uint64_t n, std::size_t k, Confidence c,
                              SanovBound bound = SanovBound::second_term) {
    if (n < 1) throw std::invalid_argument("no samples");
    if (k < 2) throw std::invalid_argument("k must be >= 2");
    const double nn = double(n);
    const double km1 = double(k - 1);
    const double second = km1 * std::log(2.0 * km1 / c.delta()) / nn;
    switch (bound) {
        case SanovBound::second_term: return second;
        case SanovBound::minimum: {
            const double first = (improved_sanov_log_prefactor(n, k) - std::log(c.delta())) / nn;
            if (!std::isfinite(first)) return second;
            return std::max(0.0, std::min(first, second));
        }
        case SanovBound::classical: {
            // log C(n+k-1, k-1)
            const double log_binom = std::lgamma(nn + km1 + 1.0) - std::lgamma(km1 + 1.0) - std::lgamma(nn + 1.0);
            return (log_binom - std::log(c.delta())) / nn;
        }
    }
    return second;
}

inline double polytope_threshold(std::uint64_t n, std::size_t k, Confidence c) {
    if (n < 1) throw std::invalid_argument("no samples");
    if (k < 2) throw std::invalid_argument("k must be >= 2");
    return std::log(2.0 * double(k) / c.delta()) / double(n);
}

/// Radius of C_F: the Bernoulli-KL threshold log(2/delta)/n.
inline double level_set_threshold(std::uint64_t n, Confidence c) { return bernoulli_kl_threshold(n, c); }

// ---------------------------------------------------------------------------
// Distance from a candidate to a level set of F
// ---------------------------------------------------------------------------

/**
 * I-projection onto the level set {P' : F(P') = level}.
 *
 * value = min KL(P', q) over that set. The minimizer is the exponential tilt
 * p'_j = q_j exp(theta w_j) / M(theta), so the problem is one-dimensional in
 * theta. `tilt` holds p'_j / q_j (needed for derivatives in the solver).
 */
struct LevelProjection {
    double value = kInf;
    double theta = 0.0;
    std::vector<double> projection;
    std::vector<double> tilt;
    double tilted_variance = 0.0;  ///< Var of w under the projection
};

inline LevelProjection level_set_divergence(std::span<const double> q, std::span<const double> w,
                                            double level) {
    detail::require_same_k(q.size(), w.size());
    const std::size_t k = q.size();
    constexpr double tol = 1e-13;

    double wlo = kInf, whi = -kInf;
    for (std::size_t j = 0; j < k; ++j)
        if (q[j] > 0.0) {
            wlo = std::min(wlo, w[j]);
            whi = std::max(whi, w[j]);
        }

    LevelProjection out;
    if (wlo == kInf || level < wlo - tol || level > whi + tol) return out;

    out.projection.assign(k, 0.0);
    out.tilt.assign(k, 0.0);

    const bool at_lo = level <= wlo + tol;
    const bool at_hi = level >= whi - tol;
    if (at_lo || at_hi) {
        if (at_lo && at_hi) {  // every supported weight equals the level
            out.value = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                out.projection[j] = q[j];
                out.tilt[j] = q[j] > 0.0 ? 1.0 : 0.0;
            }
            return out;
        }
        const double edge = at_lo ? wlo : whi;
        double mass = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            if (q[j] > 0.0 && std::fabs(w[j] - edge) <= tol) mass += q[j];
        for (std::size_t j = 0; j < k; ++j)
            if (q[j] > 0.0 && std::fabs(w[j] - edge) <= tol) {
                out.projection[j] = q[j] / mass;
                out.tilt[j] = 1.0 / mass;
            }
        out.value = -std::log(mass);
        out.theta = at_lo ? -kInf : kInf;
        return out;
    }

    // log M(theta) relative to the level, and the tilted mean/variance.
    struct Moments {
        double log_norm, mean, var;
    };
    auto moments = [&](double theta) {
        double shift = -kInf;
        for (std::size_t j = 0; j < k; ++j)
            if (q[j] > 0.0) shift = std::max(shift, theta * (w[j] - level));
        double s = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (q[j] <= 0.0) continue;
            const double d = w[j] - level;
            const double e = q[j] * std::exp(theta * d - shift);
            s += e;
            s1 += e * d;
            s2 += e * d * d;
        }
        const double md = s1 / s;
        return Moments{shift + std::log(s), level + md, std::max(s2 / s - md * md, 0.0)};
    };

    double lo = -1.0, hi = 1.0;
    for (int i = 0; i < 200 && moments(lo).mean > level; ++i) lo *= 2.0;
    for (int i = 0; i < 200 && moments(hi).mean < level; ++i) hi *= 2.0;

    double theta = std::clamp(0.0, lo, hi);
    Moments mo = moments(theta);
    for (int it = 0; it < 200; ++it) {
        const double err = mo.mean - level;
        if (std::fabs(err) <= 1e-15) break;
        if (err > 0.0)
            hi = theta;
        else
            lo = theta;
        double next = mo.var > 0.0 ? theta - err / mo.var : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == theta) break;
        theta = next;
        mo = moments(theta);
    }

    out.theta = theta;
    out.value = std::max(0.0, -mo.log_norm);
    double var = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        if (q[j] <= 0.0) continue;
        out.tilt[j] = std::exp(theta * (w[j] - level) - mo.log_norm);
        out.projection[j] = q[j] * out.tilt[j];
        var += out.projection[j] * (w[j] - level) * (w[j] - level);
    }
    out.tilted_variance = var;
    return out;
}

inline LevelProjection level_set_divergence(const EmpiricalDistribution& q, const LinearFunctional& f,
                                            double level) {
    return level_set_divergence(q.probs(), f.weights(), level);
}

// ---------------------------------------------------------------------------
// Region descriptors
// ---------------------------------------------------------------------------

struct RegionOptions {
    SanovBound sanov_bound = SanovBound::second_term;
    /// Fraction of delta given to C_F in the intersection kinds.
    double level_share = 0.5;
};

struct RegionSpec {
    RegionKind kind;
    EmpiricalDistribution center;
    Confidence confidence;
    std::optional<LinearFunctional> functional;
    /// Radius of the Sanov ball / polytope part (0 for the pure level-set kind).
    double base_threshold = 0.0;
    /// Radius of C_F (0 for the pure Sanov/polytope kinds).
    double level_threshold = 0.0;
    RegionOptions options;

    std::size_t k() const noexcept { return center.k(); }
    std::uint64_t n() const noexcept { return center.n(); }
};

inline RegionSpec make_region(RegionKind kind, const EmpiricalDistribution& center, Confidence c,
                              std::optional<LinearFunctional> f = std::nullopt, RegionOptions opt = {}) {
    if (center.n() < 1) throw std::invalid_argument("region center needs a sample size n >= 1");
    if (uses_level_set(kind) && !f) throw std::invalid_argument("Csiszar regions need a linear functional");
    if (f && f->k() != center.k()) throw std::invalid_argument("length mismatch");
    if (!(opt.level_share > 0.0 && opt.level_share < 1.0))
        throw std::invalid_argument("level_share must lie in (0,1)");

    RegionSpec r{kind, center, c, std::move(f), 0.0, 0.0, opt};
    const auto n = center.n();
    const auto k = center.k();
    switch (kind) {
        case RegionKind::sanov_ball: r.base_threshold = sanov_threshold(n, k, c, opt.sanov_bound); break;
        case RegionKind::polytope: r.base_threshold = polytope_threshold(n, k, c); break;
        case RegionKind::csiszar_level_set: r.level_threshold = level_set_threshold(n, c); break;
        case RegionKind::csiszar_plus_sanov:
            r.base_threshold = sanov_threshold(n, k, c.share(1.0 - opt.level_share), opt.sanov_bound);
            r.level_threshold = level_set_threshold(n, c.share(opt.level_share));
            break;
        case RegionKind::csiszar_plus_polytope:
            r.base_threshold = polytope_threshold(n, k, c.share(1.0 - opt.level_share));
            r.level_threshold = level_set_threshold(n, c.share(opt.level_share));
            break;
    }
    return r;
}

/// Slack on region inequalities, absorbing floating-point noise at the boundary.
inline constexpr double kMembershipSlack = 1e-12;

inline bool in_sanov_ball(std::span<const double> center, std::span<const double> q, double z) {
    return kl(center, q) <= z + kMembershipSlack;
}

inline bool in_polytope(std::span<const double> center, std::span<const double> q, double z) {
    detail::require_same_k(center.size(), q.size());
    for (std::size_t j = 0; j < q.size(); ++j)
        if (!(kl_binary(center[j], q[j]) <= z + kMembershipSlack)) return false;
    return true;
}

/// q in C_F(center, z): some P' with F(P') = F(center) has KL(P', q) <= z.
inline bool in_level_region(std::span<const double> center, std::span<const double> q,
                            const LinearFunctional& f, double z) {
    return level_set_divergence(q, f.weights(), mean(center, f)).value <= z + kMembershipSlack;
}

inline bool member(const RegionSpec& region, const EmpiricalDistribution& q) {
    if (q.k() != region.k()) throw std::invalid_argument("length mismatch");
    const auto& c = region.center.probs();
    const auto& p = q.probs();
    switch (region.kind) {
        case RegionKind::sanov_ball: return in_sanov_ball(c, p, region.base_threshold);
        case RegionKind::polytope: return in_polytope(c, p, region.base_threshold);
        case RegionKind::csiszar_level_set: return in_level_region(c, p, *region.functional, region.level_threshold);
        case RegionKind::csiszar_plus_sanov:
            return in_sanov_ball(c, p, region.base_threshold) &&
                   in_level_region(c, p, *region.functional, region.level_threshold);
        case RegionKind::csiszar_plus_polytope:
            return in_polytope(c, p, region.base_threshold) &&
                   in_level_region(c, p, *region.functional, region.level_threshold);
    }
    return false;
}

/**
 * Extreme values of F over C_F with radius log(2/delta)/n.
 *
 * The extremes sit on the edge P_xi = (1-xi, 0, ..., 0, xi), so each endpoint
 * is found by bisecting xi against C_F membership of P_xi.
 */
inline Interval csiszar_level_interval_direct(const EmpiricalDistribution& phat, const LinearFunctional& f,
                                              Confidence c) {
    const double z = level_set_threshold(phat.n(), c);
    const double m = mean(phat, f);
    const std::size_t k = phat.k();
    std::vector<double> edge(k, 0.0);
    auto inside = [&](double xi) {
        edge.front() = 1.0 - xi;
        edge.back() = xi;
        return level_set_divergence(edge, f.weights(), m).value <= z;
    };
    auto search = [&](double outside) {
        double in = m, out = outside;
        if (inside(out)) return out;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (in + out);
            if (mid == in || mid == out) break;
            (inside(mid) ? in : out) = mid;
        }
        return out;
    };
    return Interval::clipped(search(0.0), search(1.0));
}

inline Interval csiszar_level_interval_direct(const Histogram& h, const LinearFunctional& f, Confidence c) {
    return csiszar_level_interval_direct(normalize(h), f, c);
}

}  // namespace simplexci
