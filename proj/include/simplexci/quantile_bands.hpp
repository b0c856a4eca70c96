// quantile_bands.hpp
//
// Simultaneous confidence bands for the CDF of a rating on the grid
// {0, 1/(k-1), ..., 1}, and the quantile intervals they imply.
#pragma once

#include "core.hpp"
#include "scalar_bounds.hpp"

#include <cstdio>
#include <ostream>
#include <string_view>
#include <utility>

namespace simplexci {

enum class BandMethod { dkwm, kl_naive, kl_data_driven };

inline std::string_view to_string(BandMethod m) {
    switch (m) {
        case BandMethod::dkwm: return "dkwm";
        case BandMethod::kl_naive: return "kl-naive";
        case BandMethod::kl_data_driven: return "kl-dd";
    }
    return "unknown";
}

/// lower[i] <= F(x_i) <= upper[i] for every grid point x_i = i/(k-1).
struct CdfBand {
    std::vector<double> lower, upper;
    BandMethod method = BandMethod::dkwm;

    std::size_t k() const noexcept { return lower.size(); }

    bool contains_cdf(std::span<const double> cdf, double slack = 0.0) const {
        for (std::size_t i = 0; i < k(); ++i)
            if (cdf[i] < lower[i] - slack || cdf[i] > upper[i] + slack) return false;
        return true;
    }
};

struct QuantileQuery {
    double tau;
    std::size_t k;

    QuantileQuery(double tau_, std::size_t k_) : tau(tau_), k(k_) {
        if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
        if (k < 2) throw std::invalid_argument("k must be >= 2");
    }

    double support(std::size_t i) const { return double(i) / double(k - 1); }
};

inline std::vector<double> cdf_of(std::span<const double> p) {
    std::vector<double> F(p.size());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) F[i] = std::min(s += p[i], 1.0);
    F.back() = 1.0;
    return F;
}

inline std::vector<double> empirical_cdf(const Histogram& h) {
    if (h.n() < 1) throw std::invalid_argument("no samples");
    std::vector<double> F(h.k());
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < h.k(); ++i) F[i] = double(s += h[i]) / double(h.n());
    return F;
}

inline double dkwm_radius(std::uint64_t n, Confidence c) {
    return std::sqrt(std::log(2.0 / c.delta()) / (2.0 * double(n)));
}

inline CdfBand dkwm_band(const Histogram& h, Confidence c) {
    const auto F = empirical_cdf(h);
    const double z = dkwm_radius(h.n(), c);
    CdfBand b;
    b.method = BandMethod::dkwm;
    for (double f : F) {
        b.lower.push_back(std::clamp(f - z, 0.0, 1.0));
        b.upper.push_back(std::clamp(f + z, 0.0, 1.0));
    }
    b.lower.back() = b.upper.back() = 1.0;
    return b;
}

/// Equal split of delta over the k-1 nontrivial CDF points.
inline std::vector<double> naive_allocation(std::size_t k, Confidence c) {
    if (k < 2) throw std::invalid_argument("k must be >= 2");
    return std::vector<double>(k - 1, c.delta() / double(k - 1));
}

/// 1-based index of the smallest grid point with empirical CDF >= tau.
inline std::size_t empirical_quantile_index(const Histogram& h, double tau) {
    const auto F = empirical_cdf(h);
    for (std::size_t i = 0; i < F.size(); ++i)
        if (F[i] >= tau) return i + 1;
    return F.size();
}

/**
 * Budget concentrated around the empirical tau-quantile:
 * delta_i = delta / (c * c_i), c_i = (|i - tau_idx| + 1)^2, c = Σ 1/c_i.
 */
inline std::vector<double> data_driven_allocation(const Histogram& h, double tau, Confidence c) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
    const double t = double(empirical_quantile_index(h, tau));
    std::vector<double> ci(h.k() - 1);
    double total = 0.0;
    for (std::size_t i = 1; i <= ci.size(); ++i) {
        const double d = std::fabs(double(i) - t) + 1.0;
        ci[i - 1] = d * d;
        total += 1.0 / ci[i - 1];
    }
    std::vector<double> out(ci.size());
    for (std::size_t i = 0; i < ci.size(); ++i) out[i] = c.delta() / (total * ci[i]);
    return out;
}

/// Pointwise Bernoulli-KL intervals at confidence delta_i, then isotonized.
inline CdfBand kl_band(const Histogram& h, Confidence c, std::span<const double> allocation,
                       BandMethod tag = BandMethod::kl_naive) {
    const std::size_t k = h.k();
    if (allocation.size() != k - 1) throw std::invalid_argument("allocation must have k-1 entries");
    double sum = 0.0;
    for (double d : allocation) {
        if (!(d > 0.0)) throw std::invalid_argument("allocation entries must be positive");
        sum += d;
    }
    if (sum > c.delta() * (1.0 + 1e-12)) throw std::invalid_argument("allocation exceeds delta");

    const auto F = empirical_cdf(h);
    const double n = double(h.n());
    CdfBand b;
    b.method = tag;
    b.lower.resize(k);
    b.upper.resize(k);
    for (std::size_t i = 0; i + 1 < k; ++i) {
        const double z = std::log(2.0 / allocation[i]) / n;
        b.lower[i] = invert_kl_binary(F[i], z, Side::lower);
        b.upper[i] = invert_kl_binary(F[i], z, Side::upper);
    }
    b.lower.back() = b.upper.back() = 1.0;
    for (std::size_t i = 1; i < k; ++i) b.lower[i] = std::max(b.lower[i], b.lower[i - 1]);
    for (std::size_t i = k - 1; i-- > 0;) b.upper[i] = std::min(b.upper[i], b.upper[i + 1]);
    return b;
}

inline CdfBand make_band(BandMethod m, const Histogram& h, Confidence c, double tau = 0.5) {
    switch (m) {
        case BandMethod::dkwm: return dkwm_band(h, c);
        case BandMethod::kl_naive: return kl_band(h, c, naive_allocation(h.k(), c), m);
        case BandMethod::kl_data_driven: return kl_band(h, c, data_driven_allocation(h, tau, c), m);
    }
    throw std::invalid_argument("unknown band method");
}

/// Range of the tau-quantile over all CDFs inside the band, as support values.
inline std::pair<double, double> quantile_interval(const CdfBand& band, const QuantileQuery& q) {
    if (band.k() != q.k) throw std::invalid_argument("length mismatch");
    std::size_t lo = q.k - 1, hi = q.k - 1;
    for (std::size_t i = 0; i < q.k; ++i)
        if (band.upper[i] >= q.tau) {
            lo = i;
            break;
        }
    for (std::size_t i = 0; i < q.k; ++i)
        if (band.lower[i] >= q.tau) {
            hi = i;
            break;
        }
    return {q.support(lo), q.support(std::max(lo, hi))};
}

/// Width_tau = Σ |min(U_i - tau, tau - L_i)| over points whose band straddles tau.
inline double band_width_at(const CdfBand& band, double tau) {
    double w = 0.0;
    for (std::size_t i = 0; i < band.k(); ++i)
        if (band.lower[i] <= tau && tau <= band.upper[i])
            w += std::fabs(std::min(band.upper[i] - tau, tau - band.lower[i]));
    return w;
}

inline void write_band_csv(std::ostream& os, const CdfBand& band) {
    os << "support,L,U\n";
    char buf[96];
    for (std::size_t i = 0; i < band.k(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g,%.12g,%.12g\n", double(i) / double(band.k() - 1), band.lower[i],
                      band.upper[i]);
        os << buf;
    }
}

}  // namespace simplexci
