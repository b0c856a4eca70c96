// interval_engine.hpp
//
// Extreme values of a linear functional over the simplex confidence regions.
//
// Sanov ball and polytope: exact one-dimensional reductions of the convex
// program. Csiszar intersections: bisection on the target value u, where each
// probe solves the joint convex program
//
//     min KL(P', Q)  s.t.  F(P') = F(phat), F(Q) = u, Q in base region,
//
// with an interior-point (log-barrier Newton) method. The inner minimization
// over P' is an I-projection and is carried out in closed form up to a scalar
// tilt, so the barrier iterates live in Q only.
#pragma once

#include "core.hpp"
#include "scalar_bounds.hpp"
#include "simplex_regions.hpp"

#include <Eigen/Dense>

#include <functional>
#include <numeric>
#include <optional>

namespace simplexci {

enum class Sense { min, max };

enum class BaseRegion { sanov, polytope };

inline std::string_view to_string(BaseRegion b) { return b == BaseRegion::sanov ? "sanov" : "polytope"; }

struct LinearOptimum {
    double value = 0.0;
    std::vector<double> argopt;
};

namespace detail {

/**
 * max Σ w_j q_j  s.t.  KL(phat, q) <= z,  q in the closed simplex.
 *
 * Stationarity gives q_j = lambda phat_j / (nu - w_j) on the support of phat;
 * mass off the support may only sit on the largest unseen weight, and only
 * when nu equals that weight. The multiplier nu solves
 *     G(nu) = Σ phat_j log(nu - w_j) + log Σ phat_j / (nu - w_j) = z,
 * with G strictly decreasing from +inf to 0.
 */
inline LinearOptimum sanov_max(std::span<const double> phat, std::span<const double> w, double z) {
    const std::size_t k = phat.size();
    require_same_k(k, w.size());
    LinearOptimum out;
    out.value = 0.0;
    for (std::size_t j = 0; j < k; ++j) out.value += w[j] * phat[j];
    out.argopt.assign(phat.begin(), phat.end());
    if (z <= 0.0) return out;

    double a = -kInf, b = kInf;  // max / min weight on the support
    double w_unseen = -kInf;
    std::size_t j_unseen = k;
    for (std::size_t j = 0; j < k; ++j) {
        if (phat[j] > 0.0) {
            a = std::max(a, w[j]);
            b = std::min(b, w[j]);
        } else if (w[j] > w_unseen) {
            w_unseen = w[j];
            j_unseen = j;
        }
    }
    const bool flat = a - b <= 1e-15;

    // G at nu = a + e^s, with nu - w_j formed as (a - w_j) + e^s to keep precision near a
    auto G = [&](double s) {
        const double e = std::exp(s);
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            if (phat[j] > 0.0) {
                const double d = (a - w[j]) + e;
                s1 += phat[j] * std::log(d);
                s2 += phat[j] / d;
            }
        return s1 + std::log(s2);
    };

    if (j_unseen < k && w_unseen > a && (flat || G(std::log(w_unseen - a)) <= z)) {
        double log_lambda = -z;
        for (std::size_t j = 0; j < k; ++j)
            if (phat[j] > 0.0) log_lambda += phat[j] * std::log(w_unseen - w[j]);
        const double lambda = std::exp(log_lambda);
        double used = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (phat[j] > 0.0) {
                out.argopt[j] = lambda * phat[j] / (w_unseen - w[j]);
                used += out.argopt[j];
            } else {
                out.argopt[j] = 0.0;
            }
        }
        out.argopt[j_unseen] = std::max(0.0, 1.0 - used);
    } else {
        if (flat) return out;
        const bool floor_above = j_unseen < k && w_unseen > a;
        double s_lo = floor_above ? std::log(w_unseen - a) : -700.0;
        double s_hi = std::max(0.0, s_lo + 1.0);
        for (int i = 0; i < 200 && G(s_hi) >= z; ++i) s_hi += 1.0 + std::fabs(s_hi);
        for (int it = 0; it < 300; ++it) {
            const double mid = 0.5 * (s_lo + s_hi);
            if (mid == s_lo || mid == s_hi) break;
            (G(mid) >= z ? s_lo : s_hi) = mid;
        }
        // outer end: the constraint is active or violated by at most rounding
        const double e = std::exp(s_lo);
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            out.argopt[j] = phat[j] > 0.0 ? phat[j] / ((a - w[j]) + e) : 0.0;
            total += out.argopt[j];
        }
        for (double& v : out.argopt) v /= total;
    }
    out.value = 0.0;
    for (std::size_t j = 0; j < k; ++j) out.value += w[j] * out.argopt[j];
    return out;
}

/// Per-category bounds lo_j <= q_j <= hi_j from kl_binary(phat_j, q_j) <= z.
struct Box {
    std::vector<double> lo, hi;
};

inline Box polytope_box(std::span<const double> phat, double z) {
    Box b;
    for (double p : phat) {
        b.lo.push_back(invert_kl_binary(p, z, Side::lower));
        b.hi.push_back(invert_kl_binary(p, z, Side::upper));
    }
    return b;
}

/// Fractional knapsack over box ∩ simplex: start from the lower corner, then
/// pour the remaining mass into the largest weights first.
inline LinearOptimum box_max(const Box& box, std::span<const double> w) {
    const std::size_t k = w.size();
    LinearOptimum out;
    out.argopt = box.lo;
    double rest = 1.0 - std::accumulate(box.lo.begin(), box.lo.end(), 0.0);
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return w[x] > w[y]; });
    for (std::size_t j : order) {
        if (rest <= 0.0) break;
        const double add = std::min(box.hi[j] - box.lo[j], rest);
        out.argopt[j] += add;
        rest -= add;
    }
    for (std::size_t j = 0; j < k; ++j) out.value += w[j] * out.argopt[j];
    return out;
}

inline std::vector<double> negated(std::span<const double> w) {
    std::vector<double> out(w.begin(), w.end());
    for (double& v : out) v = -v;
    return out;
}

/**
 * A base confidence region (Sanov ball or polytope) as seen by the solver:
 * linear optimization over it plus a log barrier for its inequalities.
 */
class BaseGeometry {
public:
    BaseGeometry(BaseRegion kind, std::vector<double> center, double radius)
        : kind_(kind), center_(std::move(center)), radius_(radius) {
        if (kind_ == BaseRegion::polytope) box_ = polytope_box(center_, radius_);
    }

    BaseRegion kind() const noexcept { return kind_; }
    double radius() const noexcept { return radius_; }
    const std::vector<double>& center() const noexcept { return center_; }
    std::size_t k() const noexcept { return center_.size(); }
    std::size_t num_inequalities() const noexcept { return kind_ == BaseRegion::sanov ? k() + 1 : 2 * k(); }

    LinearOptimum maximize(std::span<const double> w) const {
        return kind_ == BaseRegion::sanov ? sanov_max(center_, w, radius_) : box_max(box_, w);
    }

    LinearOptimum minimize(std::span<const double> w) const {
        const auto nw = negated(w);
        LinearOptimum out = maximize(nw);
        out.value = -out.value;
        return out;
    }

    /// Inequality slacks, all of which must be positive in the interior.
    void slacks(std::span<const double> q, std::vector<double>& s) const {
        s.clear();
        if (kind_ == BaseRegion::sanov) {
            for (double v : q) s.push_back(v);
            bool positive = true;
            for (std::size_t j = 0; j < k(); ++j)
                if (center_[j] > 0.0 && q[j] <= 0.0) positive = false;
            s.push_back(positive ? radius_ - kl(center_, q) : -kInf);
        } else {
            for (std::size_t j = 0; j < k(); ++j) {
                s.push_back(q[j] - box_.lo[j]);
                s.push_back(box_.hi[j] - q[j]);
            }
        }
    }

    /// Column i holds the gradient of slack i.
    Eigen::MatrixXd slack_jacobian(std::span<const double> q) const {
        const std::size_t n = k();
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(num_inequalities()));
        if (kind_ == BaseRegion::sanov) {
            for (std::size_t j = 0; j < n; ++j) {
                J(Eigen::Index(j), Eigen::Index(j)) = 1.0;
                J(Eigen::Index(j), Eigen::Index(n)) = q[j] > 0.0 ? center_[j] / q[j] : 0.0;
            }
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                J(Eigen::Index(j), Eigen::Index(2 * j)) = 1.0;
                J(Eigen::Index(j), Eigen::Index(2 * j + 1)) = -1.0;
            }
        }
        return J;
    }

    bool strictly_feasible(std::span<const double> q) const {
        std::vector<double> s;
        slacks(q, s);
        return std::all_of(s.begin(), s.end(), [](double v) { return v > 0.0; });
    }

    /// Largest violation of the region's inequalities (0 if inside).
    double violation(std::span<const double> q) const {
        std::vector<double> s;
        slacks(q, s);
        double v = 0.0;
        for (double x : s) v = std::max(v, -x);
        return v;
    }

    /// -Σ log slack, with gradient and Hessian accumulated into g, H.
    double barrier(std::span<const double> q, Eigen::VectorXd* g, Eigen::MatrixXd* H) const {
        const std::size_t n = k();
        double phi = 0.0;
        if (kind_ == BaseRegion::sanov) {
            for (std::size_t j = 0; j < n; ++j) {
                if (q[j] <= 0.0) return kInf;
                phi -= std::log(q[j]);
            }
            const double s = radius_ - kl(center_, q);
            if (!(s > 0.0)) return kInf;
            phi -= std::log(s);
            if (g) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double dkl = -center_[j] / q[j];
                    (*g)(j) += -1.0 / q[j] + dkl / s;
                }
            }
            if (H) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double di = -center_[i] / q[i];
                    (*H)(i, i) += 1.0 / (q[i] * q[i]) + center_[i] / (q[i] * q[i]) / s;
                    for (std::size_t j = 0; j < n; ++j) (*H)(i, j) += di * (-center_[j] / q[j]) / (s * s);
                }
            }
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                const double a = q[j] - box_.lo[j];
                const double b = box_.hi[j] - q[j];
                if (!(a > 0.0 && b > 0.0)) return kInf;
                phi -= std::log(a) + std::log(b);
                if (g) (*g)(j) += -1.0 / a + 1.0 / b;
                if (H) (*H)(j, j) += 1.0 / (a * a) + 1.0 / (b * b);
            }
        }
        return phi;
    }

    /// A strictly interior point: phat mixed with a little uniform mass.
    std::vector<double> interior_point() const {
        const std::size_t n = k();
        double eps = 0.5;
        for (int it = 0; it < 200; ++it, eps *= 0.5) {
            std::vector<double> q(n);
            for (std::size_t j = 0; j < n; ++j) q[j] = (1.0 - eps) * center_[j] + eps / double(n);
            std::vector<double> s;
            slacks(q, s);
            // keep well inside: half the Sanov radius, or strict box interior
            if (kind_ == BaseRegion::sanov) {
                if (std::all_of(s.begin(), s.end() - 1, [](double v) { return v > 0.0; }) &&
                    s.back() > 0.5 * radius_)
                    return q;
            } else if (std::all_of(s.begin(), s.end(), [](double v) { return v > 0.0; })) {
                return q;
            }
        }
        throw numerical_error("could not find an interior point of the base region");
    }

private:
    BaseRegion kind_;
    std::vector<double> center_;
    double radius_;
    Box box_;
};

}  // namespace detail

/**
 * min / max of F over a Sanov ball or confidence polytope. Returns the
 * optimal value together with an optimizer.
 */
inline LinearOptimum optimize_linear(BaseRegion base, const EmpiricalDistribution& center, double radius,
                                     const LinearFunctional& f, Sense sense) {
    if (f.k() != center.k()) throw std::invalid_argument("length mismatch");
    const detail::BaseGeometry geo(base, center.probs(), radius);
    LinearOptimum out = sense == Sense::max ? geo.maximize(f.weights()) : geo.minimize(f.weights());
    out.value = std::clamp(out.value, 0.0, 1.0);
    return out;
}

inline double optimize_linear_over_region(const RegionSpec& region, const LinearFunctional& f, Sense sense) {
    switch (region.kind) {
        case RegionKind::sanov_ball:
            return optimize_linear(BaseRegion::sanov, region.center, region.base_threshold, f, sense).value;
        case RegionKind::polytope:
            return optimize_linear(BaseRegion::polytope, region.center, region.base_threshold, f, sense).value;
        default: throw std::invalid_argument("optimize_linear_over_region expects a Sanov ball or polytope");
    }
}

// ---------------------------------------------------------------------------
// Feasibility program for the Csiszar intersections
// ---------------------------------------------------------------------------

struct RegionConstraint {
    BaseRegion kind;
    double radius;
};

/**
 * min KL(P', Q) over P', Q in the closed simplex with F(P') = F(phat),
 * F(Q) = target and Q inside the base region. `level_radius` is the C_F
 * radius z' the optimum is compared against.
 */
struct FeasibilityProblem {
    EmpiricalDistribution phat;
    LinearFunctional f;
    double target;
    RegionConstraint region;
    double level_radius;
};

struct SolverReport {
    double objective_value = kInf;
    std::optional<EmpiricalDistribution> q_opt, p_opt;
    int iterations = 0;
    bool converged = false;
    double kkt_residual = kInf;
    double constraint_violation = 0.0;
    /// The comparison objective <= level_radius was certified before full
    /// convergence (early exit requested by the caller).
    bool decided = false;

    bool within_radius(double radius) const { return objective_value <= radius; }
};

struct SolverOptions {
    double gap_tolerance = 1e-11;
    double barrier_growth = 10.0;
    int max_newton = 80;
    int max_outer = 40;
    /// Stop as soon as objective <= threshold or objective > threshold is certain.
    std::optional<double> decide_against;
};

namespace detail {

inline EmpiricalDistribution clean_distribution(std::vector<double> v) {
    for (double& x : v) x = std::max(x, 0.0);
    return EmpiricalDistribution::normalized(std::move(v));
}

inline SolverReport boundary_report(std::span<const double> q, std::span<const double> w, double level,
                                    const BaseGeometry& geo, double target) {
    SolverReport r;
    const LevelProjection lp = level_set_divergence(q, w, level);
    r.objective_value = lp.value;
    r.q_opt = clean_distribution(std::vector<double>(q.begin(), q.end()));
    if (!lp.projection.empty()) r.p_opt = clean_distribution(lp.projection);
    r.converged = true;
    r.kkt_residual = 0.0;
    double fq = 0.0, sq = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        fq += w[j] * q[j];
        sq += q[j];
    }
    r.constraint_violation = std::max({std::fabs(sq - 1.0), std::fabs(fq - target), geo.violation(q)});
    return r;
}

/**
 * KKT residual of min D(q) s.t. slacks >= 0 and the two equality constraints:
 * multipliers of the nearly active slacks are fitted by nonnegative least
 * squares on the reduced gradient, then stationarity and complementarity are
 * measured with them.
 */
inline double kkt_residual(const BaseGeometry& geo, const Eigen::MatrixXd& Z, const Eigen::VectorXd& grad,
                           std::span<const double> q, double t) {
    std::vector<double> s;
    geo.slacks(q, s);
    const Eigen::MatrixXd J = geo.slack_jacobian(q);
    std::vector<Eigen::Index> active;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (1.0 / (t * std::max(s[i], 1e-300)) > 1e-7) active.push_back(Eigen::Index(i));

    const Eigen::VectorXd rhs = Z.transpose() * grad;
    Eigen::VectorXd mu_full = Eigen::VectorXd::Zero(Eigen::Index(s.size()));
    // active-set NNLS: drop the most negative multiplier until all are >= 0
    while (!active.empty()) {
        Eigen::MatrixXd B(Z.cols(), Eigen::Index(active.size()));
        for (std::size_t c = 0; c < active.size(); ++c) B.col(Eigen::Index(c)) = Z.transpose() * J.col(active[c]);
        const Eigen::VectorXd mu = B.completeOrthogonalDecomposition().solve(rhs);
        Eigen::Index worst;
        if (mu.minCoeff(&worst) >= 0.0) {
            for (std::size_t c = 0; c < active.size(); ++c) mu_full(active[c]) = mu(Eigen::Index(c));
            break;
        }
        active.erase(active.begin() + worst);
    }
    const Eigen::VectorXd stat = rhs - Z.transpose() * (J * mu_full);
    double comp = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) comp = std::max(comp, mu_full(Eigen::Index(i)) * std::fabs(s[i]));
    return std::max({stat.lpNorm<Eigen::Infinity>(), comp, double(s.size()) / t});
}

/// Log-barrier Newton method on Q; the objective is the level-set divergence D(Q).
inline SolverReport barrier_solve(const BaseGeometry& geo, std::span<const double> w, double level,
                                  double target, std::vector<double> q, const SolverOptions& opt) {
    const std::size_t k = q.size();
    const double m_ineq = double(geo.num_inequalities());

    // null space of the equality constraints [1; w] q = [1; target]
    Eigen::MatrixXd At(k, 2);
    for (std::size_t j = 0; j < k; ++j) {
        At(j, 0) = 1.0;
        At(j, 1) = w[j];
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(At);
    const Eigen::MatrixXd Qfull = qr.householderQ();
    const Eigen::MatrixXd Z = Qfull.rightCols(Eigen::Index(k) - 2);

    auto objective = [&](std::span<const double> x, LevelProjection* lp) {
        LevelProjection p = level_set_divergence(x, w, level);
        const double v = p.value;
        if (lp) *lp = std::move(p);
        return v;
    };
    auto merit = [&](std::span<const double> x, double t) {
        const double b = geo.barrier(x, nullptr, nullptr);
        if (b == kInf) return kInf;
        const double d = objective(x, nullptr);
        if (d == kInf) return kInf;
        return t * d + b;
    };

    SolverReport rep;
    double t = std::clamp(m_ineq / std::max(objective(q, nullptr), 1e-6), 1.0, 1e6);
    int iterations = 0;
    std::vector<double> trial(k);
    Eigen::VectorXd g(k), g0(k);
    Eigen::MatrixXd H(k, k), H0(k, k);

    for (int outer = 0; outer < opt.max_outer; ++outer) {
        for (int it = 0; it < opt.max_newton; ++it) {
            ++iterations;
            LevelProjection lp;
            objective(q, &lp);
            g0.setZero();
            H0.setZero();
            for (std::size_t i = 0; i < k; ++i) g0(i) = -lp.tilt[i];
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    H0(i, j) = lp.tilt[i] * lp.tilt[j];
                    if (lp.tilted_variance > 1e-300)
                        H0(i, j) += lp.tilt[i] * (w[i] - level) * lp.tilt[j] * (w[j] - level) / lp.tilted_variance;
                }
            g = t * g0;
            H = t * H0;
            const double phi_b = geo.barrier(q, &g, &H);
            const double phi = t * lp.value + phi_b;

            const Eigen::VectorXd gy = Z.transpose() * g;
            Eigen::MatrixXd Hy = Z.transpose() * H * Z;
            Eigen::LLT<Eigen::MatrixXd> llt(Hy);
            if (llt.info() != Eigen::Success) {
                Hy += 1e-12 * (1.0 + Hy.diagonal().cwiseAbs().maxCoeff()) *
                      Eigen::MatrixXd::Identity(Hy.rows(), Hy.cols());
                llt.compute(Hy);
            }
            const Eigen::VectorXd dy = -llt.solve(gy);
            const double decrement = -gy.dot(dy);
            if (!(decrement >= 0.0) || decrement / 2.0 <= 1e-12) break;
            const Eigen::VectorXd dq = Z * dy;
            const double slope = g.dot(dq);

            double alpha = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 80; ++ls, alpha *= 0.5) {
                for (std::size_t j = 0; j < k; ++j) trial[j] = q[j] + alpha * dq(Eigen::Index(j));
                const double phi_new = merit(trial, t);
                if (phi_new == kInf) continue;
                if (phi_new <= phi + 0.25 * alpha * slope || (decrement < 1e-6 && phi_new <= phi + 1e-9 * std::fabs(phi))) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            q = trial;
        }

        const double d = objective(q, nullptr);
        const double gap = m_ineq / t;
        if (opt.decide_against) {
            if (d <= *opt.decide_against || d - gap > *opt.decide_against) {
                rep.decided = true;
                break;
            }
        }
        if (gap <= opt.gap_tolerance) break;
        t *= opt.barrier_growth;
    }

    const LevelProjection lp = level_set_divergence(q, w, level);
    rep.objective_value = lp.value;
    rep.iterations = iterations;
    Eigen::VectorXd grad(k);
    for (std::size_t j = 0; j < k; ++j) grad(Eigen::Index(j)) = -lp.tilt[j];
    rep.kkt_residual = kkt_residual(geo, Z, grad, q, t);
    double fq = 0.0, sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        fq += w[j] * q[j];
        sq += q[j];
    }
    rep.constraint_violation = std::max({std::fabs(sq - 1.0), std::fabs(fq - target), geo.violation(q)});
    rep.converged = rep.kkt_residual <= 1e-8 && rep.constraint_violation <= 1e-10;
    rep.q_opt = clean_distribution(q);
    if (!lp.projection.empty()) rep.p_opt = clean_distribution(lp.projection);
    return rep;
}

inline SolverReport solve_feasibility(const FeasibilityProblem& p, const BaseGeometry& geo,
                                      const LinearOptimum& hi, const LinearOptimum& lo,
                                      const std::vector<double>& core, const SolverOptions& opt) {
    const auto& w = p.f.weights();
    const auto& phat = p.phat.probs();
    const double m = mean(p.phat, p.f);
    const double u = p.target;
    const std::size_t k = phat.size();

    if (u > hi.value + 1e-12 || u < lo.value - 1e-12) {
        SolverReport r;  // no Q in the base region reaches F(Q) = u
        r.objective_value = kInf;
        r.converged = true;
        r.kkt_residual = 0.0;
        return r;
    }
    if (std::fabs(u - m) <= 1e-15) return boundary_report(phat, w, m, geo, u);
    if (u >= hi.value - 1e-12) return boundary_report(hi.argopt, w, m, geo, u);
    if (u <= lo.value + 1e-12) return boundary_report(lo.argopt, w, m, geo, u);

    // Start on the segment from the interior point toward the matching extreme.
    const double m_core = mean(core, p.f);
    const auto& ext = u >= m_core ? hi : lo;
    const double s = (u - m_core) / (ext.value - m_core);
    std::vector<double> q0(k);
    for (std::size_t j = 0; j < k; ++j) q0[j] = (1.0 - s) * core[j] + s * ext.argopt[j];
    if (!geo.strictly_feasible(q0)) return boundary_report(ext.argopt, w, m, geo, u);
    if (k == 2) return boundary_report(q0, w, m, geo, u);
    return barrier_solve(geo, w, m, u, std::move(q0), opt);
}

}  // namespace detail

inline SolverReport feasibility_value(const FeasibilityProblem& p, const SolverOptions& opt = {}) {
    if (!(p.target >= 0.0 && p.target <= 1.0)) throw std::invalid_argument("target must lie in [0,1]");
    if (p.f.k() != p.phat.k()) throw std::invalid_argument("length mismatch");
    const detail::BaseGeometry geo(p.region.kind, p.phat.probs(), p.region.radius);
    const auto hi = geo.maximize(p.f.weights());
    const auto lo = geo.minimize(p.f.weights());
    return detail::solve_feasibility(p, geo, hi, lo, geo.interior_point(), opt);
}

// ---------------------------------------------------------------------------
// Csiszar + base region intervals
// ---------------------------------------------------------------------------

struct IntersectionOptions {
    /// Fraction of delta spent on C_F; the base region gets the rest.
    double level_share = 0.5;
    SanovBound sanov_bound = SanovBound::second_term;
    double tolerance = 1e-6;
};

/// One bisection probe, for tracing.
struct ProbeRecord {
    Side side;
    double u;
    double objective;
    bool converged;
    bool decided;
};

using ProbeTrace = std::function<void(const ProbeRecord&)>;

inline Interval csiszar_intersection_interval(const EmpiricalDistribution& phat, const LinearFunctional& f,
                                              Confidence c, BaseRegion base, const IntersectionOptions& opt = {},
                                              const ProbeTrace& trace = {}) {
    if (phat.n() < 1) throw std::invalid_argument("no samples");
    if (f.k() != phat.k()) throw std::invalid_argument("length mismatch");
    const auto n = phat.n();
    const auto k = phat.k();
    const Confidence base_conf = c.share(1.0 - opt.level_share);
    const double z_base = base == BaseRegion::sanov ? sanov_threshold(n, k, base_conf, opt.sanov_bound)
                                                    : polytope_threshold(n, k, base_conf);
    const double z_level = level_set_threshold(n, c.share(opt.level_share));
    const double m = mean(phat, f);

    const detail::BaseGeometry geo(base, phat.probs(), z_base);
    const auto hi = geo.maximize(f.weights());
    const auto lo = geo.minimize(f.weights());
    const auto core = geo.interior_point();

    SolverOptions sopt;
    sopt.decide_against = z_level;

    auto acceptable = [&](Side side, double u) {
        const FeasibilityProblem prob{phat, f, u, {base, z_base}, z_level};
        const SolverReport rep = detail::solve_feasibility(prob, geo, hi, lo, core, sopt);
        if (trace) trace({side, u, rep.objective_value, rep.converged, rep.decided});
        if (!rep.converged && !rep.decided) throw numerical_error("feasibility solver did not converge");
        return rep.objective_value <= z_level;
    };

    auto endpoint = [&](Side side) {
        const double ext = side == Side::upper ? hi.value : lo.value;
        const double direct = invert_kl_binary(m, z_level, side);
        if (std::fabs(ext - m) <= 1e-12) return ext;
        if (!acceptable(side, m)) throw numerical_error("no sign change");

        const double dir = side == Side::upper ? 1.0 : -1.0;
        double inner = m, outer;
        if (dir * (direct - ext) < 0.0) {
            outer = direct;  // C_F alone already cuts below the base extreme
        } else {
            const double cap = ext - dir * std::min(1e-9, 0.5 * std::fabs(ext - m));
            if (acceptable(side, cap)) return ext;
            outer = cap;
        }
        for (int it = 0; it < 40 && std::fabs(outer - inner) > opt.tolerance; ++it) {
            const double mid = 0.5 * (inner + outer);
            (acceptable(side, mid) ? inner : outer) = mid;
        }
        if (std::fabs(outer - inner) > opt.tolerance) throw numerical_error("bisection did not converge");
        return outer;
    };

    const double lower = endpoint(Side::lower);
    const double upper = endpoint(Side::upper);
    return Interval::clipped(lower, upper);
}

inline Interval csiszar_intersection_interval(const Histogram& h, const LinearFunctional& f, Confidence c,
                                              BaseRegion base, const IntersectionOptions& opt = {}) {
    return csiszar_intersection_interval(normalize(h), f, c, base, opt);
}

/// [min F, max F] over any region kind.
inline Interval region_interval(const RegionSpec& region, const ProbeTrace& trace = {}) {
    if (!region.functional) throw std::invalid_argument("region has no functional");
    const auto& f = *region.functional;
    switch (region.kind) {
        case RegionKind::sanov_ball:
        case RegionKind::polytope:
            return Interval::clipped(optimize_linear_over_region(region, f, Sense::min),
                                     optimize_linear_over_region(region, f, Sense::max));
        case RegionKind::csiszar_level_set: return csiszar_level_interval_direct(region.center, f, region.confidence);
        case RegionKind::csiszar_plus_sanov:
        case RegionKind::csiszar_plus_polytope: {
            IntersectionOptions opt;
            opt.level_share = region.options.level_share;
            opt.sanov_bound = region.options.sanov_bound;
            const BaseRegion base =
                region.kind == RegionKind::csiszar_plus_sanov ? BaseRegion::sanov : BaseRegion::polytope;
            return csiszar_intersection_interval(region.center, f, region.confidence, base, opt, trace);
        }
    }
    throw std::invalid_argument("unknown region kind");
}

// ---------------------------------------------------------------------------
// Asymptotic exponent
// ---------------------------------------------------------------------------

/**
 * r(eps) = inf{KL(Q, p) : F(Q) >= F(p) + eps} / (eps^2 / (2 Var_p(F))).
 * The infimum is the I-projection of p onto the level F = F(p) + eps.
 */
inline double asymptotic_exponent_check(const EmpiricalDistribution& p, const LinearFunctional& f, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const double var = variance(p, f);
    if (!(var > 0.0)) throw std::invalid_argument("degenerate distribution: zero variance");
    const double target = mean(p, f) + eps;
    const LevelProjection lp = level_set_divergence(p, f, target);
    if (lp.value == kInf) throw std::invalid_argument("empty constraint set: F(Q) >= F(p) + eps unattainable");
    return lp.value / (eps * eps / (2.0 * var));
}

/// The minimizer Q* of KL(Q, p) over F(Q) >= F(p) + eps.
inline EmpiricalDistribution exponent_minimizer(const EmpiricalDistribution& p, const LinearFunctional& f,
                                                double eps) {
    const LevelProjection lp = level_set_divergence(p, f, mean(p, f) + eps);
    if (lp.value == kInf) throw std::invalid_argument("empty constraint set");
    return detail::clean_distribution(lp.projection);
}

// ---------------------------------------------------------------------------
// Brute-force lattice oracle
// ---------------------------------------------------------------------------

namespace detail {

/// Calls fn(counts) for every composition of `total` into k nonnegative parts.
template <typename Fn>
void for_each_composition(std::size_t k, int total, Fn&& fn) {
    std::vector<int> c(k, 0);
    auto rec = [&](auto&& self, std::size_t idx, int left) -> void {
        if (idx + 1 == k) {
            c[idx] = left;
            fn(c);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            c[idx] = v;
            self(self, idx + 1, left - v);
        }
    };
    rec(rec, 0, total);
}

/// Lattice approximation of min KL(P', q) over F(P') = level: P' has its
/// interior coordinates on the lattice and the two end coordinates solved
/// from the constraints. Returns early once a value <= stop is seen.
inline double lattice_level_distance(std::span<const double> q, std::span<const double> w, double level,
                                     double step, double stop) {
    const std::size_t k = q.size();
    auto eval = [&](std::span<const double> mid) {
        // mid = p'_1 .. p'_{k-2} (0-based interior coordinates)
        double last = level, s = 0.0;
        for (std::size_t j = 0; j < mid.size(); ++j) {
            last -= w[j + 1] * mid[j];
            s += mid[j];
        }
        const double first = 1.0 - s - last;
        if (last < -1e-15 || first < -1e-15) return kInf;
        double v = xlogx_over(std::max(first, 0.0), q[0]) + xlogx_over(std::max(last, 0.0), q[k - 1]);
        for (std::size_t j = 0; j < mid.size(); ++j) v += xlogx_over(mid[j], q[j + 1]);
        return v;
    };

    if (k == 2) {
        const double v[1] = {0.0};
        return eval(std::span<const double>(v, 0));
    }
    const int N = int(std::lround(1.0 / step));

    if (k == 3) {
        auto f1 = [&](int j) {
            const double v[1] = {double(j) / N};
            return eval(v);
        };
        int hi = 0;
        while (hi < N && f1(hi + 1) < kInf) ++hi;
        // leading infeasible stretch (only when w_1 = 1)
        int lo = 0;
        while (lo < hi && f1(lo) == kInf) ++lo;
        const bool positive = q[0] > 0.0 && q[1] > 0.0 && q[2] > 0.0;
        if (!positive) {
            double best = kInf;
            for (int j = lo; j <= hi; ++j) best = std::min(best, f1(j));
            return best;
        }
        // convex along the level set: integer ternary search
        while (hi - lo > 2) {
            const int m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
            const double a = f1(m1), b = f1(m2);
            if (a < b)
                hi = m2 - 1;
            else if (a > b)
                lo = m1 + 1;
            else {
                lo = m1;
                hi = m2;
            }
        }
        double best = kInf;
        for (int j = lo; j <= hi; ++j) best = std::min(best, f1(j));
        return best;
    }

    double best = kInf;
    std::vector<double> mid(k - 2);
    bool done = false;
    auto rec = [&](auto&& self, std::size_t idx, int used) -> void {
        if (done) return;
        if (idx == k - 2) {
            const double v = eval(mid);
            best = std::min(best, v);
            if (best <= stop) done = true;
            return;
        }
        for (int v = 0; v + used <= N && !done; ++v) {
            mid[idx] = double(v) / N;
            self(self, idx + 1, used + v);
        }
    };
    rec(rec, 0, 0);
    return best;
}

}  // namespace detail

/**
 * Exhaustive lattice search: min/max of F over lattice points of the simplex
 * with spacing `step` that belong to the region. Membership in C_F is decided
 * with an inner lattice over the level set.
 */
inline Interval grid_oracle(const RegionSpec& region, const LinearFunctional& f, double step) {
    const std::size_t k = region.k();
    if (k > 5) throw std::invalid_argument("grid oracle supports k <= 5");
    if (!(step >= 1e-4 && step <= 0.5)) throw std::invalid_argument("grid step must lie in [1e-4, 0.5]");
    if (f.k() != k) throw std::invalid_argument("length mismatch");
    const int N = int(std::lround(1.0 / step));
    const auto& c = region.center.probs();
    const auto& w = f.weights();

    std::vector<double> lg(N + 1);
    for (int j = 0; j <= N; ++j) lg[j] = j == 0 ? -kInf : std::log(double(j) / N);
    std::vector<double> c_log(k);
    for (std::size_t j = 0; j < k; ++j) c_log[j] = c[j] > 0.0 ? std::log(c[j]) : 0.0;
    std::vector<double> c1_log(k);
    for (std::size_t j = 0; j < k; ++j) c1_log[j] = c[j] < 1.0 ? std::log(1.0 - c[j]) : 0.0;

    const double z = region.base_threshold + kMembershipSlack;
    auto sanov_ok = [&](const std::vector<int>& j) {
        double v = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (c[i] <= 0.0) continue;
            if (j[i] == 0) return false;
            v += c[i] * (c_log[i] - lg[j[i]]);
        }
        return v <= z;
    };
    auto polytope_ok = [&](const std::vector<int>& j) {
        for (std::size_t i = 0; i < k; ++i) {
            double v = 0.0;
            if (c[i] > 0.0) {
                if (j[i] == 0) return false;
                v += c[i] * (c_log[i] - lg[j[i]]);
            }
            if (c[i] < 1.0) {
                if (j[i] == N) return false;
                v += (1.0 - c[i]) * (c1_log[i] - lg[N - j[i]]);
            }
            if (v > z) return false;
        }
        return true;
    };
    auto base_ok = [&](const std::vector<int>& j) {
        switch (region.kind) {
            case RegionKind::sanov_ball:
            case RegionKind::csiszar_plus_sanov: return sanov_ok(j);
            case RegionKind::polytope:
            case RegionKind::csiszar_plus_polytope: return polytope_ok(j);
            case RegionKind::csiszar_level_set: return true;
        }
        return false;
    };
    auto value_of = [&](const std::vector<int>& j) {
        double v = 0.0;
        for (std::size_t i = 0; i < k; ++i) v += w[i] * double(j[i]) / N;
        return v;
    };

    double best_lo = kInf, best_hi = -kInf;
    if (!uses_level_set(region.kind)) {
        detail::for_each_composition(k, N, [&](const std::vector<int>& j) {
            if (!base_ok(j)) return;
            const double v = value_of(j);
            best_lo = std::min(best_lo, v);
            best_hi = std::max(best_hi, v);
        });
    } else {
        if (!region.functional) throw std::invalid_argument("Csiszar regions need a linear functional");
        const auto& wf = region.functional->weights();
        const double level = mean(c, *region.functional);
        const double zl = region.level_threshold + kMembershipSlack;
        std::vector<std::pair<double, std::vector<int>>> cand;
        detail::for_each_composition(k, N, [&](const std::vector<int>& j) {
            if (base_ok(j)) cand.emplace_back(value_of(j), j);
        });
        std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<double> q(k);
        auto level_ok = [&](const std::vector<int>& j) {
            for (std::size_t i = 0; i < k; ++i) q[i] = double(j[i]) / N;
            return detail::lattice_level_distance(q, wf, level, step, zl) <= zl;
        };
        for (const auto& [v, j] : cand)
            if (level_ok(j)) {
                best_lo = v;
                break;
            }
        for (auto it = cand.rbegin(); it != cand.rend(); ++it)
            if (level_ok(it->second)) {
                best_hi = it->first;
                break;
            }
    }
    if (best_lo == kInf) throw numerical_error("no lattice point inside the region");
    return Interval::clipped(best_lo, best_hi);
}

}  // namespace simplexci
