// harness.hpp
//
// Monte Carlo sample-size experiments: how many ratings each method needs
// before its interval (or CDF band) is narrower than a target width.
#pragma once

#include "methods.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <variant>

namespace simplexci {

// ---------------------------------------------------------------------------
// Seeding and sampling
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-independent child seed: the same (parent, a, b) always gives the same stream.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(splitmix64(parent) ^ a) ^ (b * 0xd1342543de82ef95ULL));
}

/// n i.i.d. draws from p, tallied as a histogram (sequential binomial splitting).
template <typename Rng>
Histogram sample_histogram(const EmpiricalDistribution& p, std::uint64_t n, Rng& rng) {
    const auto& probs = p.probs();
    std::vector<std::uint64_t> counts(probs.size(), 0);
    std::uint64_t left = n;
    double mass = 1.0;
    for (std::size_t j = 0; j + 1 < probs.size() && left > 0; ++j) {
        if (probs[j] <= 0.0) {
            mass -= probs[j];
            continue;
        }
        const double q = mass > 0.0 ? std::min(1.0, probs[j] / mass) : 1.0;
        std::binomial_distribution<std::uint64_t> bin(left, q);
        counts[j] = bin(rng);
        left -= counts[j];
        mass -= probs[j];
    }
    counts.back() += left;
    return Histogram(std::move(counts));
}

// ---------------------------------------------------------------------------
// Methods under test
// ---------------------------------------------------------------------------

enum class ExperimentMode { mean, quantile };

using MethodTag = std::variant<MeanMethod, BandMethod>;

inline std::string method_name(const MethodTag& m) {
    return std::visit([](auto v) { return std::string(to_string(v)); }, m);
}

inline MethodTag parse_method(std::string_view s, ExperimentMode mode) {
    if (mode == ExperimentMode::mean) {
        if (auto m = parse_mean_method(s)) return *m;
    } else if (auto b = parse_band_method(s)) {
        return *b;
    }
    throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

/// What a probe measures: the functional for means, tau for bands.
struct ProbeContext {
    ExperimentMode mode = ExperimentMode::mean;
    LinearFunctional weights;
    double tau = 0.5;
};

inline double probe_width(const MethodTag& m, const Histogram& h, Confidence c, const ProbeContext& ctx) {
    if (const auto* mm = std::get_if<MeanMethod>(&m)) return mean_interval(*mm, h, ctx.weights, c).width();
    return band_width_at(make_band(std::get<BandMethod>(m), h, c, ctx.tau), ctx.tau);
}

inline constexpr std::uint64_t kMaxSampleSize = 10'000'000;

/**
 * Smallest n (found by doubling from 2, then bisection) at which a fresh
 * sample of size n gives width <= target. The sample at each n is drawn from
 * a stream keyed by (seed, n), so every method sees the same data at the
 * same n.
 */
inline std::uint64_t required_sample_size(const EmpiricalDistribution& truth, const MethodTag& method, double width,
                                          Confidence c, std::uint64_t seed, const ProbeContext& ctx) {
    if (!(width > 0.0 && width <= 1.0)) throw std::invalid_argument("width must lie in (0,1]");
    if (ctx.mode == ExperimentMode::mean && ctx.weights.k() != truth.k())
        throw std::invalid_argument("length mismatch");
    auto fits = [&](std::uint64_t n) {
        std::mt19937_64 rng(derive_seed(seed, n));
        return probe_width(method, sample_histogram(truth, n, rng), c, ctx) <= width;
    };

    std::uint64_t hi = 2, lo = 1;
    while (!fits(hi)) {
        if (hi >= kMaxSampleSize) throw numerical_error("width unreachable");
        lo = hi;
        hi = std::min(2 * hi, kMaxSampleSize);
    }
    if (hi == 2) return 2;
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        (fits(mid) ? hi : lo) = mid;
    }
    return hi;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string name = "experiment";
    ExperimentMode mode = ExperimentMode::mean;
    double tau = 0.5;
    EmpiricalDistribution true_dist;
    LinearFunctional weights;
    Confidence delta{0.05};
    std::vector<double> widths;
    std::vector<MethodTag> methods;
    int repetitions = 20;
    std::uint64_t seed = 0;

    void validate() const {
        if (true_dist.k() < 2) throw std::invalid_argument("config needs a true distribution");
        if (mode == ExperimentMode::mean && weights.k() != true_dist.k())
            throw std::invalid_argument("weights and distribution lengths differ");
        if (mode == ExperimentMode::quantile && !(tau > 0.0 && tau < 1.0))
            throw std::invalid_argument("tau must lie in (0,1)");
        if (widths.empty()) throw std::invalid_argument("config needs at least one width");
        for (std::size_t i = 0; i < widths.size(); ++i) {
            if (!(widths[i] > 0.0 && widths[i] <= 1.0)) throw std::invalid_argument("widths must lie in (0,1]");
            if (i > 0 && !(widths[i] < widths[i - 1])) throw std::invalid_argument("widths must be strictly decreasing");
        }
        if (methods.empty()) throw std::invalid_argument("config needs at least one method");
        if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    }
};

struct ExperimentCell {
    std::string method;
    double width = 0.0;
    double n_avg = 0.0;
    double n_normalized = 1.0;
    std::vector<std::uint64_t> per_repetition;
};

struct ExperimentResult {
    ExperimentConfig config;
    /// Width-major, then methods in config order.
    std::vector<ExperimentCell> cells;

    const ExperimentCell& at(std::string_view method, double width) const {
        for (const auto& c : cells)
            if (c.method == method && c.width == width) return c;
        throw std::out_of_range("no such cell");
    }
};

inline unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SIMPLEXCI_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min(n, unsigned(cap));
    }
    return n;
}

/// Runs fn(i) for i in [0, count) on up to worker_count() threads.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const unsigned workers = unsigned(std::min<std::size_t>(worker_count(), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_lock);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const ProbeContext ctx{cfg.mode, cfg.weights, cfg.tau};
    const std::size_t W = cfg.widths.size(), M = cfg.methods.size(), R = std::size_t(cfg.repetitions);

    std::vector<std::uint64_t> n(W * M * R);
    parallel_for(n.size(), [&](std::size_t idx) {
        const std::size_t r = idx % R, m = (idx / R) % M, w = idx / (R * M);
        n[idx] = required_sample_size(cfg.true_dist, cfg.methods[m], cfg.widths[w], cfg.delta,
                                      derive_seed(cfg.seed, r), ctx);
    });

    ExperimentResult res;
    res.config = cfg;
    for (std::size_t w = 0; w < W; ++w) {
        const std::size_t first = res.cells.size();
        double best = kInf;
        for (std::size_t m = 0; m < M; ++m) {
            ExperimentCell cell;
            cell.method = method_name(cfg.methods[m]);
            cell.width = cfg.widths[w];
            const auto begin = n.begin() + std::ptrdiff_t((w * M + m) * R);
            cell.per_repetition.assign(begin, begin + std::ptrdiff_t(R));
            double total = 0.0;
            for (auto v : cell.per_repetition) total += double(v);
            cell.n_avg = total / double(R);
            best = std::min(best, cell.n_avg);
            res.cells.push_back(std::move(cell));
        }
        for (std::size_t i = first; i < res.cells.size(); ++i) res.cells[i].n_normalized = res.cells[i].n_avg / best;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Reference distributions
// ---------------------------------------------------------------------------

/// Uniform distributions on every `size`-subset of the k categories
/// (midpoints of the (size-1)-dimensional faces of the simplex).
inline std::vector<EmpiricalDistribution> face_midpoints(std::size_t k, std::size_t size) {
    if (k < 2 || size < 1 || size > k) throw std::invalid_argument("need 1 <= size <= k");
    std::vector<EmpiricalDistribution> out;
    std::vector<bool> pick(k, false);
    std::fill(pick.begin(), pick.begin() + std::ptrdiff_t(size), true);
    do {
        std::vector<double> p(k, 0.0);
        for (std::size_t j = 0; j < k; ++j)
            if (pick[j]) p[j] = 1.0 / double(size);
        out.emplace_back(EmpiricalDistribution::normalized(std::move(p)));
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return out;
}

struct NamedDistribution {
    std::string name;
    EmpiricalDistribution dist;
};

/// Five-star test distributions for coverage and sample-size studies.
inline std::vector<NamedDistribution> reference_distributions() {
    auto d = [](std::vector<double> p) { return EmpiricalDistribution::normalized(std::move(p)); };
    return {
        {"uniform", d({1, 1, 1, 1, 1})},
        {"top-three", d({0, 0, 1, 1, 1})},
        {"peaked", d({0, 0.05, 0.9, 0.05, 0})},
        {"bernoulli", d({1, 0, 0, 0, 1})},
        {"face-midpoint", d({1, 1, 1, 1, 0})},
    };
}

/// A long-tailed five-star histogram shape, normalized from integer counts.
inline EmpiricalDistribution cartoon_distribution() {
    return EmpiricalDistribution::normalized({365, 308, 294, 67, 27});
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

inline void write_results_csv(std::ostream& os, const ExperimentResult& r) {
    os << "method,width,n_avg,n_normalized\n";
    char buf[256];
    for (const auto& c : r.cells) {
        std::snprintf(buf, sizeof buf, "%s,%.10g,%.4f,%.6f\n", c.method.c_str(), c.width, c.n_avg, c.n_normalized);
        os << buf;
    }
}

namespace detail {

inline std::string svg_escape(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

inline std::string width_label(double w) {
    const double inv = 1.0 / w;
    char buf[64];
    if (std::fabs(inv - std::round(inv)) < 1e-9)
        std::snprintf(buf, sizeof buf, "1/%.0f", std::round(inv));
    else
        std::snprintf(buf, sizeof buf, "%.4g", w);
    return buf;
}

}  // namespace detail

/// Grouped bar chart: one group per width, one bar per method, height = normalized n.
inline void write_bars_svg(std::ostream& os, const ExperimentResult& r) {
    static constexpr const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                              "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const std::size_t W = r.config.widths.size(), M = r.config.methods.size();
    const double bar = 14.0, gap = 18.0, left = 60.0, top = 40.0, plot_h = 260.0;
    const double group = bar * double(M) + gap;
    const double plot_w = group * double(W);
    const double width = left + plot_w + 190.0, height = top + plot_h + 60.0;

    double ymax = 1.0;
    for (const auto& c : r.cells) ymax = std::max(ymax, c.n_normalized);
    ymax = std::ceil(ymax * 2.0) / 2.0;

    char buf[512];
    auto emit = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof buf, fmt, args...);
        os << buf;
    };
    emit("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
         "font-size=\"11\">\n",
         width, height);
    emit("<rect x=\"0\" y=\"0\" width=\"%.0f\" height=\"%.0f\" fill=\"white\"/>\n", width, height);
    os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << detail::svg_escape(r.config.name)
       << ": normalized sample size</text>\n";

    for (int t = 0; t <= int(ymax * 2.0); ++t) {
        const double v = 0.5 * t;
        const double y = top + plot_h * (1.0 - v / ymax);
        emit("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\"/>\n", left, y, left + plot_w, y,
             v == 1.0 ? "#000000" : "#dddddd");
        emit("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.1f</text>\n", left - 6.0, y + 4.0, v);
    }

    for (std::size_t w = 0; w < W; ++w) {
        const double gx = left + group * double(w) + gap / 2.0;
        for (std::size_t m = 0; m < M; ++m) {
            const auto& c = r.cells[w * M + m];
            const double h = plot_h * c.n_normalized / ymax;
            emit("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"%s\"><title>%s %.4f</title></rect>\n",
                 gx + bar * double(m), top + plot_h - h, bar - 1.0, h, palette[m % 10],
                 detail::svg_escape(c.method).c_str(), c.n_normalized);
        }
        emit("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n", gx + bar * double(M) / 2.0,
             top + plot_h + 18.0, detail::width_label(r.config.widths[w]).c_str());
    }
    emit("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">target width</text>\n", left + plot_w / 2.0,
         top + plot_h + 40.0);

    for (std::size_t m = 0; m < M; ++m) {
        const double y = top + 16.0 * double(m);
        emit("<rect x=\"%.1f\" y=\"%.1f\" width=\"10\" height=\"10\" fill=\"%s\"/>\n", left + plot_w + 16.0, y,
             palette[m % 10]);
        os << "<text x=\"" << left + plot_w + 32.0 << "\" y=\"" << y + 9.0 << "\">"
           << detail::svg_escape(method_name(r.config.methods[m])) << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace simplexci
