// Command-line front end: intervals, comparisons, quantiles, experiments and
// the solver-vs-lattice self check.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure.

#include <simplexci/io.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace sc = simplexci;
using sc::json;

namespace {

struct Usage : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

void fail_json(const char* kind, const std::string& msg) {
    std::cerr << json{{"error", kind}, {"message", msg}}.dump() << "\n";
}

sc::LinearFunctional weights_or_canonical(const std::vector<double>& w, std::size_t k) {
    if (w.empty()) return sc::LinearFunctional::canonical(k);
    if (w.size() != k) throw std::invalid_argument("--weights must have one entry per category");
    return sc::LinearFunctional(w);
}

sc::MeanMethod mean_method(const std::string& s) {
    if (auto m = sc::parse_mean_method(s)) return *m;
    throw std::invalid_argument("unknown method '" + s + "'");
}

json interval_json(const sc::Interval& iv, std::size_t k, const std::string& method, double delta) {
    return {{"lo", iv.lo},
            {"hi", iv.hi},
            {"stars_lo", sc::to_stars(iv.lo, k)},
            {"stars_hi", sc::to_stars(iv.hi, k)},
            {"method", method},
            {"delta", delta}};
}

sc::ProbeTrace stderr_trace(bool on) {
    if (!on) return {};
    return [](const sc::ProbeRecord& r) {
        std::cerr << json{{"side", r.side == sc::Side::upper ? "upper" : "lower"},
                          {"u", r.u},
                          {"objective", std::isfinite(r.objective) ? json(r.objective) : json("inf")},
                          {"converged", r.converged},
                          {"decided", r.decided}}
                         .dump()
                  << "\n";
    };
}

int run_interval(const std::string& file, double delta, const std::string& method, const std::vector<double>& w,
                 bool dump_region, bool dump_trace) {
    const auto h = sc::histogram_from_json(sc::read_json_file(file));
    const auto f = weights_or_canonical(w, h.k());
    const sc::Confidence c(delta);
    const auto m = mean_method(method);
    if (dump_region) {
        if (auto kind = sc::region_kind_of(m))
            std::cerr << sc::to_json(sc::make_region(*kind, sc::normalize(h), c, f)).dump() << "\n";
    }
    const auto iv = sc::mean_interval(m, h, f, c, {}, stderr_trace(dump_trace));
    std::cout << interval_json(iv, h.k(), method, delta).dump(2) << "\n";
    return 0;
}

int run_compare(const std::vector<std::string>& files, double delta, const std::string& method,
                const std::vector<double>& w) {
    if (files.size() != 2) throw Usage("compare needs exactly two --histogram files");
    const auto a = sc::histogram_from_json(sc::read_json_file(files[0]));
    const auto b = sc::histogram_from_json(sc::read_json_file(files[1]));
    if (a.k() != b.k()) throw std::invalid_argument("histograms have different numbers of categories");
    const auto f = weights_or_canonical(w, a.k());
    const auto m = mean_method(method);
    const sc::Confidence c(delta);
    const auto ia = sc::mean_interval(m, a, f, c);
    const auto ib = sc::mean_interval(m, b, f, c);
    const json out{{"significant", !ia.overlaps(ib)},
                   {"method", method},
                   {"delta", delta},
                   {"intervals", {interval_json(ia, a.k(), method, delta), interval_json(ib, b.k(), method, delta)}}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_quantile(const std::string& file, double tau, double delta, const std::string& band_name,
                 const std::string& csv_path) {
    const auto h = sc::histogram_from_json(sc::read_json_file(file));
    const auto bm = sc::parse_band_method(band_name);
    if (!bm) throw std::invalid_argument("unknown band '" + band_name + "'");
    const sc::QuantileQuery q(tau, h.k());
    const auto band = sc::make_band(*bm, h, sc::Confidence(delta), tau);
    const auto [lo, hi] = sc::quantile_interval(band, q);
    std::cout << json{{"lo", lo}, {"hi", hi}, {"tau", tau}, {"band", band_name}, {"delta", delta}}.dump(2) << "\n";
    if (csv_path.empty()) {
        sc::write_band_csv(std::cout, band);
    } else {
        std::ofstream out(csv_path);
        if (!out) throw std::invalid_argument("cannot write '" + csv_path + "'");
        sc::write_band_csv(out, band);
    }
    return 0;
}

int run_experiment(const std::string& config, const std::string& out_dir) {
    const auto cfg = sc::config_from_json(sc::read_json_file(config));
    const auto result = sc::run_experiment(cfg);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    {
        std::ofstream csv(dir / "results.csv");
        sc::write_results_csv(csv, result);
    }
    {
        std::ofstream js(dir / "results.json");
        js << sc::to_json(result).dump(2) << "\n";
    }
    {
        std::ofstream svg(dir / "bars.svg");
        sc::write_bars_svg(svg, result);
    }
    sc::write_results_csv(std::cout, result);
    return 0;
}

int run_oracle_check(std::size_t k, int trials, std::uint64_t seed, double step, double tol) {
    std::mt19937_64 rng(seed);
    const std::uint64_t sizes[] = {30, 100, 300};
    const sc::RegionKind kinds[] = {sc::RegionKind::sanov_ball, sc::RegionKind::polytope,
                                    sc::RegionKind::csiszar_plus_sanov, sc::RegionKind::csiszar_plus_polytope};
    const auto f = sc::LinearFunctional::canonical(k);
    const sc::Confidence c(0.05);
    int failures = 0;
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::gamma_distribution<double> g(1.0, 1.0);
        std::vector<double> p(k);
        for (auto& v : p) v = g(rng);
        const auto n = sizes[std::size_t(t) % 3];
        const auto phat = sc::EmpiricalDistribution::normalized(p, n);
        for (auto kind : kinds) {
            const auto region = sc::make_region(kind, phat, c, f);
            const auto solver = sc::region_interval(region);
            const auto grid = sc::grid_oracle(region, f, step);
            const double err = std::max(std::fabs(solver.lo - grid.lo), std::fabs(solver.hi - grid.hi));
            worst = std::max(worst, err);
            const bool ok = err <= tol;
            if (!ok) ++failures;
            std::cout << (ok ? "PASS" : "FAIL") << " trial=" << t << " n=" << n << " region=" << sc::to_string(kind)
                      << " solver=[" << solver.lo << "," << solver.hi << "] grid=[" << grid.lo << "," << grid.hi
                      << "] err=" << err << "\n";
        }
    }
    std::cout << (failures == 0 ? "PASS" : "FAIL") << " oracle-check: " << failures << " mismatches, max error "
              << worst << "\n";
    return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confidence intervals for rating histograms"};
    app.require_subcommand(1);

    std::vector<std::string> histograms;
    std::string method = "csiszar-polytope", band = "kl-dd", config, out_dir, band_csv;
    double delta = 0.05, tau = 0.5, step = 5e-4, tol = 2e-3;
    std::vector<double> weights;
    bool dump_region = false, dump_trace = false;
    std::size_t k = 3;
    int trials = 50;
    std::uint64_t seed = 1;

    auto* interval = app.add_subcommand("interval", "Confidence interval for the mean rating");
    interval->add_option("--histogram", histograms, "Histogram JSON {\"counts\": [...]}")->required()->expected(1);
    interval->add_option("--delta", delta, "Error probability")->capture_default_str();
    interval->add_option("--method", method, "Interval method")->capture_default_str();
    interval->add_option("--weights", weights, "Functional weights (default: evenly spaced)");
    interval->add_flag("--dump-region", dump_region, "Print the region description to stderr");
    interval->add_flag("--dump-solver-trace", dump_trace, "Print every bisection probe to stderr");

    auto* compare = app.add_subcommand("compare", "Do two histograms have significantly different means?");
    compare->add_option("--histogram", histograms, "Histogram JSON (give twice)")->required();
    compare->add_option("--delta", delta, "Error probability")->capture_default_str();
    compare->add_option("--method", method, "Interval method")->capture_default_str();
    compare->add_option("--weights", weights, "Functional weights");

    auto* quantile = app.add_subcommand("quantile", "Confidence interval for a rating quantile");
    quantile->add_option("--histogram", histograms, "Histogram JSON")->required()->expected(1);
    quantile->add_option("--tau", tau, "Quantile level in (0,1)")->required();
    quantile->add_option("--delta", delta, "Error probability")->capture_default_str();
    quantile->add_option("--band", band, "dkwm | kl-naive | kl-dd")->capture_default_str();
    quantile->add_option("--band-csv", band_csv, "Write the band CSV here instead of stdout");

    auto* experiment = app.add_subcommand("experiment", "Sample-size experiment from a JSON config");
    experiment->add_option("--config", config, "Experiment config JSON")->required();
    experiment->add_option("--out-dir", out_dir, "Output directory")->required();

    auto* oracle = app.add_subcommand("oracle-check", "Compare solver intervals with a lattice search");
    oracle->add_option("--k", k, "Number of categories (<= 5)")->capture_default_str();
    oracle->add_option("--trials", trials, "Random configurations")->capture_default_str();
    oracle->add_option("--seed", seed, "Random seed")->capture_default_str();
    oracle->add_option("--step", step, "Lattice step")->capture_default_str();
    oracle->add_option("--tolerance", tol, "Allowed endpoint difference")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail_json("usage", e.what());
        return 1;
    }

    try {
        std::cout.precision(12);
        if (*interval) return run_interval(histograms.at(0), delta, method, weights, dump_region, dump_trace);
        if (*compare) return run_compare(histograms, delta, method, weights);
        if (*quantile) return run_quantile(histograms.at(0), tau, delta, band, band_csv);
        if (*experiment) return run_experiment(config, out_dir);
        if (*oracle) return run_oracle_check(k, trials, seed, step, tol);
    } catch (const sc::numerical_error& e) {
        fail_json("numerical", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        fail_json("usage", e.what());
        return 1;
    } catch (const std::exception& e) {
        fail_json("numerical", e.what());
        return 2;
    }
    return 1;
}
