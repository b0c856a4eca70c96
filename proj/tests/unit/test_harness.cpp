#include <simplexci/harness.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

using namespace simplexci;
using Catch::Approx;

TEST_CASE("seed derivation is order independent and spreads", "[harness]") {
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 50; ++a)
        for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(7, a, b));
    CHECK(seen.size() == 2500);
}

TEST_CASE("multinomial sampler", "[harness]") {
    const EmpiricalDistribution p({0.1, 0.0, 0.6, 0.3});
    std::mt19937_64 rng(1);
    const auto h = sample_histogram(p, 100000, rng);
    CHECK(h.n() == 100000);
    CHECK(h[1] == 0);
    CHECK(double(h[0]) / 1e5 == Approx(0.1).margin(0.005));
    CHECK(double(h[2]) / 1e5 == Approx(0.6).margin(0.005));
    const EmpiricalDistribution last({0.0, 0.0, 1.0});
    CHECK(sample_histogram(last, 17, rng).counts() == std::vector<std::uint64_t>{0, 0, 17});
}

TEST_CASE("Hoeffding sample size matches closed-form inversion", "[harness]") {
    const auto truth = cartoon_distribution();
    const ProbeContext ctx{ExperimentMode::mean, LinearFunctional::canonical(5), 0.5};
    const Confidence c(0.05);
    for (double width : {0.5, 0.25, 0.125, 1.0 / 64}) {
        // smallest n with 2 sqrt(log(40)/(2n)) <= width
        const auto exact = std::uint64_t(std::ceil(2.0 * std::log(40.0) / (width * width) - 1e-9));
        std::uint64_t n = std::max<std::uint64_t>(2, exact);
        while (n > 2 && 2.0 * hoeffding_radius(n - 1, c) <= width) --n;
        while (2.0 * hoeffding_radius(n, c) > width) ++n;
        CHECK(required_sample_size(truth, MeanMethod::hoeffding, width, c, 5, ctx) == n);
    }
    CHECK(required_sample_size(truth, MeanMethod::hoeffding, 1.0, c, 5, ctx) == 2);
    CHECK(required_sample_size(truth, MeanMethod::empirical_bernstein, 1.0, c, 5, ctx) == 2);
    CHECK_THROWS_AS(required_sample_size(truth, MeanMethod::hoeffding, 0.0, c, 5, ctx), std::invalid_argument);
}

TEST_CASE("required sample size is monotone in width", "[harness][property]") {
    const auto truth = cartoon_distribution();
    const ProbeContext ctx{ExperimentMode::mean, LinearFunctional::canonical(5), 0.5};
    for (auto m : {MeanMethod::empirical_bernstein, MeanMethod::bernoulli_kl, MeanMethod::polytope}) {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            std::uint64_t prev = 0;
            for (double w : {0.5, 0.25, 0.125, 0.0625}) {
                const auto n = required_sample_size(truth, m, w, Confidence(0.05), seed, ctx);
                CHECK(n >= prev);
                prev = n;
            }
        }
    }
}

TEST_CASE("unreachable width reports a numerical error", "[harness]") {
    // DKWM at tau = 0.5 on a point mass: L = U = 1 at the top only, so Width stays 0;
    // use a mean method with a width below floating resolution instead
    const EmpiricalDistribution truth({0.5, 0.5});
    const ProbeContext ctx{ExperimentMode::mean, LinearFunctional::canonical(2), 0.5};
    CHECK_THROWS_AS(required_sample_size(truth, MeanMethod::hoeffding, 1e-4, Confidence(0.05), 1, ctx),
                    numerical_error);
}

TEST_CASE("experiment normalization and determinism", "[harness]") {
    ExperimentConfig cfg;
    cfg.name = "unit";
    cfg.true_dist = cartoon_distribution();
    cfg.weights = LinearFunctional::canonical(5);
    cfg.widths = {0.25, 0.125};
    cfg.methods = {MeanMethod::hoeffding, MeanMethod::bernoulli_kl, MeanMethod::csiszar_polytope};
    cfg.repetitions = 3;
    cfg.seed = 42;
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    std::ostringstream sa, sb;
    write_results_csv(sa, a);
    write_results_csv(sb, b);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("method,width,n_avg,n_normalized\n", 0) == 0);
    CHECK(a.cells.size() == 6);
    for (double w : cfg.widths) {
        double best = kInf;
        for (const auto& m : cfg.methods) best = std::min(best, a.at(method_name(m), w).n_normalized);
        CHECK(best == 1.0);
        CHECK(a.at("bernoulli-kl", w).n_avg <= a.at("hoeffding", w).n_avg);
    }

    cfg.methods = {MeanMethod::hoeffding};
    cfg.widths = {0.25};
    cfg.repetitions = 1;
    CHECK(run_experiment(cfg).cells.at(0).n_normalized == 1.0);
}

TEST_CASE("experiment config validation", "[harness]") {
    ExperimentConfig cfg;
    cfg.true_dist = cartoon_distribution();
    cfg.weights = LinearFunctional::canonical(5);
    cfg.methods = {MeanMethod::hoeffding};
    cfg.widths = {0.1, 0.2};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.widths = {0.2, 0.1};
    CHECK_NOTHROW(cfg.validate());
    cfg.repetitions = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("face midpoints", "[harness]") {
    const auto faces = face_midpoints(5, 4);
    CHECK(faces.size() == 5);
    for (const auto& f : faces) {
        int zeros = 0;
        for (double v : f.probs()) zeros += v == 0.0;
        CHECK(zeros == 1);
    }
    CHECK(face_midpoints(5, 2).size() == 10);
    CHECK(face_midpoints(5, 5).size() == 1);
    const auto ref = reference_distributions();
    CHECK(ref.size() == 5);
    CHECK(cartoon_distribution()[0] == Approx(365.0 / 1061.0));
}

TEST_CASE("SVG output is well formed", "[harness]") {
    ExperimentConfig cfg;
    cfg.name = "a<b";
    cfg.true_dist = EmpiricalDistribution({0.5, 0.5});
    cfg.weights = LinearFunctional::canonical(2);
    cfg.widths = {0.5, 0.25};
    cfg.methods = {MeanMethod::hoeffding, MeanMethod::bernoulli_kl};
    cfg.repetitions = 2;
    std::ostringstream os;
    write_bars_svg(os, run_experiment(cfg));
    const auto s = os.str();
    CHECK(s.rfind("<svg", 0) == 0);
    CHECK(s.find("</svg>") != std::string::npos);
    CHECK(s.find("a&lt;b") != std::string::npos);
    CHECK(s.find("1/4") != std::string::npos);
    std::size_t bars = 0;
    for (std::size_t pos = 0; (pos = s.find("<title>", pos)) != std::string::npos; ++pos) ++bars;
    CHECK(bars == 4);
}
