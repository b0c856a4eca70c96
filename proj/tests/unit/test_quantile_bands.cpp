#include <simplexci/harness.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

using namespace simplexci;
using Catch::Approx;

namespace {

Histogram random_histogram(std::mt19937_64& rng, std::size_t k, int max_count) {
    std::uniform_int_distribution<int> d(0, max_count);
    std::vector<std::uint64_t> c(k);
    for (auto& v : c) v = std::uint64_t(d(rng));
    c[0] += 1;
    return Histogram(c);
}

// All lattice CDFs (multiples of 1/N) inside the band, and the range of
// tau-quantiles they produce, by memoized reachability over grid points.
std::pair<double, double> enumerate_quantile_range(const CdfBand& b, double tau, int N) {
    const std::size_t k = b.k();
    // reach[i][v]: some nondecreasing lattice path through points 0..i ends at v/N
    // with quantile index still undetermined (all previous values < tau), or
    // already determined; track the set of reachable quantile indices.
    std::vector<std::map<int, std::vector<bool>>> reach(k);
    auto in_band = [&](std::size_t i, int v) {
        const double x = double(v) / N;
        return x >= b.lower[i] - 1e-12 && x <= b.upper[i] + 1e-12;
    };
    for (int v = 0; v <= N; ++v)
        if (in_band(0, v)) {
            std::vector<bool> q(k + 1, false);
            q[double(v) / N >= tau ? 0 : k] = true;
            reach[0][v] = q;
        }
    for (std::size_t i = 1; i < k; ++i) {
        std::vector<bool> acc(k + 1, false);
        // prefix union over previous values v' <= v
        auto it = reach[i - 1].begin();
        for (int v = 0; v <= N; ++v) {
            while (it != reach[i - 1].end() && it->first <= v) {
                for (std::size_t j = 0; j <= k; ++j)
                    if (it->second[j]) acc[j] = true;
                ++it;
            }
            if (!in_band(i, v)) continue;
            std::vector<bool> q(k + 1, false);
            bool any = false;
            for (std::size_t j = 0; j < k; ++j)
                if (acc[j]) q[j] = any = true;
            if (acc[k]) {
                q[double(v) / N >= tau ? i : k] = true;
                any = true;
            }
            if (any) reach[i][v] = q;
        }
    }
    std::size_t lo = k, hi = 0;
    for (const auto& [v, q] : reach[k - 1])
        for (std::size_t j = 0; j < k; ++j)
            if (q[j]) {
                lo = std::min(lo, j);
                hi = std::max(hi, j);
            }
    return {double(lo) / double(k - 1), double(hi) / double(k - 1)};
}

}  // namespace

TEST_CASE("DKWM band", "[bands]") {
    CHECK(dkwm_radius(200, Confidence(0.05)) == Approx(std::sqrt(std::log(40.0) / 400.0)).epsilon(1e-14));
    CHECK(dkwm_radius(200, Confidence(0.05)) == Approx(0.09603).margin(1e-5));
    const Histogram h({40, 40, 40, 40, 40});
    const auto b = dkwm_band(h, Confidence(0.05));
    const double z = dkwm_radius(200, Confidence(0.05));
    const double F[] = {0.2, 0.4, 0.6, 0.8, 1.0};
    for (int i = 0; i < 4; ++i) {
        CHECK(b.lower[i] == Approx(std::max(0.0, F[i] - z)));
        CHECK(b.upper[i] == Approx(std::min(1.0, F[i] + z)));
    }
    CHECK(b.lower[4] == 1.0);
    CHECK(b.upper[4] == 1.0);
    const auto big = dkwm_band(Histogram({4000000, 4000000, 4000000, 4000000, 4000000}), Confidence(0.05));
    CHECK(big.upper[1] - big.lower[1] < 2e-3);
}

TEST_CASE("naive KL band", "[bands]") {
    const Histogram h({40, 40, 40, 40, 40});
    const Confidence c(0.05);
    const auto alloc = naive_allocation(5, c);
    CHECK(alloc == std::vector<double>(4, 0.0125));
    const auto kb = make_band(BandMethod::kl_naive, h, c);
    const auto db = dkwm_band(h, c);
    // tighter than DKWM near the CDF extremes, looser near 1/2
    CHECK(kb.upper[0] - kb.lower[0] < db.upper[0] - db.lower[0]);
    CHECK(kb.upper[3] - kb.lower[3] < db.upper[3] - db.lower[3]);
    CHECK(kb.upper[1] - kb.lower[1] > db.upper[1] - db.lower[1]);
    // pointwise values before isotonization are invert_kl_binary
    const double z = std::log(2.0 / 0.0125) / 200.0;
    CHECK(kb.upper[3] == Approx(invert_kl_binary(0.8, z, Side::upper)));
    CHECK(kb.lower[0] == Approx(invert_kl_binary(0.2, z, Side::lower)));
}

TEST_CASE("KL band at a saturated CDF point", "[bands]") {
    const Histogram h({10, 0, 0, 0, 0});
    const std::vector<double> alloc{0.01, 0.01, 0.01, 0.01};
    const auto b = kl_band(h, Confidence(0.05), alloc);
    for (int i = 0; i < 4; ++i) {
        CHECK(b.upper[i] == 1.0);
        CHECK(b.lower[i] == Approx(std::exp(-std::log(200.0) / 10.0)).margin(1e-12));
    }
}

TEST_CASE("KL band validates its allocation", "[bands]") {
    const Histogram h({5, 5, 5});
    CHECK_THROWS_AS(kl_band(h, Confidence(0.05), std::vector<double>{0.03, 0.03}), std::invalid_argument);
    CHECK_THROWS_AS(kl_band(h, Confidence(0.05), std::vector<double>{0.01}), std::invalid_argument);
    CHECK_THROWS_AS(kl_band(h, Confidence(0.05), std::vector<double>{0.0, 0.01}), std::invalid_argument);
}

TEST_CASE("data-driven allocation", "[bands]") {
    const Confidence c(0.05);
    // tau-quantile index 1 when the first category already holds tau of the mass
    const Histogram h({60, 10, 10, 10, 10});
    CHECK(empirical_quantile_index(h, 0.5) == 1);
    const auto a = data_driven_allocation(h, 0.5, c);
    const double cc = 1.0 + 1.0 / 4 + 1.0 / 9 + 1.0 / 16;
    CHECK(cc == Approx(1.423611).margin(1e-6));
    CHECK(a[0] == Approx(0.05 / cc).epsilon(1e-14));
    CHECK(a[3] == Approx(0.05 / (cc * 16.0)).epsilon(1e-14));

    // all mass in one category
    const Histogram point({0, 0, 7, 0, 0});
    CHECK(empirical_quantile_index(point, 0.9) == 3);
    const auto ap = data_driven_allocation(point, 0.9, c);
    // c_i = (|i - 3| + 1)^2 = 9, 4, 1, 4
    CHECK(ap[2] == Approx(4.0 * ap[1]).epsilon(1e-14));
    CHECK(ap[1] == Approx(ap[3]).epsilon(1e-14));
    CHECK(ap[0] == Approx(ap[2] / 9.0).epsilon(1e-14));

    std::mt19937_64 rng(12);
    for (int t = 0; t < 500; ++t) {
        const auto hh = random_histogram(rng, 2 + t % 9, 30);
        const double tau = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
        const auto al = data_driven_allocation(hh, tau, c);
        double s = 0.0;
        for (double d : al) {
            CHECK(d > 0.0);
            s += d;
        }
        CHECK(s == Approx(0.05).margin(1e-12));
    }
}

TEST_CASE("band invariants", "[bands][property]") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 300; ++t) {
        const auto h = random_histogram(rng, 2 + t % 9, 50);
        const double tau = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
        const auto F = empirical_cdf(h);
        for (auto m : {BandMethod::dkwm, BandMethod::kl_naive, BandMethod::kl_data_driven}) {
            const auto b = make_band(m, h, Confidence(0.05), tau);
            CHECK(b.lower.back() == 1.0);
            CHECK(b.upper.back() == 1.0);
            for (std::size_t i = 0; i < b.k(); ++i) {
                CHECK(0.0 <= b.lower[i]);
                CHECK(b.lower[i] <= b.upper[i]);
                CHECK(b.upper[i] <= 1.0);
                CHECK(b.lower[i] <= F[i] + 1e-15);
                CHECK(F[i] <= b.upper[i] + 1e-15);
                if (i > 0 && m != BandMethod::dkwm) {
                    CHECK(b.lower[i] >= b.lower[i - 1]);
                    CHECK(b.upper[i] >= b.upper[i - 1]);
                }
            }
            const auto [lo, hi] = quantile_interval(b, QuantileQuery(tau, h.k()));
            const double emp = double(empirical_quantile_index(h, tau) - 1) / double(h.k() - 1);
            CHECK(lo <= emp);
            CHECK(emp <= hi);
        }
    }
}

TEST_CASE("quantile interval examples", "[bands]") {
    CdfBand exact{{0.2, 0.4, 0.6, 0.8, 1.0}, {0.2, 0.4, 0.6, 0.8, 1.0}, BandMethod::dkwm};
    const auto [lo, hi] = quantile_interval(exact, QuantileQuery(0.5, 5));
    CHECK(lo == 0.5);
    CHECK(hi == 0.5);
    CdfBand vacuous{{0, 0, 0, 0, 1}, {1, 1, 1, 1, 1}, BandMethod::dkwm};
    const auto [vlo, vhi] = quantile_interval(vacuous, QuantileQuery(0.3, 5));
    CHECK(vlo == 0.0);
    CHECK(vhi == 1.0);
}

TEST_CASE("quantile interval matches enumeration over lattice CDFs", "[bands][oracle]") {
    const Histogram h({40, 40, 40, 40, 40});
    for (auto m : {BandMethod::dkwm, BandMethod::kl_naive, BandMethod::kl_data_driven})
        for (double tau : {0.1, 0.5, 0.9}) {
            const auto b = make_band(m, h, Confidence(0.05), tau);
            const auto got = quantile_interval(b, QuantileQuery(tau, 5));
            const auto ref = enumerate_quantile_range(b, tau, 1000);
            INFO(to_string(m) << " tau=" << tau);
            CHECK(got.first == ref.first);
            CHECK(got.second == ref.second);
        }
}

TEST_CASE("band width metric", "[bands]") {
    CdfBand b{{0.1, 0.2, 0.3, 1.0}, {0.2, 0.3, 0.4, 1.0}, BandMethod::dkwm};
    CHECK(band_width_at(b, 0.95) == 0.0);
    CdfBand one{{0.0, 0.4, 0.9, 1.0}, {0.0, 0.6, 1.0, 1.0}, BandMethod::dkwm};
    CHECK(band_width_at(one, 0.5) == Approx(0.1));

    // DKWM, uniform k=5, n=200: at tau = 0.5 no point straddles (|F - 0.5| = 0.1 > z)
    const auto d = dkwm_band(Histogram({40, 40, 40, 40, 40}), Confidence(0.05));
    const double z = std::sqrt(std::log(40.0) / 400.0);
    CHECK(band_width_at(d, 0.5) == 0.0);
    // at tau = 0.45 only F = 0.4 straddles, at distance 0.05 from tau
    CHECK(band_width_at(d, 0.45) == Approx(std::min(0.4 + z - 0.45, 0.45 - (0.4 - z))).epsilon(1e-13));
    // at tau = 0.28 only F = 0.2 straddles, near its upper edge
    CHECK(band_width_at(d, 0.28) == Approx(0.2 + z - 0.28).epsilon(1e-13));
    // two straddling points add up
    CdfBand two{{0.1, 0.35, 1.0}, {0.6, 0.7, 1.0}, BandMethod::dkwm};
    CHECK(band_width_at(two, 0.5) == Approx(0.1 + 0.15));
}

TEST_CASE("bands cover the true CDF", "[bands][coverage]") {
    const EmpiricalDistribution truth({0.2, 0.2, 0.2, 0.2, 0.2});
    const auto F = cdf_of(truth.probs());
    const int trials = 2000;
    int hits[3] = {0, 0, 0};
    std::mt19937_64 rng(55);
    for (int t = 0; t < trials; ++t) {
        const auto h = sample_histogram(truth, 200, rng);
        int i = 0;
        for (auto m : {BandMethod::dkwm, BandMethod::kl_naive, BandMethod::kl_data_driven})
            hits[i++] += make_band(m, h, Confidence(0.05), 0.5).contains_cdf(F);
    }
    const double floor = 0.95 - 3.0 * std::sqrt(0.05 * 0.95 / trials);
    for (int i = 0; i < 3; ++i) CHECK(double(hits[i]) / trials >= floor);
}

TEST_CASE("data-driven bands are narrower at extreme quantiles", "[bands][property]") {
    for (std::size_t k : {5u, 10u})
        for (double tau : {0.7, 0.9}) {
            const EmpiricalDistribution truth(std::vector<double>(k, 1.0 / double(k)));
            std::mt19937_64 rng(k * 100 + std::uint64_t(tau * 10));
            double naive = 0.0, dd = 0.0;
            for (int r = 0; r < 20; ++r) {
                const auto h = sample_histogram(truth, 1000, rng);
                naive += band_width_at(make_band(BandMethod::kl_naive, h, Confidence(0.05), tau), tau);
                dd += band_width_at(make_band(BandMethod::kl_data_driven, h, Confidence(0.05), tau), tau);
            }
            INFO("k=" << k << " tau=" << tau);
            CHECK(dd <= naive);
        }
}
