// Intervals for the mean star rating of one product, from every method,
// followed by a 90% quantile interval.

#include <simplexci/simplexci.hpp>

#include <cstdio>

int main() {
    using namespace simplexci;

    const Histogram h({365, 308, 294, 67, 27});
    const auto f = LinearFunctional::canonical(h.k());
    const Confidence c(0.05);

    std::printf("n = %llu, mean = %.4f stars\n", static_cast<unsigned long long>(h.n()),
                to_stars(mean(normalize(h), f), h.k()));
    for (const auto& [method, name] : kMeanMethodNames) {
        const Interval iv = mean_interval(method, h, f, c);
        std::printf("%-20s [%.4f, %.4f] stars  (width %.4f)\n", std::string(name).c_str(), to_stars(iv.lo, h.k()),
                    to_stars(iv.hi, h.k()), iv.width());
    }

    const double tau = 0.9;
    const auto band = make_band(BandMethod::kl_data_driven, h, c, tau);
    const auto [lo, hi] = quantile_interval(band, QuantileQuery(tau, h.k()));
    std::printf("0.9-quantile in [%.0f, %.0f] stars\n", to_stars(lo, h.k()), to_stars(hi, h.k()));
}
