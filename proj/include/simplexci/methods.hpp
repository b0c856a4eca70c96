// methods.hpp
//
// String tags for every interval method, and one entry point that maps a
// histogram to the interval of the chosen method.
#pragma once

#include "interval_engine.hpp"
#include "quantile_bands.hpp"

#include <array>
#include <optional>
#include <string>

namespace simplexci {

enum class MeanMethod {
    hoeffding,
    empirical_bernstein,
    bernoulli_kl,
    sanov,
    polytope,
    csiszar,
    csiszar_sanov,
    csiszar_polytope,
};

inline constexpr std::array<std::pair<MeanMethod, std::string_view>, 8> kMeanMethodNames{{
    {MeanMethod::hoeffding, "hoeffding"},
    {MeanMethod::empirical_bernstein, "empirical-bernstein"},
    {MeanMethod::bernoulli_kl, "bernoulli-kl"},
    {MeanMethod::sanov, "sanov"},
    {MeanMethod::polytope, "polytope"},
    {MeanMethod::csiszar, "csiszar"},
    {MeanMethod::csiszar_sanov, "csiszar-sanov"},
    {MeanMethod::csiszar_polytope, "csiszar-polytope"},
}};

inline std::string_view to_string(MeanMethod m) {
    for (const auto& [tag, name] : kMeanMethodNames)
        if (tag == m) return name;
    return "unknown";
}

inline std::optional<MeanMethod> parse_mean_method(std::string_view s) {
    for (const auto& [tag, name] : kMeanMethodNames)
        if (name == s) return tag;
    return std::nullopt;
}

inline std::optional<BandMethod> parse_band_method(std::string_view s) {
    for (BandMethod m : {BandMethod::dkwm, BandMethod::kl_naive, BandMethod::kl_data_driven})
        if (to_string(m) == s) return m;
    return std::nullopt;
}

/// Smallest sample size at which the method is defined.
inline std::uint64_t minimum_sample_size(MeanMethod m) { return m == MeanMethod::empirical_bernstein ? 2 : 1; }

inline std::optional<RegionKind> region_kind_of(MeanMethod m) {
    switch (m) {
        case MeanMethod::sanov: return RegionKind::sanov_ball;
        case MeanMethod::polytope: return RegionKind::polytope;
        case MeanMethod::csiszar: return RegionKind::csiszar_level_set;
        case MeanMethod::csiszar_sanov: return RegionKind::csiszar_plus_sanov;
        case MeanMethod::csiszar_polytope: return RegionKind::csiszar_plus_polytope;
        default: return std::nullopt;
    }
}

inline Interval mean_interval(MeanMethod m, const EmpiricalDistribution& phat, const LinearFunctional& f,
                              Confidence c, const RegionOptions& opt = {}, const ProbeTrace& trace = {}) {
    switch (m) {
        case MeanMethod::hoeffding: return hoeffding_interval(phat, f, c);
        case MeanMethod::empirical_bernstein: return empirical_bernstein_interval(phat, f, c);
        case MeanMethod::bernoulli_kl: return bernoulli_kl_interval(phat, f, c);
        default: break;
    }
    return region_interval(make_region(*region_kind_of(m), phat, c, f, opt), trace);
}

inline Interval mean_interval(MeanMethod m, const Histogram& h, const LinearFunctional& f, Confidence c,
                              const RegionOptions& opt = {}, const ProbeTrace& trace = {}) {
    return mean_interval(m, normalize(h), f, c, opt, trace);
}

}  // namespace simplexci
