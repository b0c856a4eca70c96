// io.hpp
//
// JSON input/output. Requires nlohmann/json on the include path.
#pragma once

#include "harness.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace simplexci {

using json = nlohmann::json;

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
    }
}

inline Histogram histogram_from_json(const json& j) {
    if (!j.is_object() || !j.contains("counts") || !j["counts"].is_array())
        throw std::invalid_argument("histogram JSON needs a \"counts\" array");
    std::vector<std::uint64_t> counts;
    for (const auto& v : j["counts"]) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
            throw std::invalid_argument("counts must be nonnegative integers");
        counts.push_back(v.get<std::uint64_t>());
    }
    return Histogram(std::move(counts));
}

inline json to_json(const Histogram& h) { return json{{"counts", h.counts()}}; }

/// A width given as a number or as a fraction string such as "1/64".
inline double parse_width(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        const auto slash = s.find('/');
        try {
            if (slash == std::string::npos) return std::stod(s);
            return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
        } catch (const std::exception&) {
        }
    }
    throw std::invalid_argument("width must be a number or a fraction string");
}

inline ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    try {
        ExperimentConfig cfg;
        cfg.name = j.value("name", std::string("experiment"));
        const auto mode = j.value("mode", std::string("mean"));
        if (mode == "mean")
            cfg.mode = ExperimentMode::mean;
        else if (mode == "quantile")
            cfg.mode = ExperimentMode::quantile;
        else
            throw std::invalid_argument("mode must be \"mean\" or \"quantile\"");
        cfg.tau = j.value("tau", 0.5);

        if (j.contains("true_dist")) {
            // rounded published probabilities are accepted and renormalized
            auto p = j.at("true_dist").get<std::vector<double>>();
            if (std::fabs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) > 1e-2)
                throw std::invalid_argument("true_dist must sum to 1");
            cfg.true_dist = EmpiricalDistribution::normalized(std::move(p));
        } else if (j.contains("counts")) {
            cfg.true_dist = EmpiricalDistribution::normalized(j.at("counts").get<std::vector<double>>());
        } else {
            throw std::invalid_argument("config needs \"true_dist\" or \"counts\"");
        }

        cfg.weights = j.contains("weights") ? LinearFunctional(j.at("weights").get<std::vector<double>>())
                                            : LinearFunctional::canonical(cfg.true_dist.k());
        cfg.delta = Confidence(j.value("delta", 0.05));
        for (const auto& w : j.at("widths")) cfg.widths.push_back(parse_width(w));
        for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>(), cfg.mode));
        cfg.repetitions = j.value("repetitions", 20);
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad config: ") + e.what());
    }
}

inline json to_json(const ExperimentConfig& cfg) {
    json methods = json::array();
    for (const auto& m : cfg.methods) methods.push_back(method_name(m));
    json j{{"name", cfg.name},
           {"mode", cfg.mode == ExperimentMode::mean ? "mean" : "quantile"},
           {"true_dist", cfg.true_dist.probs()},
           {"delta", cfg.delta.delta()},
           {"widths", cfg.widths},
           {"methods", methods},
           {"repetitions", cfg.repetitions},
           {"seed", cfg.seed}};
    if (cfg.mode == ExperimentMode::mean)
        j["weights"] = cfg.weights.weights();
    else
        j["tau"] = cfg.tau;
    return j;
}

inline json to_json(const ExperimentResult& r) {
    json cells = json::array();
    for (const auto& c : r.cells)
        cells.push_back({{"method", c.method},
                         {"width", c.width},
                         {"n_avg", c.n_avg},
                         {"n_normalized", c.n_normalized},
                         {"per_repetition", c.per_repetition}});
    return json{{"config", to_json(r.config)},
                {"metadata",
                 {{"empirical_bernstein_delta_per_side", "delta/2"},
                  {"sample_size_search", "doubling from 2, then bisection; fresh sample per probe"},
                  {"normalization", "n_avg divided by the smallest n_avg at the same width"}}},
                {"results", cells}};
}

inline json to_json(const Interval& iv) { return json{{"lo", iv.lo}, {"hi", iv.hi}}; }

inline json to_json(const RegionSpec& r) {
    json j{{"kind", to_string(r.kind)},
           {"center", r.center.probs()},
           {"n", r.n()},
           {"delta", r.confidence.delta()},
           {"base_threshold", r.base_threshold},
           {"level_threshold", r.level_threshold},
           {"sanov_bound", to_string(r.options.sanov_bound)},
           {"level_share", r.options.level_share}};
    if (r.functional) j["weights"] = r.functional->weights();
    return j;
}

inline json to_json(const CdfBand& b) {
    return json{{"method", to_string(b.method)}, {"lower", b.lower}, {"upper", b.upper}};
}

}  // namespace simplexci
