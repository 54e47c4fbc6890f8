#pragma once

// Generator presets: joint tables whose significant factor subset is known by
// construction.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdrclt/model.hpp"

namespace mdrclt {

enum class Preset {
    Independent,   // factors conditionally independent given Y; first `informative` carry signal
    SingleFactor,  // P(Y=1 | X) depends on X1 only
    PairEpistasis, // P(Y=1 | X) depends on (X1, X2) only
    Null,          // Y independent of X
};

struct PresetParams {
    int n = 3;
    int q = 2;
    double prevalence = 0.4;          // null, independent
    double low = 0.1;                 // single-factor, pair-epistasis
    double high = 0.9;                // single-factor, pair-epistasis
    std::string pattern = "threshold"; // pair-epistasis: "threshold" or "xor"
    int informative = 2;              // independent
    double odds = 2.0;                // independent: level odds ratio among cases
};

inline Preset parse_preset(const std::string& name) {
    if (name == "independent") return Preset::Independent;
    if (name == "single-factor") return Preset::SingleFactor;
    if (name == "pair-epistasis") return Preset::PairEpistasis;
    if (name == "null") return Preset::Null;
    throw std::invalid_argument("unknown preset '" + name +
                                "' (expected independent, single-factor, pair-epistasis, null)");
}

inline std::string preset_name(Preset p) {
    switch (p) {
    case Preset::Independent: return "independent";
    case Preset::SingleFactor: return "single-factor";
    case Preset::PairEpistasis: return "pair-epistasis";
    case Preset::Null: return "null";
    }
    return "?";
}

// Applies "key=value,key=value" overrides.
inline void apply_preset_overrides(PresetParams& p, const std::string& overrides) {
    std::size_t pos = 0;
    while (pos < overrides.size()) {
        std::size_t end = overrides.find(',', pos);
        if (end == std::string::npos) end = overrides.size();
        const std::string item = overrides.substr(pos, end - pos);
        pos = end + 1;
        if (item.empty()) continue;
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("preset parameter '" + item + "' lacks '='");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        auto bad = [&] { return std::invalid_argument("bad value for preset parameter '" + key + "': " + val); };
        auto as_int = [&] {
            std::size_t used = 0;
            int v = 0;
            try { v = std::stoi(val, &used); } catch (const std::exception&) { throw bad(); }
            if (used != val.size()) throw bad();
            return v;
        };
        auto as_double = [&] {
            std::size_t used = 0;
            double v = 0.0;
            try { v = std::stod(val, &used); } catch (const std::exception&) { throw bad(); }
            if (used != val.size()) throw bad();
            return v;
        };
        if (key == "n") p.n = as_int();
        else if (key == "q") p.q = as_int();
        else if (key == "prevalence") p.prevalence = as_double();
        else if (key == "low") p.low = as_double();
        else if (key == "high") p.high = as_double();
        else if (key == "pattern") p.pattern = val;
        else if (key == "informative") p.informative = as_int();
        else if (key == "odds") p.odds = as_double();
        else throw std::invalid_argument("unknown preset parameter '" + key + "'");
    }
}

namespace detail {

inline void check_probability(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
}

// Uniform X with P(Y=1 | X=x) = h(x).
template <class Penetrance>
JointDistribution uniform_design(const FactorSpace& space, Penetrance h) {
    std::vector<double> probs(2 * space.size());
    const double px = 1.0 / static_cast<double>(space.size());
    for (std::size_t x = 0; x < space.size(); ++x) {
        const double p1 = h(x);
        probs[2 * x] = (1.0 - p1) * px;
        probs[2 * x + 1] = p1 * px;
    }
    return JointDistribution(space, std::move(probs));
}

} // namespace detail

inline JointDistribution generate_scenario(Preset preset, const PresetParams& p) {
    const FactorSpace space(p.n, p.q);
    switch (preset) {
    case Preset::Null: {
        detail::check_probability(p.prevalence, "prevalence");
        return detail::uniform_design(space, [&](std::size_t) { return p.prevalence; });
    }
    case Preset::SingleFactor: {
        detail::check_probability(p.low, "low");
        detail::check_probability(p.high, "high");
        if (p.low == p.high) throw std::invalid_argument("single-factor needs low != high");
        return detail::uniform_design(space, [&](std::size_t x) {
            return p.low + (p.high - p.low) * space.level(x, 1) / static_cast<double>(p.q);
        });
    }
    case Preset::PairEpistasis: {
        if (p.n < 2) throw std::invalid_argument("pair-epistasis needs n >= 2");
        detail::check_probability(p.low, "low");
        detail::check_probability(p.high, "high");
        if (p.low == p.high) throw std::invalid_argument("pair-epistasis needs low != high");
        bool xor_pattern = false;
        if (p.pattern == "xor") xor_pattern = true;
        else if (p.pattern != "threshold") throw std::invalid_argument("pattern must be threshold or xor");
        return detail::uniform_design(space, [&](std::size_t x) {
            const int s = space.level(x, 1) + space.level(x, 2);
            const bool risk = xor_pattern ? (s % 2 == 1) : (s >= p.q);
            return risk ? p.high : p.low;
        });
    }
    case Preset::Independent: {
        detail::check_probability(p.prevalence, "prevalence");
        if (p.informative < 1 || p.informative > p.n) {
            throw std::invalid_argument("independent needs 1 <= informative <= n");
        }
        if (!(p.odds > 0.0) || p.odds == 1.0) throw std::invalid_argument("odds must be > 0 and != 1");
        // Among cases an informative factor has level weights odds^v; among
        // controls every factor is uniform.
        std::vector<double> case_level(static_cast<std::size_t>(p.q + 1));
        double z = 0.0;
        for (int v = 0; v <= p.q; ++v) z += case_level[static_cast<std::size_t>(v)] = std::pow(p.odds, v);
        for (double& w : case_level) w /= z;
        const double uniform = 1.0 / static_cast<double>(p.q + 1);
        std::vector<double> probs(2 * space.size());
        for (std::size_t x = 0; x < space.size(); ++x) {
            double given_case = p.prevalence;
            double given_control = 1.0 - p.prevalence;
            for (int i = 1; i <= p.n; ++i) {
                const double lv = case_level[static_cast<std::size_t>(space.level(x, i))];
                given_case *= i <= p.informative ? lv : uniform;
                given_control *= uniform;
            }
            probs[2 * x] = given_control;
            probs[2 * x + 1] = given_case;
        }
        return JointDistribution(space, std::move(probs));
    }
    }
    throw std::invalid_argument("unknown preset");
}

// The subset that is significant by construction.
inline FactorSubset known_significant(Preset preset, const PresetParams& p) {
    switch (preset) {
    case Preset::Null:
    case Preset::SingleFactor: return FactorSubset({1});
    case Preset::PairEpistasis: return FactorSubset({1, 2});
    case Preset::Independent: return FactorSubset::full(p.informative);
    }
    throw std::invalid_argument("unknown preset");
}

} // namespace mdrclt
