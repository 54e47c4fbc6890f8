#pragma once

// Command implementations for the mdrclt tool. `run_cli` never exits the
// process, so tests can drive it with captured streams.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mdrclt/error.hpp"
#include "mdrclt/estimator.hpp"
#include "mdrclt/io.hpp"
#include "mdrclt/mcverify.hpp"
#include "mdrclt/model.hpp"
#include "mdrclt/oracle.hpp"
#include "mdrclt/presets.hpp"
#include "mdrclt/search.hpp"

namespace mdrclt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDegenerate = 2;

struct ScenarioConfig {
    std::string dist_path;
    std::string preset;       // "name" or "name:key=value,..."
    std::optional<int> n;
    std::optional<int> q;
    std::string data_path;    // dataset CSV (search only)
    std::size_t n_records = 2000;
    std::size_t k_folds = 5;
    double eps_c0 = 1.0;
    double eps_beta = 0.25;
    int r = 2;
    std::string subsets;      // "1,2;1,3"
    std::size_t replications = 1000;
    std::uint64_t seed = 1;
    std::string out_path;
    unsigned workers = 1;
    bool histogram = false;

    EpsilonSchedule schedule() const { return EpsilonSchedule(eps_c0, eps_beta); }
};

// "1,2;1,3" -> {{1,2},{1,3}}.
inline std::vector<FactorSubset> parse_subsets(const std::string& text) {
    std::vector<FactorSubset> out;
    std::stringstream groups(text);
    std::string group;
    while (std::getline(groups, group, ';')) {
        if (!group.empty() && group.back() == ',') {
            throw std::invalid_argument("malformed subset list '" + text + "'");
        }
        std::vector<int> idx;
        std::stringstream items(group);
        std::string item;
        while (std::getline(items, item, ',')) {
            std::size_t used = 0;
            int v = 0;
            try {
                v = std::stoi(item, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (item.empty() || used != item.size()) {
                throw std::invalid_argument("malformed subset list '" + text + "'");
            }
            idx.push_back(v);
        }
        if (idx.empty()) throw std::invalid_argument("empty subset in '" + text + "'");
        out.emplace_back(std::move(idx));
    }
    if (out.empty()) throw std::invalid_argument("no subsets given");
    return out;
}

struct Scenario {
    JointDistribution dist;
    json descriptor;
    std::optional<FactorSubset> known; // significant by construction (presets only)
};

inline Scenario load_scenario(const ScenarioConfig& c) {
    if (c.dist_path.empty() == c.preset.empty()) {
        throw std::invalid_argument("exactly one of --dist and --preset is required");
    }
    if (!c.dist_path.empty()) {
        if (c.n || c.q) throw std::invalid_argument("--n/--q apply to presets only");
        std::ifstream in(c.dist_path);
        if (!in) throw std::invalid_argument("cannot open " + c.dist_path);
        return Scenario{read_distribution(in), json{{"dist", c.dist_path}}, std::nullopt};
    }
    const std::size_t colon = c.preset.find(':');
    const Preset preset = parse_preset(c.preset.substr(0, colon));
    PresetParams p;
    if (colon != std::string::npos) apply_preset_overrides(p, c.preset.substr(colon + 1));
    if (c.n) p.n = *c.n;
    if (c.q) p.q = *c.q;
    json desc{{"preset", preset_name(preset)}, {"n", p.n}, {"q", p.q}};
    switch (preset) {
    case Preset::Null: desc["prevalence"] = p.prevalence; break;
    case Preset::SingleFactor: desc["low"] = p.low; desc["high"] = p.high; break;
    case Preset::PairEpistasis:
        desc["low"] = p.low;
        desc["high"] = p.high;
        desc["pattern"] = p.pattern;
        break;
    case Preset::Independent:
        desc["prevalence"] = p.prevalence;
        desc["informative"] = p.informative;
        desc["odds"] = p.odds;
        break;
    }
    return Scenario{generate_scenario(preset, p), std::move(desc), known_significant(preset, p)};
}

// Writes to --out when given, otherwise to `fallback`.
inline void emit(const ScenarioConfig& c, std::ostream& fallback, const std::string& text) {
    if (c.out_path.empty()) {
        fallback << text;
        return;
    }
    std::ofstream f(c.out_path);
    if (!f) throw std::invalid_argument("cannot write " + c.out_path);
    f << text;
}

inline int cmd_simulate(const ScenarioConfig& c, std::ostream& out) {
    const Scenario s = load_scenario(c);
    std::ostringstream csv;
    write_csv(csv, sample(s.dist, c.n_records, c.seed));
    emit(c, out, csv.str());
    return kExitOk;
}

inline int cmd_search(const ScenarioConfig& c, std::ostream& out, std::ostream& err) {
    std::optional<Dataset> data;
    if (!c.data_path.empty()) {
        if (!c.dist_path.empty() || !c.preset.empty()) {
            throw std::invalid_argument("--data excludes --dist and --preset");
        }
        std::ifstream in(c.data_path);
        if (!in) throw std::invalid_argument("cannot open " + c.data_path);
        IngestResult ing = ingest_csv(in, c.q);
        if (ing.warning) err << "warning: " << *ing.warning << '\n';
        data = std::move(ing.data);
    } else {
        data = sample(load_scenario(c).dist, c.n_records, c.seed);
    }
    const SearchReport report = rank_subsets(*data, c.r, c.k_folds, c.schedule());
    const std::string doc = search_report_to_json(report).dump(2) + "\n";
    if (c.out_path.empty()) {
        out << doc;
        err << search_report_table(report);
    } else {
        emit(c, out, doc);
        out << search_report_table(report);
    }
    return kExitOk;
}

inline int cmd_clt_verify(const ScenarioConfig& c, std::ostream& out, std::ostream& err) {
    const Scenario s = load_scenario(c);
    std::vector<FactorSubset> subsets;
    if (!c.subsets.empty()) subsets = parse_subsets(c.subsets);
    else if (s.known) subsets.push_back(*s.known);
    else throw std::invalid_argument("--subsets is required with --dist");

    ReplicationConfig rc;
    rc.n_records = c.n_records;
    rc.k_folds = c.k_folds;
    rc.schedule = c.schedule();
    rc.replications = c.replications;
    rc.master_seed = c.seed;
    rc.workers = c.workers;
    std::vector<ReplicationResult> results;
    const CltReport report = verify_clt(s.dist, subsets, rc, &results);
    json doc = clt_report_to_json(report, s.descriptor);
    if (report.replications < kMinReplicationsForChecks) {
        doc["note"] = "fewer than " + std::to_string(kMinReplicationsForChecks) +
                      " replications; checks are not meaningful";
    }
    emit(c, out, doc.dump(2) + "\n");
    std::ostream& human = c.out_path.empty() ? err : out;
    for (std::size_t i = 0; i < subsets.size(); ++i) {
        const UnivariateCheck& u = report.univariate[i];
        human << subsets[i].to_string() << ": mean Z " << u.mean << ", var Z " << u.variance
              << ", oracle sigma^2 " << u.oracle_sigma2
              << (!u.evaluated ? "  (not evaluated)" : u.passed() ? "  PASS" : "  FAIL") << '\n';
        if (c.histogram && !u.degenerate) {
            std::vector<double> t;
            for (const ReplicationResult& r : results) t.push_back(r.z[i] / std::sqrt(u.oracle_sigma2));
            human << text_histogram(t);
        }
    }
    if (report.multivariate && report.replications >= kMinReplicationsForChecks) {
        human << "covariance max |diff| " << report.multivariate->max_abs_diff << " (limit "
              << report.multivariate->cov_limit << ")" << (report.multivariate->passed() ? "  PASS" : "  FAIL")
              << '\n';
    }
    return kExitOk;
}

inline int cmd_oracle(const ScenarioConfig& c, std::ostream& out) {
    const Scenario s = load_scenario(c);
    const FactorSpace& space = s.dist.space();
    std::vector<FactorSubset> subsets;
    if (!c.subsets.empty()) subsets = parse_subsets(c.subsets);
    else subsets.push_back(FactorSubset::full(space.n()));
    for (const FactorSubset& a : subsets) a.check_within(space);

    const PenaltyFunction psi = velez_penalty(s.dist);
    json astar = json::array();
    for (std::size_t x : optimal_set_astar(s.dist, psi)) astar.push_back(space.point(x));
    json per_subset = json::array();
    for (const FactorSubset& a : subsets) {
        per_subset.push_back({{"subset", subset_to_json(a)},
                              {"err", err(s.dist, psi, optimal_function(s.dist, psi, a))},
                              {"significant", is_significant(s.dist, a)},
                              {"sigma2", asymptotic_variance(s.dist, a)}});
    }
    const Predictor fstar = optimal_function(s.dist, psi, FactorSubset::full(space.n()));
    json doc{{"scenario", s.descriptor},
             {"psi", {psi.psi_neg(), psi.psi_pos()}},
             {"gamma", gamma_threshold(psi)},
             {"astar", std::move(astar)},
             {"err_fstar", err(s.dist, psi, fstar)},
             {"subsets", std::move(per_subset)},
             {"C", matrix_to_json(asymptotic_covariance(s.dist, subsets))}};
    emit(c, out, doc.dump(2) + "\n");
    return kExitOk;
}

inline void add_source_options(CLI::App& app, ScenarioConfig& c) {
    app.add_option("--dist", c.dist_path, "distribution JSON file")->check(CLI::ExistingFile);
    app.add_option("--preset", c.preset,
                   "generator preset: independent, single-factor, pair-epistasis, null "
                   "(optionally name:key=value,...)");
    app.add_option("--n", c.n, "number of factors (preset)")->check(CLI::PositiveNumber);
    app.add_option("--q", c.q, "highest factor level")->check(CLI::PositiveNumber);
}

// Accepts values for which `ok` holds; unparsable text is rejected too.
template <class Pred>
CLI::Validator real_check(Pred ok, std::string message, std::string desc) {
    return CLI::Validator(
        [ok, message](std::string& v) {
            try {
                std::size_t used = 0;
                const double d = std::stod(v, &used);
                if (used == v.size() && ok(d)) return std::string();
            } catch (const std::exception&) {
            }
            return message;
        },
        std::move(desc));
}

inline void add_estimator_options(CLI::App& app, ScenarioConfig& c) {
    app.add_option("--K", c.k_folds, "number of folds")
        ->check(real_check([](double v) { return v >= 2.0; }, "K must be >= 2", ">= 2"));
    app.add_option("--eps-c0", c.eps_c0, "eps_N = c0 * N^-beta")
        ->check(real_check([](double v) { return v > 0.0; }, "c0 must be > 0", "> 0"));
    app.add_option("--eps-beta", c.eps_beta, "eps_N = c0 * N^-beta, beta in (0, 1/2)")
        ->check(real_check([](double v) { return v > 0.0 && v < 0.5; }, "beta must lie in (0, 1/2)",
                           "(0, 0.5)"));
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"MDR prediction-error estimation and CLT verification"};
    app.require_subcommand(1);
    ScenarioConfig c;

    CLI::App* simulate = app.add_subcommand("simulate", "sample a dataset and write it as CSV");
    add_source_options(*simulate, c);
    simulate->add_option("--N", c.n_records, "number of records")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", c.seed, "sampling seed");
    simulate->add_option("--out", c.out_path, "output CSV (default stdout)");

    CLI::App* search = app.add_subcommand("search", "rank every r-subset by Err_hat_K");
    add_source_options(*search, c);
    add_estimator_options(*search, c);
    search->add_option("--data", c.data_path, "dataset CSV")->check(CLI::ExistingFile);
    search->add_option("--N", c.n_records, "records to sample when no --data is given")
        ->check(CLI::PositiveNumber);
    search->add_option("--r", c.r, "subset size")->check(CLI::PositiveNumber);
    search->add_option("--seed", c.seed, "sampling seed");
    search->add_option("--out", c.out_path, "report JSON (default stdout)");

    CLI::App* clt = app.add_subcommand("clt-verify", "Monte Carlo check of the CLT for Err_hat_K");
    add_source_options(*clt, c);
    add_estimator_options(*clt, c);
    clt->add_option("--N", c.n_records, "records per replication")->check(CLI::PositiveNumber);
    clt->add_option("--subsets", c.subsets, "subsets, e.g. \"1,2;1,3\"");
    clt->add_option("--M", c.replications, "replications")->check(CLI::PositiveNumber);
    clt->add_option("--seed", c.seed, "master seed");
    clt->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
    clt->add_option("--out", c.out_path, "report JSON (default stdout)");
    clt->add_flag("--histogram", c.histogram, "print a text histogram of Z_N / sigma");

    CLI::App* oracle = app.add_subcommand("oracle", "exact quantities for a known distribution");
    add_source_options(*oracle, c);
    oracle->add_option("--subsets", c.subsets, "subsets, e.g. \"1,2;1,3\" (default: all factors)");
    oracle->add_option("--out", c.out_path, "report JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(c, out);
        if (*search) return cmd_search(c, out, err);
        if (*clt) return cmd_clt_verify(c, out, err);
        if (*oracle) return cmd_oracle(c, out);
    } catch (const DegenerateError& e) {
        err << "degenerate: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace mdrclt::cli
