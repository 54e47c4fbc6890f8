#pragma once

// File formats: distribution JSON, dataset CSV, and JSON renderings of the
// search and CLT reports.

#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdrclt/linalg.hpp"
#include "mdrclt/mcverify.hpp"
#include "mdrclt/model.hpp"
#include "mdrclt/search.hpp"

namespace mdrclt {

using json = nlohmann::ordered_json;

// {"n": 2, "q": 1, "atoms": [{"x": [0, 1], "y": -1, "prob": 0.25}, ...]}
// Atoms that are omitted have probability 0.
inline JointDistribution read_distribution(std::istream& in) {
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("distribution file is not valid JSON: ") + e.what());
    }
    try {
        const FactorSpace space(doc.at("n").get<int>(), doc.at("q").get<int>());
        std::vector<Atom> atoms;
        for (const auto& a : doc.at("atoms")) {
            atoms.push_back(Atom{a.at("x").get<FactorVector>(), label_from_int(a.at("y").get<int>()),
                                 a.at("prob").get<double>()});
        }
        return JointDistribution::from_atoms(space, atoms);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed distribution file: ") + e.what());
    }
}

inline json distribution_to_json(const JointDistribution& dist) {
    json atoms = json::array();
    const FactorSpace& space = dist.space();
    for (std::size_t x = 0; x < space.size(); ++x) {
        for (Label y : kLabels) {
            const double p = dist.prob(x, y);
            if (p > 0.0) atoms.push_back({{"x", space.point(x)}, {"y", to_int(y)}, {"prob", p}});
        }
    }
    return json{{"n", space.n()}, {"q", space.q()}, {"atoms", std::move(atoms)}};
}

inline void write_distribution(std::ostream& out, const JointDistribution& dist) {
    out << distribution_to_json(dist).dump(2) << '\n';
}

struct IngestResult {
    Dataset data;
    int inferred_q = 0;
    std::optional<std::string> warning;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline int parse_int_cell(const std::string& cell, std::size_t line_no) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (cell.empty() || used != cell.size()) {
        throw std::invalid_argument("row " + std::to_string(line_no) + ": malformed cell '" + cell + "'");
    }
    return v;
}

} // namespace detail

// Header X1,...,Xn,Y; one record per row. q is the largest observed level
// (at least 1) unless `q_override` is given. Rows are numbered as file lines.
inline IngestResult ingest_csv(std::istream& in, std::optional<int> q_override = std::nullopt) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty CSV input");
    const std::vector<std::string> header = detail::split_csv_line(line);
    if (header.size() < 2 || header.back() != "Y") {
        throw std::invalid_argument("row 1: header must be X1,...,Xn,Y");
    }
    const std::size_t n = header.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (header[i] != "X" + std::to_string(i + 1)) {
            throw std::invalid_argument("row 1: expected column X" + std::to_string(i + 1) + ", got '" +
                                        header[i] + "'");
        }
    }

    std::vector<FactorVector> xs;
    std::vector<Label> ys;
    int max_level = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != n + 1) {
            throw std::invalid_argument("row " + std::to_string(line_no) + ": expected " +
                                        std::to_string(n + 1) + " cells, got " + std::to_string(cells.size()));
        }
        FactorVector x(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = detail::parse_int_cell(cells[i], line_no);
            if (x[i] < 0 || (q_override && x[i] > *q_override)) {
                throw std::invalid_argument("row " + std::to_string(line_no) + ": factor X" +
                                            std::to_string(i + 1) + " out of range");
            }
            max_level = std::max(max_level, x[i]);
        }
        const int y = detail::parse_int_cell(cells[n], line_no);
        if (y != 1 && y != -1) {
            throw std::invalid_argument("row " + std::to_string(line_no) + ": Y must be -1 or 1, got " +
                                        cells[n]);
        }
        xs.push_back(std::move(x));
        ys.push_back(label_from_int(y));
    }
    if (xs.empty()) throw std::invalid_argument("CSV input has no records");

    const int inferred = std::max(1, max_level);
    IngestResult out{Dataset(FactorSpace(static_cast<int>(n), q_override.value_or(inferred))), inferred,
                     std::nullopt};
    if (q_override && *q_override != inferred) {
        out.warning = "configured q=" + std::to_string(*q_override) + " differs from inferred q=" +
                      std::to_string(inferred);
    }
    out.data.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out.data.push_back(xs[i], ys[i]);
    return out;
}

inline void write_csv(std::ostream& out, const Dataset& data) {
    const int n = data.space().n();
    for (int i = 1; i <= n; ++i) out << 'X' << i << ',';
    out << "Y\n";
    for (std::size_t j = 0; j < data.size(); ++j) {
        const std::size_t point = data.point(j);
        for (int i = 1; i <= n; ++i) out << data.space().level(point, i) << ',';
        out << to_int(data.label(j)) << '\n';
    }
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.size(); ++j) row.push_back(number_or_null(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json subset_to_json(const FactorSubset& s) {
    return json(std::vector<int>(s.indices().begin(), s.indices().end()));
}

inline json search_report_to_json(const SearchReport& r) {
    json ranked = json::array();
    for (const SearchEntry& e : r.ranked) ranked.push_back({{"subset", subset_to_json(e.subset)}, {"err_hat", e.err_hat}});
    return json{{"r", r.r},
                {"K", r.k_folds},
                {"eps_n", r.eps},
                {"selected", subset_to_json(r.selected)},
                {"ranked", std::move(ranked)}};
}

inline std::string search_report_table(const SearchReport& r) {
    std::ostringstream out;
    out << "rank  subset            err_hat\n";
    std::size_t rank = 1;
    for (const SearchEntry& e : r.ranked) {
        std::string s = e.subset.to_string();
        s.resize(std::max<std::size_t>(s.size(), 16), ' ');
        out << (rank < 10 ? " " : "") << rank << "    " << s << "  " << e.err_hat << '\n';
        ++rank;
    }
    out << "selected " << r.selected.to_string() << " (eps_N = " << r.eps << ")\n";
    return out.str();
}

inline json univariate_to_json(const UnivariateCheck& c) {
    json j{{"replications", c.replications},
           {"evaluated", c.evaluated},
           {"oracle_sigma2", c.oracle_sigma2},
           {"mean_z", number_or_null(c.mean)},
           {"var_z", number_or_null(c.variance)},
           {"max_abs_z", c.max_abs_z},
           {"degenerate", c.degenerate}};
    if (c.degenerate) {
        j["pass_degenerate"] = c.pass_degenerate;
    } else {
        j["variance_ratio"] = number_or_null(c.variance_ratio);
        j["ks_oracle"] = number_or_null(c.ks_oracle);
        j["ks_oracle_limit"] = number_or_null(c.ks_limit);
        j["ks_self_normalized"] = number_or_null(c.ks_self);
        j["ks_self_normalized_limit"] = number_or_null(c.ks_self_limit);
        j["self_normalized_used"] = c.self_normalized_used;
        j["pass_ks_oracle"] = c.pass_ks_oracle;
        j["pass_ks_self_normalized"] = c.pass_ks_self;
        j["pass_variance"] = c.pass_variance;
    }
    j["passed"] = c.passed();
    return j;
}

inline json multivariate_to_json(const MultivariateCheck& c) {
    json ks = json::array();
    for (double d : c.ks_whitened) ks.push_back(number_or_null(d));
    return json{{"sample_cov", matrix_to_json(c.sample_cov)},
                {"sample_corr", matrix_to_json(c.sample_corr)},
                {"oracle_cov", matrix_to_json(c.oracle_cov)},
                {"max_abs_diff", c.max_abs_diff},
                {"cov_limit", c.cov_limit},
                {"pass_cov", c.pass_cov},
                {"ks_whitened", std::move(ks)},
                {"ks_whitened_limit", number_or_null(c.ks_limit)},
                {"whitened_used", c.whitened_used},
                {"whitening_skipped", c.whitening_skipped},
                {"whitening_ok", c.whitening_ok},
                {"pass_whitened", c.pass_whitened},
                {"passed", c.passed()}};
}

inline json clt_report_to_json(const CltReport& r, const json& scenario) {
    json subsets = json::array();
    for (std::size_t i = 0; i < r.subsets.size(); ++i) {
        json u = univariate_to_json(r.univariate.at(i));
        subsets.push_back({{"subset", subset_to_json(r.subsets[i])},
                           {"oracle_err", r.oracle_err.at(i)},
                           {"check", std::move(u)}});
    }
    json j{{"scenario", scenario},
           {"N", r.n_records},
           {"K", r.k_folds},
           {"eps_n", r.eps},
           {"M", r.replications},
           {"master_seed", r.master_seed},
           {"oracle_cov", matrix_to_json(r.oracle_cov)},
           {"subsets", std::move(subsets)}};
    if (r.multivariate) j["multivariate"] = multivariate_to_json(*r.multivariate);
    j["passed"] = r.passed();
    return j;
}

// Text histogram of values on [-4, 4] in 16 bins; for eyeballing normality.
inline std::string text_histogram(const std::vector<double>& values, int width = 50) {
    constexpr int kBins = 16;
    std::vector<std::size_t> counts(kBins, 0);
    std::size_t outside = 0;
    for (double v : values) {
        const int b = static_cast<int>(std::floor((v + 4.0) / 0.5));
        if (b < 0 || b >= kBins) ++outside;
        else ++counts[static_cast<std::size_t>(b)];
    }
    std::size_t peak = 1;
    for (std::size_t c : counts) peak = std::max(peak, c);
    std::ostringstream out;
    for (int b = 0; b < kBins; ++b) {
        const double lo = -4.0 + 0.5 * b;
        out << (lo < 0 ? "" : " ") << lo << (lo == std::floor(lo) ? ".0" : "") << " | "
            << std::string(counts[static_cast<std::size_t>(b)] * static_cast<std::size_t>(width) / peak, '#')
            << ' ' << counts[static_cast<std::size_t>(b)] << '\n';
    }
    if (outside) out << "outside [-4,4): " << outside << '\n';
    return out.str();
}

} // namespace mdrclt
