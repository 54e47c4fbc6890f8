#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mdrclt/estimator.hpp"
#include "mdrclt/model.hpp"

namespace mdrclt {

// All r-element subsets of {1..n} in lexicographic order.
inline std::vector<FactorSubset> enumerate_subsets(int n, int r) {
    if (n < 1 || r < 1) throw std::invalid_argument("need n >= 1 and r >= 1");
    if (r > n) throw std::invalid_argument("subset size r must not exceed n");
    std::vector<FactorSubset> out;
    std::vector<int> idx(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) idx[static_cast<std::size_t>(i)] = i + 1;
    for (;;) {
        out.emplace_back(idx);
        int i = r - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - r + i + 1) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < r; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

struct SearchEntry {
    FactorSubset subset;
    double err_hat;
};

struct SearchReport {
    int r = 0;
    std::size_t k_folds = 0;
    double eps = 0.0;                // eps_N used by every evaluation
    std::vector<SearchEntry> ranked; // ascending err_hat, ties lexicographic
    FactorSubset selected{std::vector<int>{1}};
};

struct SearchLimits {
    int max_n = 20;
    int max_r = 4;
};

// Evaluates Err_hat_K for every r-subset on the same sample and folds and
// selects the smallest. No multiplicity correction: every estimate is
// strongly consistent, so comparisons hold on a common full-measure event.
inline SearchReport rank_subsets(const Dataset& data, int r, std::size_t k_folds,
                                 const EpsilonSchedule& schedule, SearchLimits limits = {}) {
    const int n = data.space().n();
    if (n > limits.max_n) throw std::invalid_argument("n exceeds the exhaustive search cap");
    if (r > limits.max_r) throw std::invalid_argument("r exceeds the exhaustive search cap");
    SearchReport report;
    report.r = r;
    report.k_folds = k_folds;
    report.eps = schedule.at(data.size());
    for (FactorSubset& s : enumerate_subsets(n, r)) {
        const double v = estimated_prediction_error(data, k_folds, s, schedule).value;
        report.ranked.push_back(SearchEntry{std::move(s), v});
    }
    // Enumeration is already lexicographic, so a stable sort keeps that order on ties.
    std::stable_sort(report.ranked.begin(), report.ranked.end(),
                     [](const SearchEntry& a, const SearchEntry& b) { return a.err_hat < b.err_hat; });
    report.selected = report.ranked.front().subset;
    return report;
}

} // namespace mdrclt
