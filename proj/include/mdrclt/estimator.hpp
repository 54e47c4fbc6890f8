#pragma once

// K-fold cross-validated estimate of the prediction error of the MDR rule,
// together with the plug-in variance and covariance estimates used for
// self-normalization.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdrclt/error.hpp"
#include "mdrclt/linalg.hpp"
#include "mdrclt/model.hpp"

namespace mdrclt {

// Record numbers are 1-based throughout this header: record j is data.point(j - 1).
using IndexSet = std::vector<std::size_t>;

// Contiguous block of record numbers [first, last].
struct Fold {
    std::size_t first;
    std::size_t last;

    std::size_t size() const noexcept { return last - first + 1; }
    bool contains(std::size_t j) const noexcept { return j >= first && j <= last; }

    IndexSet indices() const {
        IndexSet w(size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = first + i;
        return w;
    }

    bool operator==(const Fold&) const = default;
};

class FoldPartition {
public:
    std::size_t n_records() const noexcept { return n_; }
    std::size_t k() const noexcept { return folds_.size(); }
    const Fold& fold(std::size_t k) const { return folds_.at(k - 1); } // k is 1-based
    std::span<const Fold> folds() const noexcept { return folds_; }

    // Record numbers outside fold k.
    IndexSet complement(std::size_t k) const {
        const Fold& f = fold(k);
        IndexSet w;
        w.reserve(n_ - f.size());
        for (std::size_t j = 1; j <= n_; ++j)
            if (!f.contains(j)) w.push_back(j);
        return w;
    }

private:
    friend FoldPartition fold_partition(std::size_t, std::size_t);
    std::size_t n_ = 0;
    std::vector<Fold> folds_;
};

// S_k = {(k-1)[N/K]+1, ..., k[N/K]} for k < K; S_K runs through N.
inline FoldPartition fold_partition(std::size_t n_records, std::size_t k_folds) {
    if (k_folds < 2) throw std::invalid_argument("fold count K must be >= 2");
    if (k_folds > n_records) throw std::invalid_argument("fold count K must not exceed N");
    FoldPartition p;
    p.n_ = n_records;
    const std::size_t base = n_records / k_folds;
    for (std::size_t k = 1; k <= k_folds; ++k) {
        const std::size_t last = k < k_folds ? k * base : n_records;
        p.folds_.push_back(Fold{(k - 1) * base + 1, last});
    }
    return p;
}

// eps_N = c0 * N^(-beta). Both limits eps_N -> 0 and sqrt(N) eps_N -> inf hold
// exactly when c0 > 0 and 0 < beta < 1/2.
class EpsilonSchedule {
public:
    EpsilonSchedule() = default;
    EpsilonSchedule(double c0, double beta) : c0_(c0), beta_(beta) {
        if (!(c0 > 0.0) || !std::isfinite(c0)) throw std::invalid_argument("eps c0 must be > 0");
        if (!(beta > 0.0 && beta < 0.5)) {
            throw std::invalid_argument("eps beta must lie in (0, 1/2)");
        }
    }

    double c0() const noexcept { return c0_; }
    double beta() const noexcept { return beta_; }
    double at(std::size_t n_records) const {
        return c0_ * std::pow(static_cast<double>(n_records), -beta_);
    }

private:
    double c0_ = 1.0;
    double beta_ = 0.25;
};

namespace detail {

inline void check_indices(const Dataset& data, std::span<const std::size_t> w) {
    for (std::size_t j : w) {
        if (j < 1 || j > data.size()) {
            throw std::invalid_argument("record number " + std::to_string(j) + " outside 1.." +
                                        std::to_string(data.size()));
        }
    }
}

inline double ratio_or_zero(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace detail

// Empirical P(Y=1 | X in C_subset(u)) over records W; 0 when no record of W
// falls in the cylinder.
inline double estimate_cond_prob(const Dataset& data, std::span<const std::size_t> w,
                                 const FactorSubset& subset, std::span<const int> u) {
    detail::check_indices(data, w);
    subset.check_within(data.space());
    const std::size_t target = cell_index(data.space(), subset, u);
    std::size_t in_cell = 0;
    std::size_t positive = 0;
    for (std::size_t j : w) {
        if (cell_of(data.space(), subset, data.point(j - 1)) != target) continue;
        ++in_cell;
        if (data.label(j - 1) == Label::Positive) ++positive;
    }
    return detail::ratio_or_zero(positive, in_cell);
}

// psi_hat_{N,k}(y) = 1 / P_hat_{S_k}(Y=y), set to 0 when the fold has no label y.
inline double psi_hat_fold(const Dataset& data, const Fold& fold, Label y) {
    if (fold.size() == 0 || fold.last > data.size() || fold.first < 1) {
        throw std::invalid_argument("fold must be a nonempty range of record numbers");
    }
    std::size_t hits = 0;
    for (std::size_t j = fold.first; j <= fold.last; ++j)
        if (data.label(j - 1) == y) ++hits;
    if (hits == 0) return 0.0;
    return static_cast<double>(fold.size()) / static_cast<double>(hits);
}

// Plug-in threshold P_hat_W(Y=1); matches gamma(psi) = P(Y=1) of the Velez
// penalty with c = 1.
inline double gamma_hat(const Dataset& data, std::span<const std::size_t> w) {
    if (w.empty()) throw std::invalid_argument("gamma_hat needs a nonempty index set");
    detail::check_indices(data, w);
    std::size_t positive = 0;
    for (std::size_t j : w)
        if (data.label(j - 1) == Label::Positive) ++positive;
    return detail::ratio_or_zero(positive, w.size());
}

// Regularized MDR rule: +1 iff P_hat_W(Y=1 | cylinder of x) > gamma_hat_W + eps.
inline Label predict_regularized(std::span<const int> x, const Dataset& data,
                                 std::span<const std::size_t> w, const FactorSubset& subset,
                                 double eps) {
    if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
    if (!data.space().contains(x)) throw std::invalid_argument("factor vector outside the space");
    std::vector<int> u;
    u.reserve(subset.size());
    for (int k : subset.indices()) u.push_back(x[static_cast<std::size_t>(k - 1)]);
    const double p = estimate_cond_prob(data, w, subset, u);
    return p > gamma_hat(data, w) + eps ? Label::Positive : Label::Negative;
}

namespace detail {

// Per-cylinder record counts over a set of records.
struct CellCounts {
    std::vector<std::size_t> total;
    std::vector<std::size_t> positive;
    std::size_t records = 0;
    std::size_t positives = 0;

    explicit CellCounts(std::size_t cells) : total(cells, 0), positive(cells, 0) {}

    void add(std::size_t cell, Label y) {
        ++total[cell];
        ++records;
        if (y == Label::Positive) {
            ++positive[cell];
            ++positives;
        }
    }

    CellCounts minus(const CellCounts& other) const {
        CellCounts out(total.size());
        for (std::size_t c = 0; c < total.size(); ++c) {
            out.total[c] = total[c] - other.total[c];
            out.positive[c] = positive[c] - other.positive[c];
        }
        out.records = records - other.records;
        out.positives = positives - other.positives;
        return out;
    }

    // Same arithmetic as predict_regularized, evaluated for every cell at once.
    std::vector<Label> decisions(double eps) const {
        const double threshold = ratio_or_zero(positives, records) + eps;
        std::vector<Label> out(total.size());
        for (std::size_t c = 0; c < total.size(); ++c) {
            out[c] = ratio_or_zero(positive[c], total[c]) > threshold ? Label::Positive
                                                                       : Label::Negative;
        }
        return out;
    }
};

inline std::vector<std::size_t> record_cells(const Dataset& data, const FactorSubset& subset) {
    std::vector<std::size_t> cells(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) cells[i] = cell_of(data.space(), subset, data.point(i));
    return cells;
}

} // namespace detail

enum class PenaltyMode {
    FoldEstimated, // psi_hat_{N,k} from the fold's own label frequencies
    Unit,          // psi = 1, diagnostic only
};

struct ErrEstimate {
    double value = 0.0;
    double eps = 0.0;
    // Per fold k (0-based here), slot 0 is y = -1 and slot 1 is y = +1.
    std::vector<std::array<double, 2>> psi_hat;
    std::vector<std::array<std::size_t, 2>> misclassified;
};

// Err_hat_K = 2 sum_y (1/K) sum_k sum_{j in S_k} psi_hat(y, S_k) 1{Y^j=y, f_PA(X^j) != y} / #S_k
// with f_PA trained on the complement of S_k.
inline ErrEstimate estimated_prediction_error(const Dataset& data, std::size_t k_folds,
                                              const FactorSubset& subset,
                                              const EpsilonSchedule& schedule,
                                              PenaltyMode mode = PenaltyMode::FoldEstimated) {
    subset.check_within(data.space());
    const FoldPartition partition = fold_partition(data.size(), k_folds);
    const std::size_t cells = cell_count(data.space(), subset);
    const std::vector<std::size_t> cell = detail::record_cells(data, subset);

    detail::CellCounts all(cells);
    for (std::size_t i = 0; i < data.size(); ++i) all.add(cell[i], data.label(i));

    ErrEstimate est;
    est.eps = schedule.at(data.size());
    est.psi_hat.resize(k_folds);
    est.misclassified.resize(k_folds);

    for (std::size_t k = 1; k <= k_folds; ++k) {
        const Fold& fold = partition.fold(k);
        detail::CellCounts in_fold(cells);
        for (std::size_t j = fold.first; j <= fold.last; ++j) in_fold.add(cell[j - 1], data.label(j - 1));
        const std::vector<Label> rule = all.minus(in_fold).decisions(est.eps);

        auto& miss = est.misclassified[k - 1];
        miss = {0, 0};
        for (std::size_t j = fold.first; j <= fold.last; ++j) {
            const Label y = data.label(j - 1);
            if (rule[cell[j - 1]] != y) ++miss[slot(y)];
        }
        for (Label y : kLabels) {
            est.psi_hat[k - 1][slot(y)] =
                mode == PenaltyMode::Unit ? 1.0 : psi_hat_fold(data, fold, y);
        }
    }

    double total = 0.0;
    for (Label y : kLabels) {
        double over_folds = 0.0;
        for (std::size_t k = 1; k <= k_folds; ++k) {
            const double size = static_cast<double>(partition.fold(k).size());
            over_folds += est.psi_hat[k - 1][slot(y)] *
                          static_cast<double>(est.misclassified[k - 1][slot(y)]) / size;
        }
        total += over_folds / static_cast<double>(k_folds);
    }
    est.value = 2.0 * total;
    return est;
}

namespace detail {

// Plug-in influence values V_hat^j for every record: the rule is trained on
// the whole sample and every probability in V is replaced by its empirical
// frequency.
inline std::vector<double> empirical_influence(const Dataset& data, const FactorSubset& subset,
                                               double eps) {
    const std::vector<std::size_t> cell = record_cells(data, subset);
    CellCounts all(cell_count(data.space(), subset));
    for (std::size_t i = 0; i < data.size(); ++i) all.add(cell[i], data.label(i));
    const std::vector<Label> rule = all.decisions(eps);

    std::array<std::size_t, 2> n_y{0, 0};
    std::array<std::size_t, 2> wrong_y{0, 0};
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Label y = data.label(i);
        ++n_y[slot(y)];
        if (rule[cell[i]] != y) ++wrong_y[slot(y)];
    }
    if (n_y[0] == 0 || n_y[1] == 0) {
        throw DegenerateError("sample contains a single label class");
    }
    const double n = static_cast<double>(data.size());
    std::array<double, 2> weight{};
    std::array<double, 2> centre{};
    for (std::size_t s = 0; s < 2; ++s) {
        weight[s] = 2.0 * n / static_cast<double>(n_y[s]);
        centre[s] = static_cast<double>(wrong_y[s]) / static_cast<double>(n_y[s]);
    }
    std::vector<double> v(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t s = slot(data.label(i));
        const double wrong = rule[cell[i]] != data.label(i) ? 1.0 : 0.0;
        v[i] = weight[s] * (wrong - centre[s]);
    }
    return v;
}

inline void check_sizes(const Dataset& data, std::size_t k_folds) {
    if (k_folds < 2 || k_folds > data.size()) {
        throw std::invalid_argument("need 2 <= K <= N");
    }
}

} // namespace detail

// Plug-in estimate of sigma: standard deviation of V_hat^j over the sample.
inline double sigma_hat(const Dataset& data, std::size_t k_folds, const FactorSubset& subset,
                        const EpsilonSchedule& schedule) {
    detail::check_sizes(data, k_folds);
    subset.check_within(data.space());
    const std::vector<double> v = detail::empirical_influence(data, subset, schedule.at(data.size()));
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

struct CovarianceEstimate {
    Matrix cov;
    std::optional<Matrix> inv_sqrt; // empty when cov is near-singular
};

// Empirical covariance of (V_hat(alpha_1)^j, ..., V_hat(alpha_s)^j) and, when
// every eigenvalue clears kNearSingularEigenvalue, its inverse square root.
inline CovarianceEstimate covariance_hat(const Dataset& data, std::size_t k_folds,
                                         std::span<const FactorSubset> subsets,
                                         const EpsilonSchedule& schedule) {
    detail::check_sizes(data, k_folds);
    if (subsets.empty()) throw std::invalid_argument("need at least one subset");
    const double eps = schedule.at(data.size());
    const std::size_t s = subsets.size();
    std::vector<std::vector<double>> v;
    v.reserve(s);
    for (const FactorSubset& sub : subsets) {
        sub.check_within(data.space());
        v.push_back(detail::empirical_influence(data, sub, eps));
    }
    const double n = static_cast<double>(data.size());
    std::vector<double> mean(s, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
        for (double x : v[i]) mean[i] += x;
        mean[i] /= n;
    }
    CovarianceEstimate out{Matrix(s), std::nullopt};
    for (std::size_t a = 0; a < s; ++a) {
        for (std::size_t b = a; b < s; ++b) {
            double acc = 0.0;
            for (std::size_t j = 0; j < data.size(); ++j) acc += (v[a][j] - mean[a]) * (v[b][j] - mean[b]);
            out.cov(a, b) = out.cov(b, a) = acc / n;
        }
    }
    try {
        out.inv_sqrt = inverse_sqrt(out.cov);
    } catch (const DegenerateError&) {
        out.inv_sqrt.reset();
    }
    return out;
}

} // namespace mdrclt
