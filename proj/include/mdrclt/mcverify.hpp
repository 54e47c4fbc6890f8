#pragma once

// Monte Carlo harness for the central limit behaviour of Err_hat_K:
// replicated sampling, oracle- and self-standardized KS distances, and the
// multivariate covariance / whitening checks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mdrclt/estimator.hpp"
#include "mdrclt/linalg.hpp"
#include "mdrclt/model.hpp"
#include "mdrclt/oracle.hpp"
#include "mdrclt/random.hpp"

namespace mdrclt {

// KS critical value c(alpha)/sqrt(M) with c(0.01) = 1.63.
inline constexpr double kKsCoefficient = 1.63;
// Self-normalized and whitened statistics carry plug-in noise; their bound is
// 0.065 at M = 1000 and scales as 1/sqrt(M).
inline constexpr double kSelfNormalizedKsAt1000 = 0.065;
inline constexpr double kVarianceBand = 0.10;
inline constexpr double kCovarianceTolerance = 0.15;
inline constexpr double kDegenerateZ = 1e-9;
inline constexpr double kDegenerateSigma2 = 1e-14;
inline constexpr std::size_t kMinReplicationsForChecks = 100;

struct ReplicationConfig {
    std::size_t n_records = 2000;
    std::size_t k_folds = 5;
    EpsilonSchedule schedule{};
    std::size_t replications = 1000;
    std::uint64_t master_seed = 1;
    unsigned workers = 1;
};

struct ReplicationResult {
    std::size_t id = 0;             // 1-based replication number
    std::vector<double> z;          // sqrt(N) (Err_hat_K - Err(f^alpha)) per subset
    std::vector<double> sigma_hat;  // per subset
    std::optional<CovarianceEstimate> cov_hat; // present when s > 1
};

// Err(f^alpha) under the Velez penalty, for every subset.
inline std::vector<double> oracle_errors(const JointDistribution& dist,
                                         std::span<const FactorSubset> subsets) {
    const PenaltyFunction psi = velez_penalty(dist);
    std::vector<double> out;
    out.reserve(subsets.size());
    for (const FactorSubset& s : subsets) out.push_back(err(dist, psi, optimal_function(dist, psi, s)));
    return out;
}

inline ReplicationResult run_replication(const JointDistribution& dist,
                                         std::span<const FactorSubset> subsets,
                                         std::span<const double> oracle_err,
                                         const ReplicationConfig& cfg, std::size_t id) {
    const Dataset data = sample(dist, cfg.n_records, derive_seed(cfg.master_seed, id));
    const double root_n = std::sqrt(static_cast<double>(cfg.n_records));
    ReplicationResult r;
    r.id = id;
    for (std::size_t i = 0; i < subsets.size(); ++i) {
        const double e = estimated_prediction_error(data, cfg.k_folds, subsets[i], cfg.schedule).value;
        r.z.push_back(root_n * (e - oracle_err[i]));
        r.sigma_hat.push_back(sigma_hat(data, cfg.k_folds, subsets[i], cfg.schedule));
    }
    if (subsets.size() > 1) r.cov_hat = covariance_hat(data, cfg.k_folds, subsets, cfg.schedule);
    return r;
}

// Replication m samples with seed derive_seed(master_seed, m). Results are
// stored by index, so the output does not depend on the worker count.
inline std::vector<ReplicationResult> run_replications(const JointDistribution& dist,
                                                       std::span<const FactorSubset> subsets,
                                                       const ReplicationConfig& cfg) {
    if (subsets.empty()) throw std::invalid_argument("need at least one subset");
    if (cfg.replications < 1) throw std::invalid_argument("replication count M must be >= 1");
    for (const FactorSubset& s : subsets) s.check_within(dist.space());
    fold_partition(cfg.n_records, cfg.k_folds); // validates N and K up front

    const std::vector<double> oracle_err = oracle_errors(dist, subsets);
    std::vector<ReplicationResult> results(cfg.replications);
    std::vector<std::exception_ptr> errors(cfg.replications);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t m = next++; m < cfg.replications; m = next++) {
            try {
                results[m] = run_replication(dist, subsets, oracle_err, cfg, m + 1);
            } catch (...) {
                errors[m] = std::current_exception();
            }
        }
    };
    const unsigned n_workers =
        std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(cfg.replications)));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// sup_t |F_M(t) - Phi(t)| for the samples standardized by (mean, sd).
inline double ks_statistic(std::span<const double> samples, double mean, double sd) {
    if (samples.empty()) throw std::invalid_argument("KS statistic needs samples");
    if (!(sd > 0.0)) throw std::invalid_argument("KS statistic needs sd > 0");
    std::vector<double> z(samples.begin(), samples.end());
    for (double& v : z) v = (v - mean) / sd;
    std::sort(z.begin(), z.end());
    const double m = static_cast<double>(z.size());
    double d = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double f = normal_cdf(z[i]);
        d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
    }
    return d;
}

inline double ks_threshold(std::size_t m) { return kKsCoefficient / std::sqrt(static_cast<double>(m)); }

inline double self_normalized_ks_threshold(std::size_t m) {
    return kSelfNormalizedKsAt1000 * std::sqrt(1000.0 / static_cast<double>(m));
}

struct UnivariateCheck {
    std::size_t replications = 0;
    double oracle_sigma2 = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double max_abs_z = 0.0;
    bool degenerate = false;
    bool evaluated = false; // false when M is below kMinReplicationsForChecks

    double ks_oracle = NAN;
    double ks_self = NAN;
    std::size_t self_normalized_used = 0;
    double variance_ratio = NAN;
    double ks_limit = NAN;
    double ks_self_limit = NAN;

    bool pass_ks_oracle = false;
    bool pass_ks_self = false;
    bool pass_variance = false;
    bool pass_degenerate = false;

    bool passed() const {
        if (degenerate) return pass_degenerate;
        return pass_ks_oracle && pass_ks_self && pass_variance;
    }
};

inline std::vector<double> z_column(std::span<const ReplicationResult> results, std::size_t i) {
    std::vector<double> out;
    out.reserve(results.size());
    for (const auto& r : results) out.push_back(r.z.at(i));
    return out;
}

inline UnivariateCheck clt_check(std::span<const ReplicationResult> results, std::size_t subset_index,
                                 double oracle_sigma2) {
    if (results.empty()) throw std::invalid_argument("no replications to check");
    UnivariateCheck c;
    const std::vector<double> z = z_column(results, subset_index);
    const double m = static_cast<double>(z.size());
    c.replications = z.size();
    c.oracle_sigma2 = oracle_sigma2;
    for (double v : z) {
        c.mean += v;
        c.max_abs_z = std::max(c.max_abs_z, std::abs(v));
    }
    c.mean /= m;
    double ss = 0.0;
    for (double v : z) ss += (v - c.mean) * (v - c.mean);
    c.variance = z.size() > 1 ? ss / (m - 1.0) : NAN;
    c.evaluated = z.size() >= kMinReplicationsForChecks;

    if (oracle_sigma2 <= kDegenerateSigma2) {
        c.degenerate = true;
        c.pass_degenerate = c.max_abs_z < kDegenerateZ;
        return c;
    }

    c.ks_limit = ks_threshold(z.size());
    c.ks_self_limit = self_normalized_ks_threshold(z.size());
    c.ks_oracle = ks_statistic(z, 0.0, std::sqrt(oracle_sigma2));
    std::vector<double> t;
    t.reserve(z.size());
    for (const auto& r : results) {
        const double s = r.sigma_hat.at(subset_index);
        if (s > 0.0 && std::isfinite(s)) t.push_back(r.z[subset_index] / s);
    }
    c.self_normalized_used = t.size();
    if (!t.empty()) c.ks_self = ks_statistic(t, 0.0, 1.0);
    c.variance_ratio = c.variance / oracle_sigma2;

    c.pass_ks_oracle = c.ks_oracle < c.ks_limit;
    c.pass_ks_self = t.size() == z.size() && c.ks_self < c.ks_self_limit;
    c.pass_variance = std::abs(c.variance_ratio - 1.0) <= kVarianceBand;
    return c;
}

struct MultivariateCheck {
    std::size_t replications = 0;
    Matrix sample_cov;
    Matrix sample_corr;
    Matrix oracle_cov;
    double max_abs_diff = 0.0;
    double cov_limit = 0.0; // kCovarianceTolerance * max diag of the oracle matrix
    bool pass_cov = false;

    std::vector<double> ks_whitened;
    std::size_t whitened_used = 0;
    std::size_t whitening_skipped = 0;
    bool whitening_ok = false; // every replication had a usable C_hat^{-1/2}
    double ks_limit = NAN;
    bool pass_whitened = false;

    bool passed() const { return pass_cov && pass_whitened; }
};

inline MultivariateCheck multivariate_check(std::span<const ReplicationResult> results,
                                            const Matrix& oracle_cov) {
    if (results.empty()) throw std::invalid_argument("no replications to check");
    const std::size_t s = oracle_cov.size();
    if (s < 2) throw std::invalid_argument("multivariate check needs s >= 2");
    MultivariateCheck c;
    c.replications = results.size();
    c.oracle_cov = oracle_cov;
    const double m = static_cast<double>(results.size());

    std::vector<double> mean(s, 0.0);
    for (const auto& r : results)
        for (std::size_t i = 0; i < s; ++i) mean[i] += r.z.at(i);
    for (double& v : mean) v /= m;
    c.sample_cov = Matrix(s);
    for (const auto& r : results)
        for (std::size_t i = 0; i < s; ++i)
            for (std::size_t j = 0; j < s; ++j)
                c.sample_cov(i, j) += (r.z[i] - mean[i]) * (r.z[j] - mean[j]);
    double max_diag = 0.0;
    for (std::size_t i = 0; i < s; ++i) max_diag = std::max(max_diag, oracle_cov(i, i));
    c.sample_corr = Matrix(s);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j) {
            c.sample_cov(i, j) /= std::max(1.0, m - 1.0);
            c.max_abs_diff = std::max(c.max_abs_diff, std::abs(c.sample_cov(i, j) - oracle_cov(i, j)));
        }
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j) {
            const double d = std::sqrt(c.sample_cov(i, i) * c.sample_cov(j, j));
            c.sample_corr(i, j) = d > 0.0 ? c.sample_cov(i, j) / d : NAN;
        }
    c.cov_limit = kCovarianceTolerance * max_diag;
    c.pass_cov = c.max_abs_diff <= c.cov_limit;

    std::vector<std::vector<double>> whitened(s);
    for (const auto& r : results) {
        if (!r.cov_hat || !r.cov_hat->inv_sqrt) {
            ++c.whitening_skipped;
            continue;
        }
        const std::vector<double> w = r.cov_hat->inv_sqrt->apply(r.z);
        for (std::size_t i = 0; i < s; ++i) whitened[i].push_back(w[i]);
    }
    c.whitened_used = results.size() - c.whitening_skipped;
    c.whitening_ok = c.whitening_skipped == 0;
    c.ks_limit = self_normalized_ks_threshold(results.size());
    if (c.whitened_used > 0) {
        for (std::size_t i = 0; i < s; ++i) c.ks_whitened.push_back(ks_statistic(whitened[i], 0.0, 1.0));
        c.pass_whitened =
            c.whitening_ok && std::all_of(c.ks_whitened.begin(), c.ks_whitened.end(),
                                          [&](double d) { return d < c.ks_limit; });
    }
    return c;
}

// Empirical p-quantile of |Z_N| for subset i.
inline double abs_z_quantile(std::span<const ReplicationResult> results, std::size_t i, double p) {
    std::vector<double> a = z_column(results, i);
    if (a.empty()) throw std::invalid_argument("no replications");
    for (double& v : a) v = std::abs(v);
    std::sort(a.begin(), a.end());
    const double pos = p * static_cast<double>(a.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, a.size() - 1);
    return a[lo] + (pos - static_cast<double>(lo)) * (a[hi] - a[lo]);
}

struct CltReport {
    std::size_t n_records = 0;
    std::size_t k_folds = 0;
    double eps = 0.0;
    std::size_t replications = 0;
    std::uint64_t master_seed = 0;
    std::vector<FactorSubset> subsets;
    std::vector<double> oracle_err;
    Matrix oracle_cov;
    std::vector<UnivariateCheck> univariate;
    std::optional<MultivariateCheck> multivariate;

    bool passed() const {
        for (const auto& u : univariate)
            if (!u.passed()) return false;
        if (multivariate && !multivariate->passed()) return false;
        return true;
    }
};

// Full pipeline: replicate, then run the univariate check per subset and the
// multivariate check when s > 1 and the oracle matrix is nondegenerate.
inline CltReport verify_clt(const JointDistribution& dist, std::span<const FactorSubset> subsets,
                            const ReplicationConfig& cfg,
                            std::vector<ReplicationResult>* keep_results = nullptr) {
    CltReport rep;
    rep.n_records = cfg.n_records;
    rep.k_folds = cfg.k_folds;
    rep.eps = cfg.schedule.at(cfg.n_records);
    rep.replications = cfg.replications;
    rep.master_seed = cfg.master_seed;
    rep.subsets.assign(subsets.begin(), subsets.end());
    rep.oracle_err = oracle_errors(dist, subsets);
    rep.oracle_cov = asymptotic_covariance(dist, subsets);

    std::vector<ReplicationResult> results = run_replications(dist, subsets, cfg);
    for (std::size_t i = 0; i < subsets.size(); ++i)
        rep.univariate.push_back(clt_check(results, i, rep.oracle_cov(i, i)));
    if (subsets.size() > 1) rep.multivariate = multivariate_check(results, rep.oracle_cov);
    if (keep_results) *keep_results = std::move(results);
    return rep;
}

} // namespace mdrclt
