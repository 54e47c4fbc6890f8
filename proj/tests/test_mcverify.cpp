#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mdrclt/mcverify.hpp"
#include "mdrclt/presets.hpp"

using namespace mdrclt;

namespace {

JointDistribution scenario_a() { return generate_scenario(Preset::PairEpistasis, PresetParams{}); }

ReplicationConfig config(std::size_t n, std::size_t m, std::uint64_t seed) {
    ReplicationConfig c;
    c.n_records = n;
    c.replications = m;
    c.master_seed = seed;
    return c;
}

} // namespace

TEST(NormalCdf, Values) {
    EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
    EXPECT_GT(normal_cdf(1.96), 0.9749);
    EXPECT_LT(normal_cdf(1.96), 0.9751);
    // Reference values to 16 digits.
    EXPECT_NEAR(normal_cdf(-3.0), 0.0013498980316300946, 1e-15);
    EXPECT_NEAR(normal_cdf(1.0), 0.8413447460685429, 1e-15);
    double prev = 0.0;
    for (double z = -8.0; z <= 8.0; z += 0.25) {
        EXPECT_GE(normal_cdf(z), prev);
        prev = normal_cdf(z);
    }
    EXPECT_EQ(normal_cdf(40.0), 1.0);
}

TEST(KsStatistic, Examples) {
    Engine eng(31);
    std::vector<double> z(1000);
    for (double& v : z) v = standard_normal(eng);
    EXPECT_LT(ks_statistic(z, 0.0, 1.0), ks_threshold(1000));
    EXPECT_NEAR(ks_threshold(1000), 0.0515, 1e-4);

    const std::vector<double> constant(50, 0.0);
    EXPECT_GE(ks_statistic(constant, 0.0, 1.0), 0.5);
    EXPECT_THROW(ks_statistic(std::vector<double>{}, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(ks_statistic(z, 0.0, 0.0), std::invalid_argument);
}

TEST(KsStatistic, SingleSampleClosedForm) {
    const std::vector<double> one{0.5};
    EXPECT_NEAR(ks_statistic(one, 0.0, 1.0), normal_cdf(0.5), 1e-15);
}

TEST(Thresholds, ScaleWithM) {
    EXPECT_DOUBLE_EQ(self_normalized_ks_threshold(1000), 0.065);
    EXPECT_NEAR(self_normalized_ks_threshold(4000), 0.0325, 1e-15);
}

TEST(RunReplications, SingleReplicationIsReproducible) {
    const JointDistribution a = scenario_a();
    const std::vector<FactorSubset> s{FactorSubset({1, 2})};
    const ReplicationConfig c = config(500, 1, 77);
    const auto r1 = run_replications(a, s, c);
    const auto r2 = run_replications(a, s, c);
    ASSERT_EQ(r1.size(), 1u);
    EXPECT_EQ(r1[0].id, 1u);
    EXPECT_EQ(r1[0].z, r2[0].z);

    const Dataset d = sample(a, 500, derive_seed(77, 1));
    const double e = estimated_prediction_error(d, 5, s[0], EpsilonSchedule()).value;
    const double truth = oracle_errors(a, s)[0];
    EXPECT_EQ(r1[0].z[0], std::sqrt(500.0) * (e - truth));
}

TEST(RunReplications, IndependentOfWorkerCount) {
    const JointDistribution a = scenario_a();
    const std::vector<FactorSubset> s{FactorSubset({1, 2}), FactorSubset({1, 3})};
    ReplicationConfig c = config(300, 24, 5);
    const auto serial = run_replications(a, s, c);
    c.workers = 4;
    const auto parallel = run_replications(a, s, c);
    for (std::size_t m = 0; m < serial.size(); ++m) {
        EXPECT_EQ(serial[m].id, m + 1);
        EXPECT_EQ(serial[m].z, parallel[m].z);
        EXPECT_EQ(serial[m].sigma_hat, parallel[m].sigma_hat);
        ASSERT_TRUE(parallel[m].cov_hat.has_value());
        EXPECT_EQ(serial[m].cov_hat->cov, parallel[m].cov_hat->cov);
    }
}

TEST(RunReplications, Validation) {
    const JointDistribution a = scenario_a();
    const std::vector<FactorSubset> s{FactorSubset({1, 4})};
    EXPECT_THROW(run_replications(a, s, config(100, 1, 1)), std::invalid_argument);
    const std::vector<FactorSubset> ok{FactorSubset({1})};
    EXPECT_THROW(run_replications(a, ok, config(100, 0, 1)), std::invalid_argument);
    EXPECT_THROW(run_replications(a, std::vector<FactorSubset>{}, config(100, 1, 1)), std::invalid_argument);
}

TEST(CltCheck, DegenerateScenario) {
    const JointDistribution d = fixtures::deterministic();
    const std::vector<FactorSubset> s{FactorSubset({1})};
    const CltReport r = verify_clt(d, s, config(400, 120, 3));
    ASSERT_EQ(r.univariate.size(), 1u);
    EXPECT_TRUE(r.univariate[0].degenerate);
    EXPECT_TRUE(r.univariate[0].evaluated);
    EXPECT_EQ(r.univariate[0].max_abs_z, 0.0);
    EXPECT_TRUE(r.passed());
}

TEST(CltCheck, CentredAtZero) {
    const JointDistribution a = scenario_a();
    const std::vector<FactorSubset> s{FactorSubset({1, 3})};
    const CltReport r = verify_clt(a, s, config(2000, 400, 101));
    const double sigma = std::sqrt(r.oracle_cov(0, 0));
    EXPECT_LT(std::abs(r.univariate[0].mean), 4.0 * sigma / std::sqrt(400.0));
    EXPECT_EQ(r.univariate[0].self_normalized_used, 400u);
}

TEST(CltCheck, TooFewReplicationsAreNotEvaluated) {
    const JointDistribution a = scenario_a();
    const std::vector<FactorSubset> s{FactorSubset({1, 2})};
    const CltReport r = verify_clt(a, s, config(200, 3, 1));
    EXPECT_FALSE(r.univariate[0].evaluated);
}

TEST(MultivariateCheck, IdenticalSubsetsAreFullyCorrelated) {
    const JointDistribution a = scenario_a();
    const std::vector<FactorSubset> s{FactorSubset({1, 3}), FactorSubset({1, 3})};
    const CltReport r = verify_clt(a, s, config(500, 150, 8));
    ASSERT_TRUE(r.multivariate.has_value());
    EXPECT_GT(r.multivariate->sample_corr(0, 1), 0.99);
    EXPECT_EQ(r.multivariate->whitening_skipped, 150u);
    EXPECT_FALSE(r.multivariate->whitening_ok);
}

TEST(MultivariateCheck, IndependentBlocksAreUncorrelated) {
    PresetParams p;
    p.n = 2;
    p.informative = 2;
    const JointDistribution d = generate_scenario(Preset::Independent, p);
    const std::vector<FactorSubset> s{FactorSubset({1}), FactorSubset({2})};
    const CltReport r = verify_clt(d, s, config(2000, 600, 17));
    ASSERT_TRUE(r.multivariate.has_value());
    EXPECT_NEAR(r.oracle_cov(0, 1), 0.0, 1e-12);
    EXPECT_GT(r.oracle_cov(0, 0), 0.1);
    const double se = std::sqrt(r.oracle_cov(0, 0) * r.oracle_cov(1, 1) / 600.0);
    EXPECT_LT(std::abs(r.multivariate->sample_cov(0, 1)), 3.0 * se);
}

TEST(RootNRate, NinetyNinthPercentileIsStable) {
    const JointDistribution a = scenario_a();
    const std::vector<FactorSubset> s{FactorSubset({1, 3})};
    std::vector<ReplicationResult> r1, r2;
    verify_clt(a, s, config(2000, 1000, 41), &r1);
    verify_clt(a, s, config(8000, 1000, 42), &r2);
    const double q1 = abs_z_quantile(r1, 0, 0.99);
    const double q2 = abs_z_quantile(r2, 0, 0.99);
    EXPECT_GT(q2 / q1, 0.8);
    EXPECT_LT(q2 / q1, 1.25);
}
