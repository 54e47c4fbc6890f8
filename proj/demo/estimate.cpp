// Samples from the pair-epistasis preset, estimates the prediction error of
// two factor subsets by 5-fold cross-validation, and compares the estimates
// with the exact values and the plug-in confidence intervals.

#include <cmath>
#include <cstdio>
#include <vector>

#include "mdrclt/estimator.hpp"
#include "mdrclt/oracle.hpp"
#include "mdrclt/presets.hpp"

int main() {
    using namespace mdrclt;
    const JointDistribution dist = generate_scenario(Preset::PairEpistasis, PresetParams{});
    const PenaltyFunction psi = velez_penalty(dist);
    const EpsilonSchedule schedule; // eps_N = N^{-1/4}
    const std::size_t n_records = 5000;
    const Dataset data = sample(dist, n_records, 2024);

    std::printf("P(Y=1) = %.4f\n", gamma_threshold(psi));
    for (const FactorSubset& s : {FactorSubset({1, 2}), FactorSubset({1, 3})}) {
        const double truth = err(dist, psi, optimal_function(dist, psi, s));
        const double est = estimated_prediction_error(data, 5, s, schedule).value;
        const double half = 1.96 * sigma_hat(data, 5, s, schedule) / std::sqrt(double(n_records));
        std::printf("%-6s Err = %.4f  Err_hat = %.4f  95%% CI [%.4f, %.4f]\n", s.to_string().c_str(), truth,
                    est, est - half, est + half);
    }
}
