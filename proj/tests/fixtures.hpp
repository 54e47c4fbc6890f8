#pragma once

// Small joint tables shared by the unit tests.

#include <vector>

#include "mdrclt/model.hpp"

namespace fixtures {

using namespace mdrclt;

// n=1, q=1: P(X=0)=P(X=1)=1/2, P(Y=1|X=0)=0.8, P(Y=1|X=1)=0.2.
inline JointDistribution toy() {
    return JointDistribution::from_atoms(FactorSpace(1, 1), std::vector<Atom>{{{0}, Label::Positive, 0.4},
                                                              {{0}, Label::Negative, 0.1},
                                                              {{1}, Label::Positive, 0.1},
                                                              {{1}, Label::Negative, 0.4}});
}

// n=2, q=1 with mass only on x1 = 0.
inline JointDistribution two_factor() {
    return JointDistribution::from_atoms(FactorSpace(2, 1), std::vector<Atom>{{{0, 0}, Label::Positive, 0.3},
                                                              {{0, 0}, Label::Negative, 0.1},
                                                              {{0, 1}, Label::Positive, 0.1},
                                                              {{0, 1}, Label::Negative, 0.5}});
}

// Y independent of X on n factors with P(Y=1) = p.
inline JointDistribution independent(int n, int q, double p) {
    const FactorSpace space(n, q);
    std::vector<double> probs(2 * space.size());
    for (std::size_t x = 0; x < space.size(); ++x) {
        probs[2 * x] = (1.0 - p) / static_cast<double>(space.size());
        probs[2 * x + 1] = p / static_cast<double>(space.size());
    }
    return JointDistribution(space, probs);
}

// Y = +1 exactly when x1 = 1 (n=2, q=1, uniform X).
inline JointDistribution deterministic() {
    const FactorSpace space(2, 1);
    std::vector<double> probs(2 * space.size(), 0.0);
    for (std::size_t x = 0; x < space.size(); ++x) probs[2 * x + (space.level(x, 1) == 1 ? 1 : 0)] = 0.25;
    return JointDistribution(space, probs);
}

inline Dataset dataset(const FactorSpace& space, const std::vector<std::pair<std::vector<int>, int>>& rows) {
    Dataset d(space);
    for (const auto& [x, y] : rows) d.push_back(x, label_from_int(y));
    return d;
}

} // namespace fixtures
