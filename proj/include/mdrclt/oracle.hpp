#pragma once

// Closed-form quantities on a known joint table: the penalty threshold,
// optimal predictors, the prediction error Err(f), the weight L(x),
// significance of factor subsets, and the asymptotic (co)variance of the
// cross-validated error estimate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mdrclt/linalg.hpp"
#include "mdrclt/model.hpp"

namespace mdrclt {

// Absolute tolerance for comparisons against the threshold and for the
// significance identity. Separates authored exact ties from rounding noise.
inline constexpr double kTieTolerance = 1e-10;

// Total map from the factor space to {-1, 1}.
class Predictor {
public:
    Predictor(FactorSpace space, std::vector<Label> table)
        : space_(std::move(space)), table_(std::move(table)) {
        if (table_.size() != space_.size()) {
            throw std::invalid_argument("predictor table must cover every point of the space");
        }
    }

    static Predictor constant(const FactorSpace& space, Label value) {
        return Predictor(space, std::vector<Label>(space.size(), value));
    }

    const FactorSpace& space() const noexcept { return space_; }
    std::span<const Label> table() const noexcept { return table_; }
    Label operator()(std::size_t point) const noexcept { return table_[point]; }
    Label at(std::span<const int> x) const { return table_[space_.index_of(x)]; }

    bool operator==(const Predictor&) const = default;

private:
    FactorSpace space_;
    std::vector<Label> table_;
};

// gamma(psi) = psi(-1) / (psi(-1) + psi(1)).
inline double gamma_threshold(const PenaltyFunction& psi) {
    return psi.psi_neg() / (psi.psi_neg() + psi.psi_pos());
}

// psi(y) = 1 / P(Y=y). Its threshold is P(Y=1).
inline PenaltyFunction velez_penalty(const JointDistribution& dist) {
    const double p_pos = marginal_y(dist, Label::Positive);
    const double p_neg = marginal_y(dist, Label::Negative);
    if (!(p_pos > 0.0) || !(p_neg > 0.0)) {
        throw DegenerateError("velez penalty needs 0 < P(Y=1) < 1");
    }
    return PenaltyFunction(1.0 / p_neg, 1.0 / p_pos);
}

namespace detail {

inline bool exceeds(double value, double threshold) { return value > threshold + kTieTolerance; }

} // namespace detail

// A* = {x in M : P(Y=1 | X=x) > gamma(psi)}.
inline PointSet optimal_set_astar(const JointDistribution& dist, const PenaltyFunction& psi) {
    PointSet a;
    if (psi.psi_pos() == 0.0) return a;
    const double g = gamma_threshold(psi);
    for (std::size_t x = 0; x < dist.space().size(); ++x) {
        const double mass = dist.point_mass(x);
        if (!(mass > 0.0)) continue;
        if (detail::exceeds(dist.prob(x, Label::Positive) / mass, g)) a.push_back(x);
    }
    return a;
}

// f^subset: +1 on support points whose cylinder conditional exceeds the
// threshold, -1 everywhere else (including outside the support).
inline Predictor optimal_function(const JointDistribution& dist, const PenaltyFunction& psi,
                                  const FactorSubset& subset) {
    const FactorSpace& space = dist.space();
    const CylinderMasses cm = cylinder_masses(dist, subset);
    const double g = gamma_threshold(psi);
    std::vector<Label> table(space.size(), Label::Negative);
    for (std::size_t x = 0; x < space.size(); ++x) {
        if (!(dist.point_mass(x) > 0.0)) continue;
        if (psi.psi_pos() == 0.0) continue;
        if (detail::exceeds(cm.conditional(cell_of(space, subset, x)), g)) {
            table[x] = Label::Positive;
        }
    }
    return Predictor(space, std::move(table));
}

// Err(f) = E|Y - f(X)| psi(Y) = 2 sum_y psi(y) P(Y=y, f(X) != y).
inline double err(const JointDistribution& dist, const PenaltyFunction& psi, const Predictor& f) {
    if (!(f.space() == dist.space())) throw std::invalid_argument("predictor space mismatch");
    double miss[2] = {0.0, 0.0};
    for (std::size_t x = 0; x < dist.space().size(); ++x) {
        for (Label y : kLabels) {
            if (f(x) != y) miss[slot(y)] += dist.prob(x, y);
        }
    }
    return 2.0 * (psi(Label::Negative) * miss[0] + psi(Label::Positive) * miss[1]);
}

// L(x) = psi(1) P(X=x, Y=1) - psi(-1) P(X=x, Y=-1).
inline double weight_l(const JointDistribution& dist, const PenaltyFunction& psi,
                       std::size_t point) {
    if (point >= dist.space().size()) throw std::invalid_argument("point outside the space");
    return psi.psi_pos() * dist.prob(point, Label::Positive) -
           psi.psi_neg() * dist.prob(point, Label::Negative);
}

// The subset is significant when P(Y=1 | X=x) equals the cylinder conditional
// for every support point.
inline bool is_significant(const JointDistribution& dist, const FactorSubset& subset) {
    const FactorSpace& space = dist.space();
    const CylinderMasses cm = cylinder_masses(dist, subset);
    for (std::size_t x = 0; x < space.size(); ++x) {
        const double mass = dist.point_mass(x);
        if (!(mass > 0.0)) continue;
        const double pointwise = dist.prob(x, Label::Positive) / mass;
        if (std::abs(pointwise - cm.conditional(cell_of(space, subset, x))) > kTieTolerance) {
            return false;
        }
    }
    return true;
}

// U = {x in M : P(Y=1 | X_subset = x_subset) != gamma(psi)}.
inline PointSet set_u(const JointDistribution& dist, const PenaltyFunction& psi,
                      const FactorSubset& subset) {
    const FactorSpace& space = dist.space();
    const CylinderMasses cm = cylinder_masses(dist, subset);
    const double g = gamma_threshold(psi);
    PointSet u;
    for (std::size_t x = 0; x < space.size(); ++x) {
        if (!(dist.point_mass(x) > 0.0)) continue;
        if (std::abs(cm.conditional(cell_of(space, subset, x)) - g) > kTieTolerance) u.push_back(x);
    }
    return u;
}

// Consistency criterion diagnostic:
//   sum_k ( sum_{x in X+} 1{f_k(x) = -1} L(x) - sum_{x in X-} 1{f_k(x) = 1} L(x) )
// with X+/- = (X \ U) intersected with {x in M : target(x) = +/-1}, and f_k the
// prediction rule trained on the complement of fold k.
// Requires oracle access; never used on the estimation path.
inline double criterion_statistic(const JointDistribution& dist, const PenaltyFunction& psi,
                                  const Predictor& target, const PointSet& u,
                                  std::span<const Predictor> fold_decisions) {
    const FactorSpace& space = dist.space();
    std::vector<char> in_u(space.size(), 0);
    for (std::size_t x : u) in_u.at(x) = 1;
    double total = 0.0;
    for (const Predictor& fk : fold_decisions) {
        if (!(fk.space() == space)) throw std::invalid_argument("fold decision space mismatch");
        double plus = 0.0;
        double minus = 0.0;
        for (std::size_t x = 0; x < space.size(); ++x) {
            if (in_u[x] || !(dist.point_mass(x) > 0.0)) continue;
            if (target(x) == Label::Positive && fk(x) == Label::Negative) {
                plus += weight_l(dist, psi, x);
            } else if (target(x) == Label::Negative && fk(x) == Label::Positive) {
                minus += weight_l(dist, psi, x);
            }
        }
        total += plus - minus;
    }
    return total;
}

// Values of the influence variable
//   V = 2 sum_y 1{Y=y}/P(Y=y) (1{f(X) != y} - P(f(X) != y | Y=y))
// at every atom (same slot layout as JointDistribution::atoms), with f the
// optimal function of `subset` under the Velez penalty.
inline std::vector<double> influence_values(const JointDistribution& dist,
                                            const FactorSubset& subset) {
    const FactorSpace& space = dist.space();
    const PenaltyFunction psi = velez_penalty(dist);
    const Predictor f = optimal_function(dist, psi, subset);
    const double p_y[2] = {marginal_y(dist, Label::Negative), marginal_y(dist, Label::Positive)};
    double miss[2] = {0.0, 0.0};
    for (std::size_t x = 0; x < space.size(); ++x)
        for (Label y : kLabels)
            if (f(x) != y) miss[slot(y)] += dist.prob(x, y);

    std::vector<double> v(2 * space.size());
    for (std::size_t x = 0; x < space.size(); ++x) {
        for (Label y : kLabels) {
            const std::size_t s = slot(y);
            const double wrong = f(x) != y ? 1.0 : 0.0;
            v[2 * x + s] = 2.0 / p_y[s] * (wrong - miss[s] / p_y[s]);
        }
    }
    double mean = 0.0;
    const auto atoms = dist.atoms();
    for (std::size_t a = 0; a < atoms.size(); ++a) mean += atoms[a] * v[a];
    if (std::abs(mean) > 1e-12) throw std::logic_error("influence variable is not centred");
    return v;
}

// C_ij = cov(V(alpha_i), V(alpha_j)).
inline Matrix asymptotic_covariance(const JointDistribution& dist,
                                    std::span<const FactorSubset> subsets) {
    if (subsets.empty()) throw std::invalid_argument("need at least one subset");
    std::vector<std::vector<double>> vs;
    vs.reserve(subsets.size());
    for (const FactorSubset& s : subsets) vs.push_back(influence_values(dist, s));
    const auto atoms = dist.atoms();
    std::vector<double> means(subsets.size(), 0.0);
    for (std::size_t i = 0; i < subsets.size(); ++i)
        for (std::size_t a = 0; a < atoms.size(); ++a) means[i] += atoms[a] * vs[i][a];

    Matrix c(subsets.size());
    for (std::size_t i = 0; i < subsets.size(); ++i) {
        for (std::size_t j = i; j < subsets.size(); ++j) {
            double s = 0.0;
            for (std::size_t a = 0; a < atoms.size(); ++a) s += atoms[a] * vs[i][a] * vs[j][a];
            c(i, j) = c(j, i) = s - means[i] * means[j];
        }
        c(i, i) = std::max(0.0, c(i, i));
    }
    return c;
}

// sigma^2 = Var V.
inline double asymptotic_variance(const JointDistribution& dist, const FactorSubset& subset) {
    return asymptotic_covariance(dist, std::span<const FactorSubset>(&subset, 1))(0, 0);
}

} // namespace mdrclt
