#pragma once

// Discrete factor space {0..q}^n, exact joint tables over (X, Y) and i.i.d.
// sampling from them.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdrclt/error.hpp"
#include "mdrclt/random.hpp"

namespace mdrclt {

inline constexpr std::size_t kMaxPoints = std::size_t{1} << 24;
inline constexpr double kNormalizationTolerance = 1e-12;

using FactorVector = std::vector<int>;

// Point indices into the lexicographic enumeration of the factor space.
using PointSet = std::vector<std::size_t>;

enum class Label : std::int8_t { Negative = -1, Positive = 1 };

inline constexpr Label kLabels[2] = {Label::Negative, Label::Positive};

constexpr int to_int(Label y) noexcept { return static_cast<int>(y); }

// Slot 0 holds y = -1 and slot 1 holds y = +1 in every per-label table.
constexpr std::size_t slot(Label y) noexcept { return y == Label::Positive ? 1 : 0; }

constexpr Label opposite(Label y) noexcept {
    return y == Label::Positive ? Label::Negative : Label::Positive;
}

inline Label label_from_int(int y) {
    if (y == 1) return Label::Positive;
    if (y == -1) return Label::Negative;
    throw std::invalid_argument("label must be -1 or 1, got " + std::to_string(y));
}

class FactorSpace {
public:
    FactorSpace(int n, int q) : n_(n), q_(q) {
        if (n < 1) throw std::invalid_argument("factor count n must be >= 1");
        if (q < 1) throw std::invalid_argument("max level q must be >= 1");
        stride_.assign(static_cast<std::size_t>(n), 1);
        std::size_t total = 1;
        for (int i = n - 1; i >= 0; --i) {
            stride_[static_cast<std::size_t>(i)] = total;
            if (total > kMaxPoints / static_cast<std::size_t>(q + 1)) {
                throw std::invalid_argument("factor space (q+1)^n exceeds 2^24 points");
            }
            total *= static_cast<std::size_t>(q + 1);
        }
        size_ = total;
    }

    int n() const noexcept { return n_; }
    int q() const noexcept { return q_; }
    int levels() const noexcept { return q_ + 1; }
    std::size_t size() const noexcept { return size_; }

    bool contains(std::span<const int> x) const noexcept {
        if (x.size() != static_cast<std::size_t>(n_)) return false;
        return std::all_of(x.begin(), x.end(), [this](int v) { return v >= 0 && v <= q_; });
    }

    std::size_t index_of(std::span<const int> x) const {
        if (!contains(x)) throw std::invalid_argument("factor vector outside the factor space");
        std::size_t idx = 0;
        for (std::size_t i = 0; i < x.size(); ++i) idx += static_cast<std::size_t>(x[i]) * stride_[i];
        return idx;
    }

    FactorVector point(std::size_t index) const {
        FactorVector x(static_cast<std::size_t>(n_));
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = level(index, static_cast<int>(i) + 1);
        return x;
    }

    // Level of the 1-based `factor` at the given point.
    int level(std::size_t index, int factor) const noexcept {
        const std::size_t i = static_cast<std::size_t>(factor - 1);
        return static_cast<int>((index / stride_[i]) % static_cast<std::size_t>(q_ + 1));
    }

    bool operator==(const FactorSpace& other) const noexcept {
        return n_ == other.n_ && q_ == other.q_;
    }

private:
    int n_;
    int q_;
    std::size_t size_ = 0;
    std::vector<std::size_t> stride_;
};

// A nonempty, strictly increasing list of 1-based factor indices.
class FactorSubset {
public:
    explicit FactorSubset(std::vector<int> indices) : indices_(std::move(indices)) {
        if (indices_.empty()) throw std::invalid_argument("factor subset must be nonempty");
        if (indices_.front() < 1) throw std::invalid_argument("factor indices are 1-based");
        for (std::size_t i = 1; i < indices_.size(); ++i) {
            if (indices_[i] <= indices_[i - 1]) {
                throw std::invalid_argument("factor subset indices must be strictly increasing");
            }
        }
    }

    static FactorSubset full(int n) {
        std::vector<int> all(static_cast<std::size_t>(n));
        std::iota(all.begin(), all.end(), 1);
        return FactorSubset(std::move(all));
    }

    std::span<const int> indices() const noexcept { return indices_; }
    std::size_t size() const noexcept { return indices_.size(); }
    int max_index() const noexcept { return indices_.back(); }

    void check_within(const FactorSpace& space) const {
        if (max_index() > space.n()) {
            throw std::invalid_argument("factor subset " + to_string() + " exceeds n=" +
                                        std::to_string(space.n()));
        }
    }

    bool is_subset_of(const FactorSubset& other) const {
        return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                             indices_.end());
    }

    std::string to_string() const {
        std::string s = "{";
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(indices_[i]);
        }
        return s + "}";
    }

    auto operator<=>(const FactorSubset&) const = default;

private:
    std::vector<int> indices_;
};

// Number of cylinders C_subset(u), i.e. (q+1)^r.
inline std::size_t cell_count(const FactorSpace& space, const FactorSubset& subset) {
    std::size_t c = 1;
    for (std::size_t i = 0; i < subset.size(); ++i) c *= static_cast<std::size_t>(space.levels());
    return c;
}

// Flat index of the projection u = (x_{k1},...,x_{kr}), lexicographic in u.
inline std::size_t cell_of(const FactorSpace& space, const FactorSubset& subset,
                           std::size_t point) noexcept {
    std::size_t cell = 0;
    for (int k : subset.indices()) {
        cell = cell * static_cast<std::size_t>(space.levels()) +
               static_cast<std::size_t>(space.level(point, k));
    }
    return cell;
}

inline std::size_t cell_index(const FactorSpace& space, const FactorSubset& subset,
                              std::span<const int> u) {
    if (u.size() != subset.size()) {
        throw std::invalid_argument("sub-vector length does not match the subset size");
    }
    std::size_t cell = 0;
    for (int v : u) {
        if (v < 0 || v > space.q()) throw std::invalid_argument("sub-vector level out of range");
        cell = cell * static_cast<std::size_t>(space.levels()) + static_cast<std::size_t>(v);
    }
    return cell;
}

struct Atom {
    FactorVector x;
    Label y;
    double prob;
};

// Dense table p(x, y). Atom slot 2*x + slot(y): lexicographic in x, then
// y = -1 before y = +1. The sampler walks atoms in exactly this order.
class JointDistribution {
public:
    JointDistribution(FactorSpace space, std::vector<double> atom_probs)
        : space_(std::move(space)), probs_(std::move(atom_probs)) {
        if (probs_.size() != 2 * space_.size()) {
            throw std::invalid_argument("probability table must have 2*(q+1)^n entries");
        }
        double total = 0.0;
        for (double p : probs_) {
            if (!std::isfinite(p) || p < 0.0) {
                throw std::invalid_argument("probabilities must be finite and non-negative");
            }
            total += p;
        }
        if (std::abs(total - 1.0) > kNormalizationTolerance) {
            throw std::invalid_argument("probabilities sum to " + std::to_string(total) +
                                        ", expected 1");
        }
        double positive = 0.0;
        for (std::size_t x = 0; x < space_.size(); ++x) positive += probs_[2 * x + 1];
        if (!(positive > 0.0) || !(positive < total)) {
            throw std::invalid_argument("degenerate label marginal: P(Y=1) must lie in (0,1)");
        }
    }

    static JointDistribution from_atoms(const FactorSpace& space, std::span<const Atom> atoms) {
        std::vector<double> probs(2 * space.size(), 0.0);
        for (const Atom& a : atoms) probs[2 * space.index_of(a.x) + slot(a.y)] += a.prob;
        return JointDistribution(space, std::move(probs));
    }

    const FactorSpace& space() const noexcept { return space_; }
    std::span<const double> atoms() const noexcept { return probs_; }

    double prob(std::size_t point, Label y) const noexcept { return probs_[2 * point + slot(y)]; }
    double point_mass(std::size_t point) const noexcept {
        return probs_[2 * point] + probs_[2 * point + 1];
    }

private:
    FactorSpace space_;
    std::vector<double> probs_;
};

// Non-negative pair (psi(-1), psi(1)), not both zero.
class PenaltyFunction {
public:
    PenaltyFunction(double psi_neg, double psi_pos) : neg_(psi_neg), pos_(psi_pos) {
        if (!std::isfinite(psi_neg) || !std::isfinite(psi_pos) || psi_neg < 0.0 || psi_pos < 0.0) {
            throw std::invalid_argument("penalty values must be finite and non-negative");
        }
        if (!(psi_neg + psi_pos > 0.0)) throw std::invalid_argument("penalty must not vanish");
    }

    double psi_neg() const noexcept { return neg_; }
    double psi_pos() const noexcept { return pos_; }
    double operator()(Label y) const noexcept { return y == Label::Positive ? pos_ : neg_; }

    PenaltyFunction scaled(double c) const { return PenaltyFunction(c * neg_, c * pos_); }

    bool operator==(const PenaltyFunction&) const = default;

private:
    double neg_;
    double pos_;
};

// Ordered i.i.d. sample. Storage is 0-based; the fold machinery speaks in the
// 1-based record numbers j = 1..N.
class Dataset {
public:
    explicit Dataset(FactorSpace space) : space_(std::move(space)) {}

    const FactorSpace& space() const noexcept { return space_; }
    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }

    void reserve(std::size_t n) {
        points_.reserve(n);
        labels_.reserve(n);
    }

    void push_back(std::span<const int> x, Label y) { push_point(space_.index_of(x), y); }

    void push_point(std::size_t point, Label y) {
        if (point >= space_.size()) throw std::invalid_argument("point index out of range");
        points_.push_back(static_cast<std::uint32_t>(point));
        labels_.push_back(y);
    }

    std::size_t point(std::size_t i) const noexcept { return points_[i]; }
    Label label(std::size_t i) const noexcept { return labels_[i]; }
    FactorVector x(std::size_t i) const { return space_.point(points_[i]); }

    std::span<const std::uint32_t> points() const noexcept { return points_; }
    std::span<const Label> labels() const noexcept { return labels_; }

    bool operator==(const Dataset&) const = default;

private:
    FactorSpace space_;
    std::vector<std::uint32_t> points_;
    std::vector<Label> labels_;
};

inline PointSet support(const JointDistribution& dist) {
    PointSet m;
    for (std::size_t x = 0; x < dist.space().size(); ++x) {
        if (dist.point_mass(x) > 0.0) m.push_back(x);
    }
    return m;
}

inline double marginal_y(const JointDistribution& dist, Label y) {
    double total = 0.0;
    for (std::size_t x = 0; x < dist.space().size(); ++x) total += dist.prob(x, y);
    return total;
}

// Masses P(X in C(u)) and P(Y=1, X in C(u)) for every cylinder of `subset`.
struct CylinderMasses {
    std::vector<double> mass;
    std::vector<double> positive;

    // Throws on a null cylinder.
    double conditional(std::size_t cell) const {
        if (!(mass[cell] > 0.0)) throw DegenerateError("conditioning on null event");
        return positive[cell] / mass[cell];
    }
};

inline CylinderMasses cylinder_masses(const JointDistribution& dist, const FactorSubset& subset) {
    subset.check_within(dist.space());
    CylinderMasses cm;
    const std::size_t cells = cell_count(dist.space(), subset);
    cm.mass.assign(cells, 0.0);
    cm.positive.assign(cells, 0.0);
    for (std::size_t x = 0; x < dist.space().size(); ++x) {
        const std::size_t c = cell_of(dist.space(), subset, x);
        cm.mass[c] += dist.point_mass(x);
        cm.positive[c] += dist.prob(x, Label::Positive);
    }
    return cm;
}

// P(Y=1 | X in C_subset(u)).
inline double cond_prob_cylinder(const JointDistribution& dist, const FactorSubset& subset,
                                 std::span<const int> u) {
    subset.check_within(dist.space());
    const std::size_t target = cell_index(dist.space(), subset, u);
    double mass = 0.0;
    double positive = 0.0;
    for (std::size_t x = 0; x < dist.space().size(); ++x) {
        if (cell_of(dist.space(), subset, x) != target) continue;
        mass += dist.point_mass(x);
        positive += dist.prob(x, Label::Positive);
    }
    if (!(mass > 0.0)) throw DegenerateError("conditioning on null event");
    return positive / mass;
}

// N i.i.d. draws by inverse CDF over the fixed atom order.
inline Dataset sample(const JointDistribution& dist, std::size_t n_records, std::uint64_t seed) {
    if (n_records == 0) throw std::invalid_argument("sample size N must be >= 1");
    const auto atoms = dist.atoms();
    std::vector<double> cdf(atoms.size());
    std::partial_sum(atoms.begin(), atoms.end(), cdf.begin());
    const double total = cdf.back();
    std::size_t last_positive = atoms.size() - 1;
    while (atoms[last_positive] <= 0.0) --last_positive;

    Engine eng(seed);
    Dataset data(dist.space());
    data.reserve(n_records);
    for (std::size_t i = 0; i < n_records; ++i) {
        const double u = uniform01(eng) * total;
        std::size_t a = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) -
                                                 cdf.begin());
        if (a > last_positive) a = last_positive;
        data.push_point(a / 2, (a % 2) ? Label::Positive : Label::Negative);
    }
    return data;
}

} // namespace mdrclt
