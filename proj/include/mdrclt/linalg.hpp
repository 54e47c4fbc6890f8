#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mdrclt/error.hpp"

namespace mdrclt {

// Small dense square matrix, row-major. Sized for s <= 32 covariance work.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

    std::vector<double> apply(const std::vector<double>& v) const {
        if (v.size() != n_) throw std::invalid_argument("dimension mismatch in matrix-vector product");
        std::vector<double> out(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) out[i] += (*this)(i, j) * v[j];
        return out;
    }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.n_ != b.n_) throw std::invalid_argument("dimension mismatch in matrix product");
        Matrix c(a.n_);
        for (std::size_t i = 0; i < a.n_; ++i)
            for (std::size_t k = 0; k < a.n_; ++k)
                for (std::size_t j = 0; j < a.n_; ++j) c(i, j) += a(i, k) * b(k, j);
        return c;
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

struct EigenDecomposition {
    std::vector<double> values;
    Matrix vectors; // column i is the eigenvector of values[i]
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
// `tolerance` (relative to the full norm for badly scaled inputs).
inline EigenDecomposition jacobi_eigen(Matrix a, double tolerance = 1e-12, int max_sweeps = 100) {
    const std::size_t n = a.size();
    Matrix v = Matrix::identity(n);
    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };
    double full = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) full += a(i, j) * a(i, j);
    const double stop = tolerance * std::max(1.0, std::sqrt(full));

    for (int sweep = 0; sweep < max_sweeps && off_norm() > stop; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    EigenDecomposition out{std::vector<double>(n), std::move(v)};
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
    return out;
}

inline constexpr double kNearSingularEigenvalue = 1e-8;

// Symmetric inverse square root V diag(1/sqrt(l)) V^T.
inline Matrix inverse_sqrt(const Matrix& a, double floor = kNearSingularEigenvalue) {
    const EigenDecomposition eig = jacobi_eigen(a);
    const std::size_t n = a.size();
    for (double l : eig.values) {
        if (!(l >= floor)) throw DegenerateError("near-singular covariance matrix");
    }
    Matrix out(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += eig.vectors(i, k) * eig.vectors(j, k) / std::sqrt(eig.values[k]);
            out(i, j) = s;
        }
    return out;
}

} // namespace mdrclt
