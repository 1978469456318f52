#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace crossdiff {

using Vec2 = std::array<double, 2>;

/// Dense 2x2 matrix, row-major entries.
struct Mat2 {
    double m11 = 0.0;
    double m12 = 0.0;
    double m21 = 0.0;
    double m22 = 0.0;

    constexpr double trace() const { return m11 + m22; }
    constexpr double det() const { return m11 * m22 - m12 * m21; }
    constexpr Mat2 transpose() const { return {m11, m21, m12, m22}; }
    constexpr Mat2 symmetric_part() const {
        const double off = 0.5 * (m12 + m21);
        return {m11, off, off, m22};
    }
    double max_abs() const {
        return std::max({std::abs(m11), std::abs(m12), std::abs(m21), std::abs(m22)});
    }
    /// max |m - m^T| entry.
    double asymmetry() const { return std::abs(m12 - m21); }

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

constexpr Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.m11 * y.m11 + x.m12 * y.m21, x.m11 * y.m12 + x.m12 * y.m22,
            x.m21 * y.m11 + x.m22 * y.m21, x.m21 * y.m12 + x.m22 * y.m22};
}

constexpr Mat2 operator*(double s, const Mat2& x) { return {s * x.m11, s * x.m12, s * x.m21, s * x.m22}; }

constexpr Mat2 operator+(const Mat2& x, const Mat2& y) {
    return {x.m11 + y.m11, x.m12 + y.m12, x.m21 + y.m21, x.m22 + y.m22};
}

constexpr Mat2 operator-(const Mat2& x, const Mat2& y) {
    return {x.m11 - y.m11, x.m12 - y.m12, x.m21 - y.m21, x.m22 - y.m22};
}

constexpr Vec2 operator*(const Mat2& x, const Vec2& v) {
    return {x.m11 * v[0] + x.m12 * v[1], x.m21 * v[0] + x.m22 * v[1]};
}

constexpr double dot(const Vec2& u, const Vec2& v) { return u[0] * v[0] + u[1] * v[1]; }

struct SymmetricEigenvalues {
    double lo;
    double hi;
};

/// Closed-form eigenvalues of the symmetric part of `x`. The smaller one is
/// recovered as det/hi when both have the same sign to avoid cancellation.
inline SymmetricEigenvalues eigenvalues_symmetric(const Mat2& x) {
    const Mat2 s = x.symmetric_part();
    const double mean = 0.5 * (s.m11 + s.m22);
    const double radius = std::hypot(0.5 * (s.m11 - s.m22), s.m12);
    const double det = s.m11 * s.m22 - s.m12 * s.m12;
    if (mean > 0.0) {
        const double hi = mean + radius;
        return {det / hi, hi};
    }
    if (mean < 0.0) {
        const double lo = mean - radius;
        return {lo, det / lo};
    }
    return {-radius, radius};
}

inline double min_eigenvalue(const Mat2& x) { return eigenvalues_symmetric(x).lo; }

}  // namespace crossdiff
