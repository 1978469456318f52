#pragma once

/**
 * @file entropy.hpp
 * @brief Liapunov polynomials, logarithmic entropy and mobility matrices.
 *
 * For n >= 2 the entropy density is the homogeneous polynomial
 *
 *     Phi_n(X) = sum_j a_{j,n} X1^j X2^(n-j),
 *     a_{0,n} = 1,
 *     a_{j,n} = C(n,j) prod_{k<j} (a k + c (n-k-1)) / (b k + d (n-k-1)),
 *
 * whose coefficients make D^2 Phi_n(X) M(X) symmetric, with
 * M(X) = [[a X1, b X1], [c X2, d X2]] the mobility matrix. For n = 1 the
 * density is Phi_1(X) = L(X1) + (b^2/ad) L(X2) with L(r) = r ln r - r + 1.
 *
 * Everything here is a pure function of its arguments.
 */

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "crossdiff/error.hpp"
#include "crossdiff/mat2.hpp"
#include "crossdiff/params.hpp"

namespace crossdiff {

/// Largest supported degree. Beyond this the binomial factors and X^n
/// leave the comfortable range of double precision.
inline constexpr int kMaxDegree = 200;

namespace detail {

inline void require_degree(int n) {
    if (n < 2 || n > kMaxDegree) {
        std::ostringstream os;
        os << "entropy degree must be in [2, " << kMaxDegree << "], got " << n;
        throw InvalidInput(os.str());
    }
}

inline void require_quadrant(const Vec2& x) {
    if (!(x[0] >= 0.0 && x[1] >= 0.0)) {
        std::ostringstream os;
        os << "point must lie in [0,inf)^2, got (" << x[0] << ", " << x[1] << ")";
        throw InvalidInput(os.str());
    }
}

/// sum_j c[j] x1^j x2^(m-j) with m = c.size() - 1.
inline double eval_homogeneous(std::span<const double> c, double x1, double x2) {
    if (c.empty()) return 0.0;
    const std::size_t m = c.size() - 1;
    if (m == 0) return c[0];
    if (x1 >= 0.0 && x2 >= 0.0) {
        // Horner in the smaller-over-larger ratio.
        if (x1 <= x2) {
            if (x2 == 0.0) return 0.0;
            const double r = x1 / x2;
            double s = c[m];
            for (std::size_t j = m; j-- > 0;) s = s * r + c[j];
            return s * std::pow(x2, static_cast<double>(m));
        }
        const double r = x2 / x1;
        double s = c[0];
        for (std::size_t j = 1; j <= m; ++j) s = s * r + c[j];
        return s * std::pow(x1, static_cast<double>(m));
    }
    double s = 0.0;
    for (std::size_t j = 0; j <= m; ++j) {
        s += c[j] * std::pow(x1, static_cast<double>(j)) * std::pow(x2, static_cast<double>(m - j));
    }
    return s;
}

}  // namespace detail

/// Degree n and coefficients (a_{0,n}, ..., a_{n,n}) of Phi_n, together with
/// the coefficient tables of its first and second partial derivatives.
class EntropyPoly {
public:
    EntropyPoly(int n, std::vector<double> coeffs) : n_(n), coeffs_(std::move(coeffs)) {
        detail::require_degree(n);
        if (coeffs_.size() != static_cast<std::size_t>(n) + 1) {
            throw InvalidInput("entropy polynomial needs n+1 coefficients");
        }
        if (coeffs_[0] != 1.0) throw InvalidInput("a_{0,n} must equal 1");
        for (double v : coeffs_) {
            if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("entropy coefficients must be positive");
        }
        const auto sn = static_cast<std::size_t>(n);
        d1_.resize(sn);
        d2_.resize(sn);
        for (std::size_t j = 0; j < sn; ++j) {
            d1_[j] = static_cast<double>(j + 1) * coeffs_[j + 1];
            d2_[j] = static_cast<double>(sn - j) * coeffs_[j];
        }
        d11_.resize(sn - 1);
        d12_.resize(sn - 1);
        d22_.resize(sn - 1);
        for (std::size_t j = 0; j + 1 < sn; ++j) {
            d11_[j] = static_cast<double>((j + 1) * (j + 2)) * coeffs_[j + 2];
            d12_[j] = static_cast<double>((j + 1) * (sn - j - 1)) * coeffs_[j + 1];
            d22_[j] = static_cast<double>((sn - j) * (sn - j - 1)) * coeffs_[j];
        }
    }

    int degree() const { return n_; }
    std::span<const double> coeffs() const { return coeffs_; }
    double coeff(int j) const { return coeffs_.at(static_cast<std::size_t>(j)); }

    double value(const Vec2& x) const { return detail::eval_homogeneous(coeffs_, x[0], x[1]); }
    Vec2 gradient(const Vec2& x) const {
        return {detail::eval_homogeneous(d1_, x[0], x[1]), detail::eval_homogeneous(d2_, x[0], x[1])};
    }
    Mat2 hessian(const Vec2& x) const {
        const double h11 = detail::eval_homogeneous(d11_, x[0], x[1]);
        const double h12 = detail::eval_homogeneous(d12_, x[0], x[1]);
        const double h22 = detail::eval_homogeneous(d22_, x[0], x[1]);
        return {h11, h12, h12, h22};
    }

private:
    int n_;
    std::vector<double> coeffs_;
    std::vector<double> d1_, d2_;
    std::vector<double> d11_, d12_, d22_;
};

/// Closed form: binomial factor times the ratio product, each evaluated from
/// scratch for every j.
inline EntropyPoly build_coefficients(const Params& p, int n) {
    detail::require_degree(n);
    std::vector<double> coeffs(static_cast<std::size_t>(n) + 1);
    coeffs[0] = 1.0;
    for (int j = 1; j <= n; ++j) {
        double binom = 1.0;
        double prod = 1.0;
        for (int k = 0; k < j; ++k) {
            binom *= static_cast<double>(n - k) / static_cast<double>(k + 1);
            const double num = p.a() * k + p.c() * (n - k - 1);
            const double den = p.b() * k + p.d() * (n - k - 1);
            prod *= num / den;
        }
        coeffs[static_cast<std::size_t>(j)] = binom * prod;
    }
    return EntropyPoly(n, std::move(coeffs));
}

/// Symmetry recursion a_{j+1} = (n-j)[a j + c(n-j-1)] / ((j+1)[b j + d(n-j-1)]) a_j.
inline EntropyPoly coefficients_by_recursion(const Params& p, int n) {
    detail::require_degree(n);
    std::vector<double> coeffs(static_cast<std::size_t>(n) + 1);
    coeffs[0] = 1.0;
    for (int j = 0; j < n; ++j) {
        const double num = (n - j) * (p.a() * j + p.c() * (n - j - 1));
        const double den = (j + 1) * (p.b() * j + p.d() * (n - j - 1));
        coeffs[static_cast<std::size_t>(j) + 1] = num / den * coeffs[static_cast<std::size_t>(j)];
    }
    return EntropyPoly(n, std::move(coeffs));
}

inline double eval_phi(const EntropyPoly& poly, const Vec2& x) {
    detail::require_quadrant(x);
    return poly.value(x);
}

inline Vec2 grad_phi(const EntropyPoly& poly, const Vec2& x) { return poly.gradient(x); }

inline Mat2 hessian_phi(const EntropyPoly& poly, const Vec2& x) { return poly.hessian(x); }

/// L(r) = r ln r - r + 1 with L(0) = 1. Near r = 1 a series keeps full
/// relative accuracy, which the entropy monotonicity checks rely on at
/// steady state.
inline double log_entropy(double r) {
    if (r == 0.0) return 1.0;
    const double delta = r - 1.0;
    if (std::abs(delta) < 0.1) {
        // L(1+t) = sum_{k>=2} (-1)^k t^k / (k(k-1))
        double term = delta * delta;
        double sum = 0.0;
        for (int k = 2; k < 40; ++k) {
            const double add = term / (k * (k - 1.0));
            sum += (k % 2 == 0) ? add : -add;
            if (std::abs(add) <= 1e-18 * std::abs(sum)) break;
            term *= delta;
        }
        return sum;
    }
    return r * std::log(r) - r + 1.0;
}

inline double eval_phi1(const Params& p, const Vec2& x) {
    detail::require_quadrant(x);
    return log_entropy(x[0]) + (p.b() * p.b() / (p.a() * p.d())) * log_entropy(x[1]);
}

inline Mat2 mobility(const Params& p, const Vec2& x) {
    return {p.a() * x[0], p.b() * x[0], p.c() * x[1], p.d() * x[1]};
}

/// Continuous cutoff: identity on [0, rho-1], linear ramp to 0 on [rho-1, rho].
inline double alpha_rho(double z, double rho) {
    if (!(rho > 1.0)) throw InvalidInput("alpha_rho requires rho > 1");
    if (z <= 0.0 || z >= rho) return 0.0;
    if (z <= rho - 1.0) return z;
    return (rho - 1.0) * (rho - z);
}

inline double alpha_rho_derivative(double z, double rho) {
    if (z <= 0.0 || z >= rho) return 0.0;
    if (z <= rho - 1.0) return 1.0;
    return -(rho - 1.0);
}

/// lambda_eps(X) = 2 / (1 + exp(eps (X1 + X2))), written to stay finite for large arguments.
inline double lambda_eps(const Vec2& x, double eps) {
    const double s = eps * (x[0] + x[1]);
    if (s >= 0.0) {
        const double t = std::exp(-s);
        return 2.0 * t / (1.0 + t);
    }
    return 2.0 / (1.0 + std::exp(s));
}

/// d lambda_eps / d(X1 + X2).
inline double lambda_eps_slope(const Vec2& x, double eps) {
    const double s = eps * (x[0] + x[1]);
    const double t = std::exp(-std::abs(s));
    return -2.0 * eps * t / ((1.0 + t) * (1.0 + t));
}

inline Vec2 positive_part(const Vec2& x) { return {std::max(x[0], 0.0), std::max(x[1], 0.0)}; }

/// Truncated mobility M^rho(X) = [[a al(X1), b al(X1)], [c al(X2), d al(X2)]].
inline Mat2 mobility_truncated(const Params& p, const Vec2& x, double rho) {
    const double a1 = alpha_rho(x[0], rho);
    const double a2 = alpha_rho(x[1], rho);
    return {p.a() * a1, p.b() * a1, p.c() * a2, p.d() * a2};
}

inline void require_regularization(double eps, double rho) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("regularization requires eps in (0, 1)");
    if (!(rho > 1.0)) throw InvalidInput("regularization requires rho > 1");
}

/// M_eps^rho(X) = eps I + lambda_eps(X_+) M^rho(X).
inline Mat2 mobility_regularized(const Params& p, const Vec2& x, double eps, double rho) {
    require_regularization(eps, rho);
    return eps * Mat2::identity() + lambda_eps(positive_part(x), eps) * mobility_truncated(p, x, rho);
}

/// S = (bd/2) D^2 Phi_2 = [[ac, bc], [bc, bd]].
inline Mat2 symmetrizer(const Params& p) {
    const double bc = p.b() * p.c();
    return {p.a() * p.c(), bc, bc, p.b() * p.d()};
}

/// Lower bound bc(ad-bc)/(ac+bd) on the smallest eigenvalue of S.
inline double symmetrizer_coercivity(const Params& p) {
    return p.b() * p.c() * p.ellipticity() / (p.a() * p.c() + p.b() * p.d());
}

struct ThetaConstants {
    double theta1;
    double theta2;
};

inline ThetaConstants theta_constants(const Params& p) {
    const double ad = p.a() * p.d();
    const double bc = p.b() * p.c();
    return {p.b() * (ad + bc) / (2.0 * ad), (ad - bc) * (3.0 * ad + bc) / (4.0 * p.a() * p.a() * p.d() * p.d())};
}

/// Theta2 for which grad u . D^2 Phi_1 M grad u equals
/// (1/a)[|grad(af + Theta1 g)|^2 + Theta2 |grad g|^2] exactly: b^2 times the
/// value of theta_constants. The two coincide for b = 1; the latter is larger for b < 1.
inline double theta2_sharp(const Params& p) { return p.b() * p.b() * theta_constants(p).theta2; }

struct PhiBounds {
    double lower;
    double upper;
};

/// (cX1 + dX2)^n / d^n <= Phi_n(X) <= (aX1 + bX2)^n / b^n on the quadrant.
inline PhiBounds phi_bounds(const Params& p, int n, const Vec2& x) {
    detail::require_degree(n);
    detail::require_quadrant(x);
    const double lo = (p.c() * x[0] + p.d() * x[1]) / p.d();
    const double hi = (p.a() * x[0] + p.b() * x[1]) / p.b();
    return {std::pow(lo, n), std::pow(hi, n)};
}

/// S_n(X) = D^2 Phi_n(X) M(X).
inline Mat2 entropy_matrix(const EntropyPoly& poly, const Params& p, const Vec2& x) {
    return poly.hessian(x) * mobility(p, x);
}

/// A_{j,k} from its definition (j+2)(n-k) a_{j+2} a_k - (n-j-1)(k+1) a_{j+1} a_{k+1}.
inline double det_coefficient_direct(const EntropyPoly& poly, int j, int k) {
    const int n = poly.degree();
    if (j < 0 || k < 0 || j > n - 2 || k > n - 2) throw InvalidInput("det coefficient index out of range");
    return (j + 2.0) * (n - k) * poly.coeff(j + 2) * poly.coeff(k) -
           (n - j - 1.0) * (k + 1.0) * poly.coeff(j + 1) * poly.coeff(k + 1);
}

/// A_{j,k} = (ad-bc)(n-1)(n-k)(n-j-1)(j+1-k) / (alpha_{j+1,n} alpha_{k,n}) a_{j+1} a_k,
/// alpha_{k,n} = bk + d(n-k-1).
inline double det_coefficient(const Params& p, const EntropyPoly& poly, int j, int k) {
    const int n = poly.degree();
    if (j < 0 || k < 0 || j > n - 2 || k > n - 2) throw InvalidInput("det coefficient index out of range");
    const auto alpha = [&](int m) { return p.b() * m + p.d() * (n - m - 1); };
    return p.ellipticity() * (n - 1.0) * (n - k) * (n - j - 1.0) * (j + 1.0 - k) / (alpha(j + 1) * alpha(k)) *
           poly.coeff(j + 1) * poly.coeff(k);
}

/// det D^2 Phi_n(X) as sum_{j,k <= n-2} (j+1)(n-k-1) A_{j,k} X1^(j+k) X2^(2n-j-k-4).
inline double hessian_det_expansion(const Params& p, const EntropyPoly& poly, const Vec2& x) {
    const int n = poly.degree();
    double s = 0.0;
    for (int j = 0; j <= n - 2; ++j) {
        for (int k = 0; k <= n - 2; ++k) {
            s += (j + 1.0) * (n - k - 1.0) * det_coefficient(p, poly, j, k) * std::pow(x[0], j + k) *
                 std::pow(x[1], 2 * n - j - k - 4);
        }
    }
    return s;
}

/// ((n-1)/2) (A_{n-2,n-2} X1^(2n-4) + A_{0,0} X2^(2n-4)) <= det D^2 Phi_n(X).
inline double hessian_det_lower_bound(const Params& p, const EntropyPoly& poly, const Vec2& x) {
    const int n = poly.degree();
    const double e = 2.0 * n - 4.0;
    const double top = det_coefficient(p, poly, n - 2, n - 2);
    const double bottom = det_coefficient(p, poly, 0, 0);
    return 0.5 * (n - 1.0) * (top * std::pow(x[0], e) + bottom * std::pow(x[1], e));
}

}  // namespace crossdiff
