#pragma once

/**
 * @file properties.hpp
 * @brief Sampling checks of the algebraic structure of Phi_n and the mobility matrices.
 *
 * Each check draws points (and, where relevant, degrees) from a seeded
 * generator, evaluates one inequality or identity, and returns how many
 * samples were checked, how many failed, and the worst relative margin.
 * No PDE is solved here.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "crossdiff/entropy.hpp"

namespace crossdiff::properties {

using Rng = std::mt19937_64;

struct PropertyResult {
    std::string name;
    std::size_t checks = 0;
    std::size_t failures = 0;
    /// Worst observed violation measure; <= 0 when every sample passed.
    double worst = -std::numeric_limits<double>::infinity();
    double seconds = 0.0;

    bool passed() const { return checks > 0 && failures == 0; }

    void record(double excess) {
        ++checks;
        worst = std::max(worst, excess);
        if (!(excess <= 0.0)) ++failures;
    }
};

/// a, b, c, d log-uniform in [0.1, 10], redrawn until ad > bc.
inline Params random_params(Rng& rng) {
    std::uniform_real_distribution<double> logu(std::log(0.1), std::log(10.0));
    for (;;) {
        const double a = std::exp(logu(rng)), b = std::exp(logu(rng)), c = std::exp(logu(rng)), d = std::exp(logu(rng));
        if (a * d > b * c) return Params(a, b, c, d);
    }
}

inline std::vector<Params> random_params(Rng& rng, std::size_t count) {
    std::vector<Params> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(random_params(rng));
    return out;
}

inline Vec2 random_point(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    const double x1 = u(rng);
    return {x1, u(rng)};
}

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Closed form vs recursion, all j and 2 <= n <= n_max, plus positivity.
inline PropertyResult check_coefficient_oracle(std::span<const Params> params, int n_max, double rel_tol = 1e-12) {
    detail::Stopwatch sw;
    PropertyResult r{"coefficient_oracle_equivalence"};
    for (const Params& p : params) {
        for (int n = 2; n <= n_max; ++n) {
            const EntropyPoly closed = build_coefficients(p, n);
            const EntropyPoly rec = coefficients_by_recursion(p, n);
            for (int j = 0; j <= n; ++j) {
                const double x = closed.coeff(j), y = rec.coeff(j);
                const double rel = std::abs(x - y) / std::max(std::abs(x), std::abs(y));
                r.record(x > 0.0 && y > 0.0 ? rel - rel_tol : 1.0);
            }
        }
    }
    r.seconds = sw.seconds();
    return r;
}

/// ||S_n - S_n^T||_max <= rel_tol ||S_n||_max with S_n = D^2 Phi_n M.
inline PropertyResult check_sn_symmetry(std::span<const Params> params, int n_lo, int n_hi, std::size_t samples,
                                        Rng& rng, double lo = 0.0, double hi = 10.0, double rel_tol = 1e-12) {
    detail::Stopwatch sw;
    PropertyResult r{"sn_symmetry"};
    for (const Params& p : params) {
        for (int n = n_lo; n <= n_hi; ++n) {
            const EntropyPoly poly = build_coefficients(p, n);
            for (std::size_t s = 0; s < samples; ++s) {
                const Mat2 sn = entropy_matrix(poly, p, random_point(rng, lo, hi));
                const double scale = sn.max_abs();
                r.record(scale == 0.0 ? 0.0 : sn.asymmetry() / scale - rel_tol);
            }
        }
    }
    r.seconds = sw.seconds();
    return r;
}

/// Smallest eigenvalue of D^2 Phi_n strictly positive away from the origin.
inline PropertyResult check_hessian_spd(std::span<const Params> params, int n_lo, int n_hi, std::size_t samples,
                                        Rng& rng, double lo = 1e-3, double hi = 10.0) {
    detail::Stopwatch sw;
    PropertyResult r{"hessian_positive_definite"};
    for (const Params& p : params) {
        for (int n = n_lo; n <= n_hi; ++n) {
            const EntropyPoly poly = build_coefficients(p, n);
            for (std::size_t s = 0; s < samples; ++s) {
                const Mat2 h = poly.hessian(random_point(rng, lo, hi));
                const SymmetricEigenvalues ev = eigenvalues_symmetric(h);
                r.record(ev.lo > 0.0 ? -ev.lo / ev.hi : 1.0);
            }
        }
    }
    r.seconds = sw.seconds();
    return r;
}

/// det D^2 Phi_n(X) >= ((n-1)/2)(A_{n-2,n-2} X1^(2n-4) + A_{0,0} X2^(2n-4)),
/// the A_{j,k} expansion of det D^2 Phi_n reproduces the determinant, and the
/// closed form of A_{j,k} matches its definition.
inline PropertyResult check_det_lower_bound(std::span<const Params> params, int n_lo, int n_hi, std::size_t samples,
                                            Rng& rng, double lo = 1e-3, double hi = 10.0, double rel_tol = 1e-10) {
    detail::Stopwatch sw;
    PropertyResult r{"hessian_det_lower_bound"};
    for (const Params& p : params) {
        for (int n = n_lo; n <= n_hi; ++n) {
            const EntropyPoly poly = build_coefficients(p, n);
            for (int corner : {0, n - 2}) {
                const double closed = det_coefficient(p, poly, corner, corner);
                const double direct = det_coefficient_direct(poly, corner, corner);
                r.record(closed > 0.0 ? std::abs(closed - direct) / closed - rel_tol : 1.0);
            }
            for (std::size_t s = 0; s < samples; ++s) {
                const Vec2 x = random_point(rng, lo, hi);
                const Mat2 h = poly.hessian(x);
                const double det = h.det();
                const double bound = hessian_det_lower_bound(p, poly, x);
                const double scale = std::max(h.m11 * h.m22, 1e-300);
                r.record((bound - det) / scale - rel_tol);
                r.record(std::abs(hessian_det_expansion(p, poly, x) - det) / scale - rel_tol);
            }
        }
    }
    r.seconds = sw.seconds();
    return r;
}

/// S_n(X) has positive trace and determinant on the open quadrant.
inline PropertyResult check_sn_spd(std::span<const Params> params, int n_lo, int n_hi, std::size_t samples, Rng& rng,
                                   double lo = 1e-3, double hi = 10.0) {
    detail::Stopwatch sw;
    PropertyResult r{"sn_positive_definite"};
    for (const Params& p : params) {
        for (int n = n_lo; n <= n_hi; ++n) {
            const EntropyPoly poly = build_coefficients(p, n);
            for (std::size_t s = 0; s < samples; ++s) {
                const Mat2 sn = entropy_matrix(poly, p, random_point(rng, lo, hi));
                const double tr = sn.trace();
                const double det = sn.symmetric_part().det();
                r.record(tr > 0.0 && det > 0.0 ? -det / (tr * tr) : 1.0);
            }
        }
    }
    r.seconds = sw.seconds();
    return r;
}

/// (cX1+dX2)^n/d^n <= Phi_n(X) <= (aX1+bX2)^n/b^n, to relative round-off rel_tol.
inline PropertyResult check_norm_sandwich(std::span<const Params> params, int n_lo, int n_hi, std::size_t samples,
                                          Rng& rng, double lo = 0.0, double hi = 10.0, double rel_tol = 1e-13) {
    detail::Stopwatch sw;
    PropertyResult r{"norm_sandwich"};
    for (const Params& p : params) {
        for (int n = n_lo; n <= n_hi; ++n) {
            const EntropyPoly poly = build_coefficients(p, n);
            for (std::size_t s = 0; s < samples; ++s) {
                const Vec2 x = random_point(rng, lo, hi);
                const double v = eval_phi(poly, x);
                const PhiBounds b = phi_bounds(p, n, x);
                const double scale = std::max(v, 1e-300);
                r.record(std::max(b.lower - v, v - b.upper) / scale - rel_tol);
            }
        }
    }
    r.seconds = sw.seconds();
    return r;
}

/// Central differences (h = 1e-6) of Phi_n and of grad Phi_n against the
/// analytic gradient and Hessian on [0.1, 10]^2.
inline PropertyResult check_derivatives(std::span<const Params> params, int n_lo, int n_hi, std::size_t samples,
                                        Rng& rng, double grad_tol = 1e-6, double hess_tol = 1e-5) {
    detail::Stopwatch sw;
    PropertyResult r{"derivative_consistency"};
    const double h = 1e-6;
    for (const Params& p : params) {
        for (int n = n_lo; n <= n_hi; ++n) {
            const EntropyPoly poly = build_coefficients(p, n);
            for (std::size_t s = 0; s < samples; ++s) {
                const Vec2 x = random_point(rng, 0.1, 10.0);
                const Vec2 g = poly.gradient(x);
                const Mat2 hs = poly.hessian(x);
                const double gx = (poly.value({x[0] + h, x[1]}) - poly.value({x[0] - h, x[1]})) / (2 * h);
                const double gy = (poly.value({x[0], x[1] + h}) - poly.value({x[0], x[1] - h})) / (2 * h);
                const double gscale = std::max(std::abs(g[0]), std::abs(g[1]));
                r.record(std::max(std::abs(gx - g[0]), std::abs(gy - g[1])) / gscale - grad_tol);

                const Vec2 gxp = poly.gradient({x[0] + h, x[1]}), gxm = poly.gradient({x[0] - h, x[1]});
                const Vec2 gyp = poly.gradient({x[0], x[1] + h}), gym = poly.gradient({x[0], x[1] - h});
                const Mat2 fd{(gxp[0] - gxm[0]) / (2 * h), (gyp[0] - gym[0]) / (2 * h), (gxp[1] - gxm[1]) / (2 * h),
                              (gyp[1] - gym[1]) / (2 * h)};
                r.record((fd - hs).max_abs() / hs.max_abs() - hess_tol);
            }
        }
    }
    r.seconds = sw.seconds();
    return r;
}

/// Entry bounds 0 <= m - eps delta <= 2 rho max{a,b,c,d}, the vanishing
/// off-diagonal patterns below 0 and above rho, and
/// <S M_eps^rho(X) xi, xi> >= eps bc(ad-bc)/(ac+bd) |xi|^2.
inline PropertyResult check_regularized_bounds(std::span<const Params> params, std::size_t samples, Rng& rng) {
    detail::Stopwatch sw;
    PropertyResult r{"regularized_mobility_bounds"};
    std::uniform_real_distribution<double> ueps(1e-4, 0.999);
    std::uniform_real_distribution<double> urho(1.01, 50.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::acos(-1.0));
    for (const Params& p : params) {
        const Mat2 s = symmetrizer(p);
        const double coercive = symmetrizer_coercivity(p);
        for (std::size_t k = 0; k < samples; ++k) {
            const double eps = ueps(rng);
            const double rho = urho(rng);
            const Vec2 x = random_point(rng, -0.5 * rho, 1.5 * rho);
            const Mat2 m = mobility_regularized(p, x, eps, rho);
            const double cap = 2.0 * rho * p.max_coefficient();
            const Mat2 core = m - eps * Mat2::identity();
            const double tiny = 1e-12 * cap;
            for (double e : {core.m11, core.m12, core.m21, core.m22}) r.record(std::max(-e - tiny, e - cap - tiny));
            if (x[0] < 0.0 || x[0] > rho) r.record(std::abs(m.m12) + std::max(0.0, m.m12 - m.m11));
            if (x[1] < 0.0 || x[1] > rho) r.record(std::abs(m.m21) + std::max(0.0, m.m21 - m.m22));
            const double th = angle(rng);
            const Vec2 xi{std::cos(th), std::sin(th)};
            const double q = dot(s * m * xi, xi);
            const double lower = eps * coercive;
            r.record((lower - q) / lower - 1e-12);
        }
    }
    r.seconds = sw.seconds();
    return r;
}

/// det(S M(X)) = bc (ad-bc)^2 X1 X2 and S M(X) symmetric.
inline PropertyResult check_symmetrizer_identity(std::span<const Params> params, std::size_t samples, Rng& rng) {
    detail::Stopwatch sw;
    PropertyResult r{"symmetrizer_identity"};
    for (const Params& p : params) {
        const Mat2 s = symmetrizer(p);
        for (std::size_t k = 0; k < samples; ++k) {
            const Vec2 x = random_point(rng, 0.0, 10.0);
            const Mat2 sm = s * mobility(p, x);
            const double expected = p.b() * p.c() * p.ellipticity() * p.ellipticity() * x[0] * x[1];
            const double scale = std::max(sm.m11 * sm.m22, 1e-300);
            r.record(std::abs(sm.det() - expected) / scale - 1e-12);
            r.record(sm.asymmetry() / std::max(sm.max_abs(), 1e-300) - 1e-14);
        }
    }
    r.seconds = sw.seconds();
    return r;
}

struct SuiteOptions {
    int n_max = 10;
    std::size_t samples = 1000;
    std::uint64_t seed = 7;
    std::size_t param_draws = 20;
};

/// Every property above, with the given sample budget.
inline std::vector<PropertyResult> run_suite(const SuiteOptions& o) {
    if (o.n_max < 2) throw InvalidInput("property suite needs n_max >= 2");
    Rng rng(o.seed);
    const std::vector<Params> params = random_params(rng, o.param_draws);
    std::vector<PropertyResult> out;
    out.push_back(check_coefficient_oracle(params, std::max(o.n_max, 2)));
    out.push_back(check_sn_symmetry(params, 2, o.n_max, o.samples, rng));
    out.push_back(check_hessian_spd(params, 2, o.n_max, o.samples, rng));
    out.push_back(check_det_lower_bound(params, 2, o.n_max, o.samples, rng));
    out.push_back(check_sn_spd(params, 2, o.n_max, o.samples, rng));
    out.push_back(check_norm_sandwich(params, 2, o.n_max, o.samples, rng));
    out.push_back(check_derivatives(params, 2, o.n_max, std::max<std::size_t>(1, o.samples / 10), rng));
    out.push_back(check_regularized_bounds(params, o.samples, rng));
    out.push_back(check_symmetrizer_identity(params, o.samples, rng));
    return out;
}

}  // namespace crossdiff::properties
