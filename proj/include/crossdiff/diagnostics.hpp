#pragma once

/**
 * @file diagnostics.hpp
 * @brief Quantities controlled by the entropy structure, evaluated on a discrete state.
 *
 * E_n(u) = int Phi_n(u) dx (midpoint rule), the L-infinity size of f + g,
 * the discrete dissipation
 *
 *     D(u) = (1/a) sum_faces [ |grad(a f + Theta1 g)|^2 + Theta2 |grad g|^2 ] |face|,
 *
 * and the steady-state flux residual. Gradients use the same face operator
 * as the scheme so D is the quantity the scheme actually dissipates.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "crossdiff/entropy.hpp"
#include "crossdiff/flux.hpp"
#include "crossdiff/grid.hpp"

namespace crossdiff::diagnostics {

/// Cells slightly below zero (solver round-off) are accepted up to this magnitude.
inline constexpr double kNegativeTolerance = 1e-12;

namespace detail {
inline double clip(double v) { return v < 0.0 ? 0.0 : v; }
}  // namespace detail

/// int Phi_n(u) for a single n >= 1.
template <CellGrid G>
double entropy(const G& grid, const State& u, const Params& p, int n) {
    require_matches(grid, u);
    require_nonnegative(u, kNegativeTolerance);
    if (n == 1) {
        return integrate(grid, [&](std::size_t i) {
            return eval_phi1(p, {detail::clip(u.f[i]), detail::clip(u.g[i])});
        });
    }
    const EntropyPoly poly = build_coefficients(p, n);
    return integrate(grid, [&](std::size_t i) { return poly.value({detail::clip(u.f[i]), detail::clip(u.g[i])}); });
}

/// (E_1, ..., E_{n_max}).
template <CellGrid G>
std::vector<double> entropy_trace(const G& grid, const State& u, const Params& p, int n_max) {
    if (n_max < 1) throw InvalidInput("n_max must be >= 1");
    require_matches(grid, u);
    require_nonnegative(u, kNegativeTolerance);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_max));
    out.push_back(entropy(grid, u, p, 1));
    for (int n = 2; n <= n_max; ++n) out.push_back(entropy(grid, u, p, n));
    return out;
}

inline double linf_sum(const State& u) {
    double m = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, u.f[i] + u.g[i]);
    return m;
}

template <CellGrid G>
double dissipation(const G& grid, const State& u, const Params& p, const ThetaConstants& th) {
    require_matches(grid, u);
    double s = 0.0;
    for (std::size_t k = 0; k < grid.num_faces(); ++k) {
        const Face& fc = grid.face(k);
        if (fc.boundary) continue;
        const double df = (u.f[fc.upper] - u.f[fc.lower]) / fc.spacing;
        const double dg = (u.g[fc.upper] - u.g[fc.lower]) / fc.spacing;
        const double lead = p.a() * df + th.theta1 * dg;
        s += (lead * lead + th.theta2 * dg * dg) * fc.measure();
    }
    return s / p.a();
}

template <CellGrid G>
double dissipation(const G& grid, const State& u, const Params& p) {
    return dissipation(grid, u, p, theta_constants(p));
}

/// max-norm of the discrete fluxes f grad(af+bg) and g grad(cf+dg).
template <CellGrid G>
double steady_residual(const G& grid, const State& u, const Params& p, FaceMobility mode = FaceMobility::upwind) {
    require_matches(grid, u);
    const auto fluxes = exact_fluxes(grid, u, p, mode);
    double m = 0.0;
    for (const auto& comp : fluxes) {
        for (double v : comp) m = std::max(m, std::abs(v));
    }
    return m;
}

struct Sandwich {
    double lower;
    double value;
    double upper;
};

/// int (cf+dg)^n/d^n <= E_n(u) <= int (af+bg)^n/b^n.
template <CellGrid G>
Sandwich entropy_sandwich(const G& grid, const State& u, const Params& p, int n) {
    require_matches(grid, u);
    require_nonnegative(u, kNegativeTolerance);
    const EntropyPoly poly = build_coefficients(p, n);
    double lo = 0.0, val = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Vec2 x{detail::clip(u.f[i]), detail::clip(u.g[i])};
        const PhiBounds b = phi_bounds(p, n, x);
        lo += b.lower;
        val += poly.value(x);
        hi += b.upper;
    }
    const double vol = grid.cell_volume();
    return {lo * vol, val * vol, hi * vol};
}

/// L_n norm of c1 f + c2 g.
template <CellGrid G>
double combination_norm(const G& grid, const State& u, double c1, double c2, int n) {
    const double s = integrate(grid, [&](std::size_t i) { return std::pow(std::abs(c1 * u.f[i] + c2 * u.g[i]), n); });
    return std::pow(s, 1.0 / n);
}

struct NormChain {
    double lhs;  // ||c f + d g||_n after the step
    double rhs;  // (d/b) ||a F + b G||_n before it
};

/// Combines the sandwich with E_n decay: ||cf+dg||_n <= (d/b) ||aF+bG||_n.
template <CellGrid G>
NormChain norm_chain(const G& grid, const State& before, const State& after, const Params& p, int n) {
    return {combination_norm(grid, after, p.c(), p.d(), n),
            (p.d() / p.b()) * combination_norm(grid, before, p.a(), p.b(), n)};
}

}  // namespace crossdiff::diagnostics
