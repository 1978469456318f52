#pragma once

/**
 * @file scheme.hpp
 * @brief Implicit Euler step and time marching for the cross-diffusion system.
 *
 * One step solves, on a cell-centered finite-volume grid,
 *
 *     u - tau div(M(u) grad u) = u_prev,
 *
 * where the flux of component k through a face is
 *
 *     F_k = mu_k (C_k . grad u) + lift grad u_k,
 *
 * C = [[a, b], [c, d]], mu_k the face value of the row mobility (u_k for the
 * exact system, lambda_eps(u_+) alpha_rho(u_k) for the regularized one) and
 * lift = eps for the regularized system, 0 otherwise. The nonlinear system is
 * solved by Picard iteration (face mobilities frozen, coupled block system
 * solved directly) or by Newton's method with an analytic Jacobian and
 * Armijo backtracking down to t = 1/8, with a Picard step whenever that
 * finds no descent. Unknowns are interleaved (f_0, g_0, f_1, g_1, ...),
 * which keeps the linear systems banded.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "crossdiff/banded.hpp"
#include "crossdiff/diagnostics.hpp"
#include "crossdiff/entropy.hpp"
#include "crossdiff/error.hpp"
#include "crossdiff/flux.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/params.hpp"

namespace crossdiff {

enum class Method { picard, newton };

struct Regularization {
    double eps;
    double rho;
};

struct SolverOptions {
    Method method = Method::picard;
    int max_iters = 200;
    /// Max-norm of the step residual, in units of the field values.
    double tol = 1e-10;
    FaceMobility mobility_face = FaceMobility::upwind;
    std::optional<Regularization> regularization;
    bool clamp_negative = false;
    /// Entropies E_1..E_{n_max} recorded in every report.
    int n_max = 6;

    void validate() const {
        if (!(tol > 0.0)) throw InvalidInput("solver tolerance must be positive");
        if (max_iters < 1) throw InvalidInput("max_iters must be >= 1");
        if (n_max < 1) throw InvalidInput("n_max must be >= 1");
        if (regularization) require_regularization(regularization->eps, regularization->rho);
    }
};

struct StepReport {
    int iterations = 0;
    double residual = 0.0;
    double mass_f = 0.0;
    double mass_g = 0.0;
    std::vector<double> entropies;  // E_1 .. E_{n_max}
    double dissipation = 0.0;
    double linf = 0.0;
    double min_value = 0.0;
    double max_value = 0.0;
    /// Mass added by clamp_negative (zero when clamping is off).
    double clamped_mass = 0.0;
    /// max(0, max u - rho) for regularized steps.
    double cap_excess = 0.0;
};

struct StepResult {
    State state;
    StepReport report;
};

/// Fills every state-derived field of a report.
template <CellGrid G>
StepReport describe(const G& grid, const State& u, const Params& p, int n_max) {
    StepReport r;
    r.mass_f = integrate(grid, std::span<const double>(u.f));
    r.mass_g = integrate(grid, std::span<const double>(u.g));
    r.min_value = u.min_value();
    r.max_value = u.max_value();
    State clipped = u;
    for (auto* comp : {&clipped.f, &clipped.g}) {
        for (double& v : *comp) v = std::max(v, 0.0);
    }
    r.entropies = diagnostics::entropy_trace(grid, clipped, p, n_max);
    r.dissipation = diagnostics::dissipation(grid, u, p);
    r.linf = diagnostics::linf_sum(u);
    return r;
}

namespace detail {

struct RowMobility {
    double value;
    Vec2 gradient;
};

/// mu_k = (u_k)_+.
struct ExactRows {
    double lift() const { return 0.0; }
    RowMobility row(int k, const Vec2& u) const {
        const double v = u[static_cast<std::size_t>(k)];
        Vec2 grad{0.0, 0.0};
        if (v > 0.0) grad[static_cast<std::size_t>(k)] = 1.0;
        return {std::max(v, 0.0), grad};
    }
};

/// mu_k = lambda_eps(u_+) alpha_rho(u_k), lift eps.
struct RegularizedRows {
    double eps;
    double rho;

    double lift() const { return eps; }
    RowMobility row(int k, const Vec2& u) const {
        const Vec2 up = positive_part(u);
        const double lam = lambda_eps(up, eps);
        const double slope = lambda_eps_slope(up, eps);
        const double z = u[static_cast<std::size_t>(k)];
        const double al = alpha_rho(z, rho);
        Vec2 grad{u[0] > 0.0 ? slope * al : 0.0, u[1] > 0.0 ? slope * al : 0.0};
        grad[static_cast<std::size_t>(k)] += lam * alpha_rho_derivative(z, rho);
        return {lam * al, grad};
    }
};

inline std::vector<double> interleave(const State& u) {
    std::vector<double> x(2 * u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        x[2 * i] = u.f[i];
        x[2 * i + 1] = u.g[i];
    }
    return x;
}

inline State deinterleave(const std::vector<double>& x) {
    State u;
    const std::size_t n = x.size() / 2;
    u.f.resize(n);
    u.g.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        u.f[i] = x[2 * i];
        u.g[i] = x[2 * i + 1];
    }
    return u;
}

inline double max_abs(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) {
        if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        m = std::max(m, std::abs(v));
    }
    return m;
}

inline double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

/// Residual, Picard matrix and Jacobian of one implicit step.
template <CellGrid G, class Rows>
class StepSystem {
public:
    StepSystem(const G& grid, const Params& p, Rows rows, double tau, FaceMobility mode)
        : grid_(grid), p_(p), rows_(rows), tau_(tau), mode_(mode) {}

    std::size_t size() const { return 2 * grid_.num_cells(); }

    /// R(x) = x - prev - tau div F(x).
    std::vector<double> residual(const std::vector<double>& x, const std::vector<double>& prev) const {
        std::vector<double> r(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - prev[i];
        visit_faces(x, [&](const FaceTerms& t) {
            for (std::size_t c = 0; c < 2; ++c) {
                r[2 * t.lower + c] -= t.scale * t.flux[c];
                r[2 * t.upper + c] += t.scale * t.flux[c];
            }
        });
        return r;
    }

    /// Linear operator with face mobilities frozen at x: A(x) y = prev.
    BandedMatrix picard_matrix(const std::vector<double>& x) const { return assemble(x, false); }

    /// dR/dx at x (upwind switches treated as locally constant).
    BandedMatrix jacobian(const std::vector<double>& x) const { return assemble(x, true); }

private:
    struct FaceTerms {
        std::size_t lower, upper;
        double scale;               // tau * area / volume
        double spacing;
        std::array<double, 2> flux;
        std::array<double, 2> mu;
        std::array<double, 2> drive;
        std::array<FaceWeights, 2> weights;
        std::array<RowMobility, 2> row_lower, row_upper;
    };

    template <class Visit>
    void visit_faces(const std::vector<double>& x, Visit&& visit) const {
        const double vol = grid_.cell_volume();
        const double lift = rows_.lift();
        for (std::size_t k = 0; k < grid_.num_faces(); ++k) {
            const Face& fc = grid_.face(k);
            if (fc.boundary) continue;
            FaceTerms t;
            t.lower = fc.lower;
            t.upper = fc.upper;
            t.scale = tau_ * fc.area / vol;
            t.spacing = fc.spacing;
            const Vec2 ul{x[2 * fc.lower], x[2 * fc.lower + 1]};
            const Vec2 ur{x[2 * fc.upper], x[2 * fc.upper + 1]};
            const Vec2 delta{ur[0] - ul[0], ur[1] - ul[1]};
            for (std::size_t c = 0; c < 2; ++c) {
                const int ci = static_cast<int>(c);
                t.drive[c] = dot(p_.coupling_row(ci), delta);
                t.weights[c] = face_weights(mode_, t.drive[c]);
                t.row_lower[c] = rows_.row(ci, ul);
                t.row_upper[c] = rows_.row(ci, ur);
                t.mu[c] = t.weights[c].lower * t.row_lower[c].value + t.weights[c].upper * t.row_upper[c].value;
                t.flux[c] = (t.mu[c] * t.drive[c] + lift * delta[c]) / fc.spacing;
            }
            visit(t);
        }
    }

    BandedMatrix assemble(const std::vector<double>& x, bool newton) const {
        const std::size_t band = 2 * grid_.coupling_width() + 1;
        BandedMatrix m(size(), band, band);
        for (std::size_t i = 0; i < size(); ++i) m.add(i, i, 1.0);
        const double lift = rows_.lift();
        visit_faces(x, [&](const FaceTerms& t) {
            for (std::size_t c = 0; c < 2; ++c) {
                const Vec2 coupling = p_.coupling_row(static_cast<int>(c));
                // dF_c/du_upper[j]; dF_c/du_lower[j] is its negative for the linear part.
                std::array<double, 2> d_upper{}, d_lower{};
                for (std::size_t j = 0; j < 2; ++j) {
                    const double lin = (t.mu[c] * coupling[j] + (j == c ? lift : 0.0)) / t.spacing;
                    d_upper[j] = lin;
                    d_lower[j] = -lin;
                    if (newton) {
                        const double dd = t.drive[c] / t.spacing;
                        d_lower[j] += t.weights[c].lower * t.row_lower[c].gradient[j] * dd;
                        d_upper[j] += t.weights[c].upper * t.row_upper[c].gradient[j] * dd;
                    }
                }
                for (std::size_t j = 0; j < 2; ++j) {
                    m.add(2 * t.lower + c, 2 * t.lower + j, -t.scale * d_lower[j]);
                    m.add(2 * t.lower + c, 2 * t.upper + j, -t.scale * d_upper[j]);
                    m.add(2 * t.upper + c, 2 * t.lower + j, t.scale * d_lower[j]);
                    m.add(2 * t.upper + c, 2 * t.upper + j, t.scale * d_upper[j]);
                }
            }
        });
        return m;
    }

    const G& grid_;
    const Params& p_;
    Rows rows_;
    double tau_;
    FaceMobility mode_;
};

struct SolveOutcome {
    std::vector<double> x;
    int iterations;
    double residual;
};

template <CellGrid G, class Rows>
SolveOutcome solve_step(const StepSystem<G, Rows>& sys, const std::vector<double>& prev, const SolverOptions& opts) {
    std::vector<double> x = prev;
    std::vector<double> r = sys.residual(x, prev);
    double res = max_abs(r);
    int it = 0;
    while (res > opts.tol) {
        if (it >= opts.max_iters) {
            std::ostringstream os;
            os << "residual " << res << " above tolerance " << opts.tol << " after " << it << " iterations";
            throw NonConvergence(os.str());
        }
        if (opts.method == Method::picard) {
            x = sys.picard_matrix(x).solve(prev);
            r = sys.residual(x, prev);
        } else {
            std::vector<double> rhs(r.size());
            for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
            const std::vector<double> delta = sys.jacobian(x).solve(std::move(rhs));
            const double base = norm2(r);
            double t = 1.0;
            std::vector<double> trial(x.size());
            std::vector<double> rt;
            bool accepted = false;
            for (int back = 0; back < 4 && !accepted; ++back) {
                for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + t * delta[i];
                rt = sys.residual(trial, prev);
                accepted = norm2(rt) <= (1.0 - 1e-4 * t) * base;
                t *= 0.5;
            }
            if (accepted) {
                x = trial;
                r = std::move(rt);
            } else {
                // Newton direction needs heavy damping: take a Picard step instead.
                x = sys.picard_matrix(x).solve(prev);
                r = sys.residual(x, prev);
            }
        }
        res = max_abs(r);
        ++it;
        if (!std::isfinite(res)) throw NonConvergence("non-finite residual in nonlinear iteration");
    }
    return {std::move(x), it, res};
}

template <CellGrid G, class Rows>
StepResult finish_step(const G& grid, const State& prev, const Params& p, const SolverOptions& opts, Rows rows,
                       double tau) {
    const StepSystem<G, Rows> sys(grid, p, rows, tau, opts.mobility_face);
    const std::vector<double> prev_x = interleave(prev);
    SolveOutcome out = solve_step(sys, prev_x, opts);
    State u = deinterleave(out.x);
    double clamped = 0.0;
    if (opts.clamp_negative) {
        for (auto* comp : {&u.f, &u.g}) {
            for (double& v : *comp) {
                if (v < 0.0) {
                    clamped -= v;
                    v = 0.0;
                }
            }
        }
        clamped *= grid.cell_volume();
    }
    StepReport report = describe(grid, u, p, opts.n_max);
    report.iterations = out.iterations;
    report.residual = out.residual;
    report.clamped_mass = clamped;
    return {std::move(u), std::move(report)};
}

template <CellGrid G>
void check_step_inputs(const G& grid, const State& prev, double tau) {
    require_matches(grid, prev);
    require_nonnegative(prev, diagnostics::kNegativeTolerance);
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("time step tau must be positive");
}

}  // namespace detail

/// Regularized step with M_eps^rho in place of M. Requires rho >= max{1, ||prev||_inf}.
template <CellGrid G>
StepResult step_regularized(const G& grid, const State& prev, double tau, const Params& p, double eps, double rho,
                            const SolverOptions& opts) {
    opts.validate();
    require_regularization(eps, rho);
    detail::check_step_inputs(grid, prev, tau);
    const double sup = prev.max_value();
    if (rho < std::max(1.0, sup)) {
        std::ostringstream os;
        os << "rho = " << rho << " is below max{1, ||prev||_inf} = " << std::max(1.0, sup);
        throw RhoTooSmall(os.str());
    }
    StepResult res = detail::finish_step(grid, prev, p, opts, detail::RegularizedRows{eps, rho}, tau);
    res.report.cap_excess = std::max(0.0, res.state.max_value() - rho);
    return res;
}

/// One implicit step of the exact system; dispatches to step_regularized when
/// opts.regularization is set.
template <CellGrid G>
StepResult step(const G& grid, const State& prev, double tau, const Params& p, const SolverOptions& opts) {
    opts.validate();
    if (opts.regularization) {
        return step_regularized(grid, prev, tau, p, opts.regularization->eps, opts.regularization->rho, opts);
    }
    detail::check_step_inputs(grid, prev, tau);
    return detail::finish_step(grid, prev, p, opts, detail::ExactRows{}, tau);
}

struct Frame {
    double time = 0.0;
    State state;
    StepReport report;
};

struct RunFailure {
    std::size_t step_index;  // 1-based index of the step that failed
    double time;             // time reached before the failure
    ErrorKind kind;
    std::string message;
};

struct Trajectory {
    std::vector<Frame> frames;  // frames[0] is the initial state
    std::optional<RunFailure> failure;

    bool ok() const { return !failure.has_value(); }
    const Frame& last() const { return frames.back(); }
};

using StepObserver = std::function<void(const Frame&)>;

struct RunOptions {
    /// Keep every state in the trajectory; when false only the first and last
    /// states are kept (reports are always kept).
    bool keep_states = true;
};

/// Number of fixed steps of size tau needed to reach t_final; the last one is
/// shortened when t_final is not a multiple of tau.
inline std::size_t step_count(double tau, double t_final) {
    const double ratio = t_final / tau;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) return static_cast<std::size_t>(std::max(1.0, rounded));
    return static_cast<std::size_t>(std::ceil(ratio));
}

/// Piecewise-constant-in-time marching: u(t) = u_l on ((l-1) tau, l tau].
template <CellGrid G>
Trajectory run(const G& grid, const State& initial, double tau, double t_final, const Params& p,
               const SolverOptions& opts, std::span<const StepObserver> observers = {}, RunOptions run_opts = {}) {
    if (!(t_final > 0.0) || !std::isfinite(t_final)) throw InvalidInput("t_final must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("time step tau must be positive");
    opts.validate();
    require_matches(grid, initial);
    require_nonnegative(initial, diagnostics::kNegativeTolerance);

    Trajectory traj;
    Frame first{0.0, initial, describe(grid, initial, p, opts.n_max)};
    for (const auto& obs : observers) obs(first);
    traj.frames.push_back(std::move(first));

    const std::size_t steps = step_count(tau, t_final);
    State current = initial;
    double time = 0.0;
    for (std::size_t l = 1; l <= steps; ++l) {
        const double dt = (l == steps) ? t_final - tau * static_cast<double>(steps - 1) : tau;
        try {
            StepResult res = step(grid, current, dt, p, opts);
            time = (l == steps) ? t_final : tau * static_cast<double>(l);
            current = res.state;
            Frame frame{time, std::move(res.state), std::move(res.report)};
            for (const auto& obs : observers) obs(frame);
            if (!run_opts.keep_states && traj.frames.size() > 1) traj.frames.back().state = State{};
            traj.frames.push_back(std::move(frame));
        } catch (const Error& e) {
            traj.failure = RunFailure{l, time, e.kind(), e.what()};
            break;
        }
    }
    return traj;
}

}  // namespace crossdiff
