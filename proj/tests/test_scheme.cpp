#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "crossdiff/monitor.hpp"
#include "crossdiff/properties.hpp"
#include "crossdiff/scheme.hpp"

using namespace crossdiff;

namespace {

const Params kBase(2.0, 1.0, 1.0, 1.0);

State cosine_state(const Grid1D& g, double f0, double famp, double g0, double gamp, double k = 1.0) {
    State u;
    for (std::size_t i = 0; i < g.num_cells(); ++i) {
        const double x = g.cell_center(i)[0];
        u.f.push_back(f0 + famp * std::cos(k * std::numbers::pi * x / g.length()));
        u.g.push_back(g0 + gamp * std::cos(k * std::numbers::pi * x / g.length()));
    }
    return u;
}

double max_diff(const State& x, const State& y) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max({m, std::abs(x.f[i] - y.f[i]), std::abs(x.g[i] - y.g[i])});
    return m;
}

// Hand-written 1D residual of u - tau div(F(u)) = prev with upwind faces.
double residual_1d(const Grid1D& grid, const State& u, const State& prev, double tau, const Params& p) {
    const std::size_t n = grid.num_cells();
    const double h = grid.dx();
    std::vector<double> ff(n + 1, 0.0), fg(n + 1, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        const double pf = p.a() * (u.f[k] - u.f[k - 1]) + p.b() * (u.g[k] - u.g[k - 1]);
        const double pg = p.c() * (u.f[k] - u.f[k - 1]) + p.d() * (u.g[k] - u.g[k - 1]);
        const double mf = pf > 0 ? u.f[k] : (pf < 0 ? u.f[k - 1] : 0.5 * (u.f[k] + u.f[k - 1]));
        const double mg = pg > 0 ? u.g[k] : (pg < 0 ? u.g[k - 1] : 0.5 * (u.g[k] + u.g[k - 1]));
        ff[k] = mf * pf / h;
        fg[k] = mg * pg / h;
    }
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        r = std::max(r, std::abs(u.f[i] - prev.f[i] - tau * (ff[i + 1] - ff[i]) / h));
        r = std::max(r, std::abs(u.g[i] - prev.g[i] - tau * (fg[i + 1] - fg[i]) / h));
    }
    return r;
}

// Oracle for g == 0: scalar implicit step f - tau (f (a f)_x)_x = F, upwind,
// Picard with a Thomas solve.
std::vector<double> scalar_pme_step(const Grid1D& grid, const std::vector<double>& prev, double tau, double a,
                                    double tol) {
    const std::size_t n = prev.size();
    const double s = tau * a / (grid.dx() * grid.dx());
    std::vector<double> f = prev;
    for (int it = 0; it < 500; ++it) {
        std::vector<double> lo(n, 0.0), di(n, 1.0), up(n, 0.0), rhs = prev;
        for (std::size_t k = 1; k < n; ++k) {
            const double d = f[k] - f[k - 1];
            const double m = d > 0 ? f[k] : (d < 0 ? f[k - 1] : 0.5 * (f[k] + f[k - 1]));
            di[k - 1] += s * m;
            up[k - 1] -= s * m;
            di[k] += s * m;
            lo[k] -= s * m;
        }
        for (std::size_t i = 1; i < n; ++i) {
            const double w = lo[i] / di[i - 1];
            di[i] -= w * up[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        std::vector<double> next(n);
        next[n - 1] = rhs[n - 1] / di[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) next[i] = (rhs[i] - up[i] * next[i + 1]) / di[i];
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - f[i]));
        f = next;
        if (change < tol) break;
    }
    return f;
}

SolverOptions options(Method m, double tol = 1e-12) {
    SolverOptions o;
    o.method = m;
    o.tol = tol;
    return o;
}

}  // namespace

class BothMethods : public ::testing::TestWithParam<Method> {};
INSTANTIATE_TEST_SUITE_P(Scheme, BothMethods, ::testing::Values(Method::picard, Method::newton),
                         [](const auto& info) { return info.param == Method::picard ? "picard" : "newton"; });

TEST_P(BothMethods, ConstantStateIsFixedPoint) {
    const Grid1D g(16, 1.0);
    const State u{std::vector<double>(16, 0.7), std::vector<double>(16, 1.9)};
    for (double tau : {1e-4, 1.0, 1e3}) {
        const StepResult r = step(g, u, tau, kBase, options(GetParam()));
        EXPECT_LE(r.report.iterations, 1);
        EXPECT_EQ(r.state, u);
    }
    const Grid2D g2(4, 5, 1.0, 2.0);
    const State u2{std::vector<double>(20, 0.3), std::vector<double>(20, 2.0)};
    const StepResult r2 = step(g2, u2, 0.1, kBase, options(GetParam()));
    EXPECT_LE(r2.report.iterations, 1);
    EXPECT_EQ(r2.state, u2);
}

TEST_P(BothMethods, ConservesMassAndDecaysSecondEntropy) {
    const Grid1D g(32, 1.0);
    const State u = cosine_state(g, 1.0, 0.1, 1.0, 0.0);
    const StepReport before = describe(g, u, kBase, 2);
    const StepResult r = step(g, u, 1e-3, kBase, options(GetParam()));
    EXPECT_NEAR(r.report.mass_f, before.mass_f, 1e-10);
    EXPECT_NEAR(r.report.mass_g, before.mass_g, 1e-10);
    EXPECT_LE(r.report.entropies[1], before.entropies[1] * (1 + 1e-9));
    EXPECT_LE(r.report.residual, 1e-12);
    EXPECT_LE(residual_1d(g, r.state, u, 1e-3, kBase), 1e-11);
}

TEST_P(BothMethods, ZeroSecondComponentStaysZero) {
    const Grid1D g(24, 1.0);
    State u = cosine_state(g, 1.0, 0.6, 0.0, 0.0);
    std::vector<double> f = u.f;
    for (int s = 0; s < 10; ++s) {
        u = step(g, u, 1e-3, kBase, options(GetParam())).state;
        f = scalar_pme_step(g, f, 1e-3, kBase.a(), 1e-14);
        for (double v : u.g) ASSERT_EQ(v, 0.0);
    }
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(u.f[i], f[i], 1e-10);
    EXPECT_GT(std::abs(u.f[0] - 1.6), 1e-3);
}

TEST_P(BothMethods, DegenerateStepDataStaysNonnegative) {
    const Grid1D g(40, 1.0);
    State u;
    for (std::size_t i = 0; i < 40; ++i) {
        u.f.push_back(i < 20 ? 1.0 : 0.0);
        u.g.push_back(i < 10 ? 0.0 : 0.5);
    }
    SolverOptions o = options(GetParam(), 1e-11);
    o.max_iters = 400;
    for (int s = 0; s < 20; ++s) {
        const StepResult r = step(g, u, 1e-3, kBase, o);
        EXPECT_GE(r.state.min_value(), -1e-12);
        EXPECT_NEAR(r.report.mass_f, describe(g, u, kBase, 1).mass_f, 1e-10);
        u = r.state;
    }
}

TEST(Scheme, NewtonAgreesWithPicardOnRandomProblems) {
    properties::Rng rng(17);
    std::uniform_real_distribution<double> amp(-0.5, 0.5);
    for (int t = 0; t < 10; ++t) {
        const Params p = properties::random_params(rng);
        const Grid1D g(12, 1.0);
        const State u = cosine_state(g, 1.0, amp(rng), 1.0, amp(rng), 1.0 + t % 3);
        const double tol = 1e-11;
        const StepResult a = step(g, u, 1e-3, p, options(Method::picard, tol));
        const StepResult b = step(g, u, 1e-3, p, options(Method::newton, tol));
        EXPECT_LE(max_diff(a.state, b.state), 10 * tol);
        EXPECT_LE(b.report.iterations, a.report.iterations);
    }
}

TEST(Scheme, NewtonConvergesInFewIterations) {
    const Grid1D g(64, 1.0);
    const State u = cosine_state(g, 1.0, 0.5, 1.0, 0.0);
    const StepResult r = step(g, u, 1e-2, kBase, options(Method::newton, 1e-12));
    EXPECT_LE(r.report.iterations, 6);
}

TEST(Scheme, ArithmeticFacesConserveMass) {
    const Grid1D g(32, 1.0);
    const State u = cosine_state(g, 1.0, 0.3, 1.0, 0.2);
    SolverOptions o = options(Method::newton);
    o.mobility_face = FaceMobility::arithmetic;
    const StepResult r = step(g, u, 1e-3, kBase, o);
    EXPECT_NEAR(r.report.mass_f, describe(g, u, kBase, 1).mass_f, 1e-12);
    EXPECT_NEAR(r.report.mass_g, describe(g, u, kBase, 1).mass_g, 1e-12);
}

TEST(Scheme, TwoDimensionalRowsMatchOneDimensional) {
    const Grid1D g1(16, 1.0);
    const Grid2D g2(16, 3, 1.0, 0.5);
    const State u1 = cosine_state(g1, 1.0, 0.4, 1.0, -0.2);
    State u2;
    for (std::size_t j = 0; j < 3; ++j) {
        u2.f.insert(u2.f.end(), u1.f.begin(), u1.f.end());
        u2.g.insert(u2.g.end(), u1.g.begin(), u1.g.end());
    }
    const StepResult r1 = step(g1, u1, 1e-3, kBase, options(Method::newton));
    const StepResult r2 = step(g2, u2, 1e-3, kBase, options(Method::newton));
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t i = 0; i < 16; ++i) {
            EXPECT_NEAR(r2.state.f[g2.index(i, j)], r1.state.f[i], 1e-11);
            EXPECT_NEAR(r2.state.g[g2.index(i, j)], r1.state.g[i], 1e-11);
        }
    }
}

TEST(Scheme, TwoDimensionalConservesMass) {
    const Grid2D g(8, 6, 1.0, 1.0);
    State u;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        const Vec2 x = g.cell_center(c);
        u.f.push_back(1.0 + 0.4 * std::cos(std::numbers::pi * x[0]) * std::cos(std::numbers::pi * x[1]));
        u.g.push_back(1.0 + 0.3 * std::cos(2 * std::numbers::pi * x[1]));
    }
    const StepReport before = describe(g, u, kBase, 3);
    const StepResult r = step(g, u, 1e-3, kBase, options(Method::picard));
    EXPECT_NEAR(r.report.mass_f, before.mass_f, 1e-12);
    EXPECT_NEAR(r.report.mass_g, before.mass_g, 1e-12);
    for (int n = 0; n < 3; ++n) EXPECT_LE(r.report.entropies[n], before.entropies[n] + 1e-12);
}

TEST(Scheme, RejectsInvalidInput) {
    const Grid1D g(4, 1.0);
    const State good{std::vector<double>(4, 1.0), std::vector<double>(4, 1.0)};
    State bad = good;
    bad.f[2] = -0.1;
    EXPECT_THROW(step(g, bad, 1e-3, kBase, SolverOptions{}), InvalidInput);
    EXPECT_THROW(step(g, good, 0.0, kBase, SolverOptions{}), InvalidInput);
    EXPECT_THROW(step(g, good, -1.0, kBase, SolverOptions{}), InvalidInput);
    SolverOptions o;
    o.tol = 0.0;
    EXPECT_THROW(step(g, good, 1e-3, kBase, o), InvalidInput);
    o = SolverOptions{};
    o.max_iters = 0;
    EXPECT_THROW(step(g, good, 1e-3, kBase, o), InvalidInput);
}

TEST(Scheme, NonConvergenceWhenIterationsExhausted) {
    const Grid1D g(16, 1.0);
    const State u = cosine_state(g, 1.0, 0.5, 1.0, 0.0);
    SolverOptions o;
    o.max_iters = 1;
    o.tol = 1e-14;
    EXPECT_THROW(step(g, u, 1.0, kBase, o), NonConvergence);
}

TEST(Scheme, ClampAccountsForMass) {
    const Grid1D g(8, 1.0);
    const State u = cosine_state(g, 1.0, 0.2, 1.0, 0.0);
    SolverOptions o;
    o.clamp_negative = true;
    const StepResult r = step(g, u, 1e-3, kBase, o);
    EXPECT_EQ(r.report.clamped_mass, 0.0);
    EXPECT_GE(r.state.min_value(), 0.0);
}

TEST(StepRegularized, ConstantBelowCapUnchanged) {
    const Grid1D g(10, 1.0);
    const State u{std::vector<double>(10, 1.5), std::vector<double>(10, 0.5)};
    const StepResult r = step_regularized(g, u, 1e-2, kBase, 0.1, 4.0, SolverOptions{});
    EXPECT_EQ(r.state, u);
}

TEST(StepRegularized, RhoTooSmall) {
    const Grid1D g(10, 1.0);
    const State u{std::vector<double>(10, 5.0), std::vector<double>(10, 0.5)};
    EXPECT_THROW(step_regularized(g, u, 1e-2, kBase, 0.1, 4.0, SolverOptions{}), RhoTooSmall);
    EXPECT_THROW(step_regularized(g, u, 1e-2, kBase, 1.5, 40.0, SolverOptions{}), InvalidInput);
}

TEST(StepRegularized, StaysBelowCapAndConservesMass) {
    const Grid1D g(32, 1.0);
    State u = cosine_state(g, 1.5, 1.4, 1.0, 0.9, 3.0);
    const double rho = 3.0;
    for (Method m : {Method::picard, Method::newton}) {
        SolverOptions o = options(m, 1e-12);
        o.max_iters = 500;
        const StepResult r = step_regularized(g, u, 1e-2, kBase, 0.05, rho, o);
        EXPECT_LE(r.state.max_value(), rho + 1e-10);
        EXPECT_EQ(r.report.cap_excess, 0.0);
        EXPECT_GE(r.state.min_value(), -1e-12);
        EXPECT_NEAR(r.report.mass_f, describe(g, u, kBase, 1).mass_f, 1e-11);
    }
}

TEST(StepRegularized, ConvergesToExactStepInEps) {
    const Grid1D g(64, 1.0);
    const State u = cosine_state(g, 1.0, 0.5, 1.0, 0.0);
    const SolverOptions o = options(Method::newton);
    const StepResult exact = step(g, u, 1e-3, kBase, o);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const double d = max_diff(step_regularized(g, u, 1e-3, kBase, eps, 1e3, o).state, exact.state);
        EXPECT_LT(d, prev);
        EXPECT_LE(d, 10 * eps);
        prev = d;
    }
}

TEST(StepRegularized, DispatchFromOptions) {
    const Grid1D g(16, 1.0);
    const State u = cosine_state(g, 1.0, 0.5, 1.0, 0.0);
    SolverOptions o = options(Method::newton);
    o.regularization = Regularization{1e-2, 100.0};
    const StepResult a = step(g, u, 1e-3, kBase, o);
    const StepResult b = step_regularized(g, u, 1e-3, kBase, 1e-2, 100.0, options(Method::newton));
    EXPECT_EQ(a.state, b.state);
}

TEST(Run, SingleStepWhenFinalTimeIsTau) {
    const Grid1D g(8, 1.0);
    const State u = cosine_state(g, 1.0, 0.2, 1.0, 0.0);
    const Trajectory t = run(g, u, 1e-2, 1e-2, kBase, SolverOptions{});
    ASSERT_TRUE(t.ok());
    EXPECT_EQ(t.frames.size(), 2u);
    EXPECT_EQ(t.last().time, 1e-2);
}

TEST(Run, ShortensLastStep) {
    EXPECT_EQ(step_count(0.1, 1.0), 10u);
    EXPECT_EQ(step_count(0.3, 1.0), 4u);
    EXPECT_EQ(step_count(1e-3, 10.0), 10000u);
    const Grid1D g(8, 1.0);
    const Trajectory t = run(g, cosine_state(g, 1.0, 0.2, 1.0, 0.0), 0.3, 1.0, kBase, SolverOptions{});
    ASSERT_EQ(t.frames.size(), 5u);
    EXPECT_DOUBLE_EQ(t.frames[3].time, 0.9);
    EXPECT_EQ(t.last().time, 1.0);
}

TEST(Run, PartialTrajectoryOnFailure) {
    const Grid1D g(16, 1.0);
    SolverOptions o;
    o.max_iters = 2;
    o.tol = 1e-14;
    const Trajectory t = run(g, cosine_state(g, 1.0, 0.5, 1.0, 0.0), 0.5, 2.0, kBase, o);
    ASSERT_FALSE(t.ok());
    EXPECT_EQ(t.failure->kind, ErrorKind::non_convergence);
    EXPECT_EQ(t.failure->step_index, t.frames.size());
    EXPECT_THROW(run(g, cosine_state(g, 1.0, 0.5, 1.0, 0.0), 0.5, 0.0, kBase, o), InvalidInput);
}

TEST(Run, ObserversAndDroppedStates) {
    const Grid1D g(8, 1.0);
    std::size_t seen = 0;
    const std::vector<StepObserver> obs{[&](const Frame&) { ++seen; }};
    const Trajectory t = run(g, cosine_state(g, 1.0, 0.2, 1.0, 0.0), 0.01, 0.05, kBase, SolverOptions{}, obs,
                             RunOptions{false});
    EXPECT_EQ(seen, 6u);
    EXPECT_FALSE(t.frames[0].state.f.empty());
    EXPECT_TRUE(t.frames[2].state.f.empty());
    EXPECT_FALSE(t.last().state.f.empty());
}

TEST(Run, EntropiesNonincreasingWithMonitor) {
    const Grid1D g(32, 1.0);
    const State u = cosine_state(g, 1.0, 0.5, 1.0, 0.3, 2.0);
    SolverOptions o = options(Method::newton);
    diagnostics::RunMonitor<Grid1D> mon(g, kBase, o.tol);
    const std::vector<StepObserver> obs{[&](const Frame& f) { mon.observe(f); }};
    const Trajectory t = run(g, u, 1e-3, 0.2, kBase, o, obs, RunOptions{false});
    ASSERT_TRUE(t.ok());
    for (const auto& v : mon.verdicts()) EXPECT_TRUE(v.pass) << v.name << " worst=" << v.worst;
    EXPECT_EQ(mon.frames_seen(), 201u);
}

// With b < 1 the stated Theta2 exceeds the one that closes the square,
// and only the sharp constant keeps the energy identity an inequality.
TEST(Run, DissipationInequalityWithSharpConstantForSmallB) {
    const Params p(1.3, 0.25, 1.5, 0.5);
    const Grid1D g(32, 1.0);
    State u = cosine_state(g, 1.0, 0.5, 1.0, 0.4, 2.0);
    const double e0 = describe(g, u, p, 1).entropies[0];
    ThetaConstants sharp = theta_constants(p);
    sharp.theta2 = theta2_sharp(p);
    double cum = 0.0;
    for (int s = 0; s < 100; ++s) {
        const StepResult r = step(g, u, 1e-3, p, options(Method::newton));
        u = r.state;
        cum += 1e-3 * diagnostics::dissipation(g, u, p, sharp);
        EXPECT_LE(r.report.entropies[0] + cum, e0 * (1 + 1e-8));
    }
}
