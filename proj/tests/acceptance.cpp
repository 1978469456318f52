// Acceptance criteria 1-12: one PASS/FAIL line each, with the measured
// quantity and wall time against its budget. Exit status is nonzero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "crossdiff/cli/commands.hpp"
#include "crossdiff/monitor.hpp"
#include "crossdiff/properties.hpp"
#include "crossdiff/scheme.hpp"

using namespace crossdiff;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

// shared_s charges time spent on setup that several criteria share.
void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body,
               double shared_s = 0.0) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = shared_s + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s  %2d  %-44s %s [%.2fs / %.0fs%s]\n", pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs,
                budget_s, in_time ? "" : " over budget");
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome from_property(const properties::PropertyResult& r) {
    std::ostringstream os;
    os << r.name << ": " << r.checks << " checks, " << r.failures << " failures, worst " << fmt("%.2e", r.worst);
    return {r.passed(), os.str()};
}

Outcome combine(std::initializer_list<properties::PropertyResult> rs) {
    Outcome o{true, ""};
    for (const auto& r : rs) {
        const Outcome x = from_property(r);
        o.pass = o.pass && x.pass;
        o.detail += (o.detail.empty() ? "" : "; ") + x.detail;
    }
    return o;
}

const Params kBase(2.0, 1.0, 1.0, 1.0);
const Grid1D kGrid(64, 1.0);
constexpr double kTau = 1e-3;
constexpr double kTol = 1e-12;

State cosine_bump() {
    State u;
    for (std::size_t i = 0; i < kGrid.num_cells(); ++i) {
        u.f.push_back(1.0 + 0.5 * std::cos(std::numbers::pi * kGrid.cell_center(i)[0]));
        u.g.push_back(1.0);
    }
    return u;
}

SolverOptions base_options() {
    SolverOptions o;
    o.tol = kTol;
    o.n_max = 6;
    return o;
}

double max_diff(const State& x, const State& y) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max({m, std::abs(x.f[i] - y.f[i]), std::abs(x.g[i] - y.g[i])});
    return m;
}

const diagnostics::Verdict& find(const std::vector<diagnostics::Verdict>& vs, const std::string& name) {
    for (const auto& v : vs) {
        if (v.name == name) return v;
    }
    throw std::runtime_error("no verdict " + name);
}

Outcome from_verdict(const diagnostics::Verdict& v) {
    std::ostringstream os;
    os << v.name << ": " << v.checks << " checks, " << v.violations << " violations, worst slack "
       << fmt("%.2e", v.worst);
    return {v.pass, os.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    using namespace properties;

    criterion(1, "coefficient oracle equivalence", 1.0, [] {
        Rng rng(101);
        return from_property(check_coefficient_oracle(random_params(rng, 100), 20, 1e-12));
    });

    criterion(2, "symmetry of D^2 Phi_n M", 5.0, [] {
        Rng rng(102);
        const auto params = random_params(rng, 20);
        return from_property(check_sn_symmetry(params, 2, 10, 1000, rng, 0.0, 10.0, 1e-12));
    });

    criterion(3, "positive definiteness and det lower bound", 5.0, [] {
        Rng rng(103);
        const auto params = random_params(rng, 20);
        const auto h = check_hessian_spd(params, 2, 10, 1000, rng, 1e-3, 10.0);
        const auto s = check_sn_spd(params, 2, 10, 1000, rng, 1e-3, 10.0);
        const auto d = check_det_lower_bound(params, 2, 10, 1000, rng, 1e-3, 10.0);
        return combine({h, s, d});
    });

    criterion(4, "norm sandwich", 5.0, [] {
        Rng rng(104);
        const auto params = random_params(rng, 20);
        return from_property(check_norm_sandwich(params, 2, 12, 10000, rng, 0.0, 10.0));
    });

    criterion(5, "single-step conservation and positivity", 1.0, [] {
        const State u = cosine_bump();
        const StepReport before = describe(kGrid, u, kBase, 1);
        const StepResult r = step(kGrid, u, kTau, kBase, base_options());
        const double drift = std::max(std::abs(r.report.mass_f - before.mass_f), std::abs(r.report.mass_g - before.mass_g));
        const double mn = r.state.min_value();
        return Outcome{drift <= 1e-10 && mn >= -1e-12,
                       "mass drift " + fmt("%.2e", drift) + ", min(f,g) " + fmt("%.6f", mn) + ", " +
                           std::to_string(r.report.iterations) + " iterations"};
    });

    // Criteria 6-8 share one 1000-step run.
    std::vector<diagnostics::Verdict> verdicts;
    double run_seconds = 0.0;
    {
        const auto t0 = std::chrono::steady_clock::now();
        diagnostics::RunMonitor<Grid1D> mon(kGrid, kBase, kTol);
        const std::vector<StepObserver> obs{[&](const Frame& f) { mon.observe(f); }};
        const Trajectory t = run(kGrid, cosine_bump(), kTau, 1000 * kTau, kBase, base_options(), obs, RunOptions{false});
        run_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (t.ok() && t.frames.size() == 1001) verdicts = mon.verdicts();
    }

    criterion(6, "entropy monotonicity, 1000 steps, n=1..6", 30.0, [&] {
        if (verdicts.empty()) return Outcome{false, "run failed"};
        Outcome o = from_verdict(find(verdicts, "entropy_monotonicity"));
        return o;
    }, run_seconds);

    criterion(7, "L-infinity bound with constant 2", 30.0, [&] {
        if (verdicts.empty()) return Outcome{false, "run failed"};
        const double c = kBase.linf_growth_bound();
        Outcome o = from_verdict(find(verdicts, "linf_bound"));
        o.pass = o.pass && c == 2.0;
        o.detail += ", constant " + fmt("%.3g", c);
        return o;
    }, run_seconds);

    criterion(8, "dissipation inequality", 30.0, [&] {
        if (verdicts.empty()) return Outcome{false, "run failed"};
        const ThetaConstants th = theta_constants(kBase);
        Outcome o = from_verdict(find(verdicts, "dissipation_inequality"));
        o.pass = o.pass && th.theta1 == 0.75 && th.theta2 == 0.4375;
        o.detail += ", Theta1 " + fmt("%.4g", th.theta1) + ", Theta2 " + fmt("%.4g", th.theta2);
        return o;
    }, run_seconds);

    criterion(9, "long-time limit at t = 10", 120.0, [] {
        SolverOptions o = base_options();
        o.n_max = 1;
        const State u0 = cosine_bump();
        const Trajectory t = run(kGrid, u0, kTau, 10.0, kBase, o, {}, RunOptions{false});
        if (!t.ok()) return Outcome{false, "run failed: " + t.failure->message};
        const State& u = t.last().state;
        const double mf = integrate(kGrid, std::span<const double>(u0.f)) / kGrid.measure();
        const double mg = integrate(kGrid, std::span<const double>(u0.g)) / kGrid.measure();
        double dist = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) dist = std::max({dist, std::abs(u.f[i] - mf), std::abs(u.g[i] - mg)});
        const double res = diagnostics::steady_residual(kGrid, u, kBase);
        return Outcome{res <= 1e-6 && dist <= 1e-5,
                       "steady residual " + fmt("%.2e", res) + ", distance to mean " + fmt("%.2e", dist)};
    });

    criterion(10, "regularized-to-exact consistency", 10.0, [] {
        const State u = cosine_bump();
        const StepResult exact = step(kGrid, u, kTau, kBase, base_options());
        Outcome o{true, "max diff"};
        double prev = std::numeric_limits<double>::infinity();
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            const StepResult r = step_regularized(kGrid, u, kTau, kBase, eps, 1e3, base_options());
            const double d = max_diff(r.state, exact.state);
            o.pass = o.pass && d < prev && d <= 10 * eps;
            o.detail += " " + fmt("%.2e", d) + " (" + fmt("%.2f", d / eps) + " eps)";
            prev = d;
        }
        return o;
    });

    criterion(11, "degenerate decoupling", 5.0, [] {
        double worst = 0.0, moved = std::numeric_limits<double>::infinity();
        for (int zero : {1, 0}) {
            State u = cosine_bump();
            if (zero == 1) {
                std::fill(u.g.begin(), u.g.end(), 0.0);
            } else {
                u.g = u.f;
                std::fill(u.f.begin(), u.f.end(), 0.0);
            }
            const State u0 = u;
            for (int s = 0; s < 100; ++s) u = step(kGrid, u, kTau, kBase, base_options()).state;
            const auto& z = zero == 1 ? u.g : u.f;
            const auto& live = zero == 1 ? u.f : u.g;
            const auto& live0 = zero == 1 ? u0.f : u0.g;
            for (double v : z) worst = std::max(worst, std::abs(v));
            double change = 0.0;
            for (std::size_t i = 0; i < live.size(); ++i) change = std::max(change, std::abs(live[i] - live0[i]));
            moved = std::min(moved, change);
        }
        return Outcome{worst <= 1e-14 && moved > 1e-3,
                       "max |zero component| " + fmt("%.1e", worst) + ", live component moved " + fmt("%.3f", moved)};
    });

    criterion(12, "Muskat preset equivalence", 5.0, [] {
        const fs::path root = fs::temp_directory_path() / "crossdiff_acceptance_muskat";
        fs::remove_all(root);
        const auto invoke = [&](std::vector<std::string> params, const std::string& dir) {
            std::vector<std::string> args{"crossdiff", "run", "--ic",      "random-smooth", "--seed", "5",
                                          "--cells",   "64",  "--t-final", "0.5",           "--snapshot-interval",
                                          "100",       "--out", (root / dir).string()};
            args.insert(args.end(), params.begin(), params.end());
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            return cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
        };
        const int c1 = invoke({"--muskat-R", "1", "--muskat-mu", "1"}, "muskat");
        const int c2 = invoke({"--a", "2", "--b", "1", "--c", "1", "--d", "1"}, "explicit");
        std::size_t files = 0, identical = 0;
        for (const auto& e : fs::directory_iterator(root / "muskat")) {
            ++files;
            const fs::path other = root / "explicit" / e.path().filename();
            if (fs::exists(other) && slurp(e.path()) == slurp(other)) ++identical;
        }
        std::size_t other_files = 0;
        for ([[maybe_unused]] const auto& e : fs::directory_iterator(root / "explicit")) ++other_files;
        const bool pass = c1 == 0 && c2 == 0 && files > 2 && identical == files && other_files == files;
        return Outcome{pass, std::to_string(identical) + "/" + std::to_string(files) + " files bit-identical, exit codes " +
                                 std::to_string(c1) + "/" + std::to_string(c2)};
    });

    std::printf("%s: %d of 12 criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
