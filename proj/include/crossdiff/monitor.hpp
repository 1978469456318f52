#pragma once

// Per-run verification of the entropy structure: every frame of a run is fed
// to a RunMonitor, which tracks the worst slack of each inequality and turns
// them into verdicts at the end.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "crossdiff/diagnostics.hpp"
#include "crossdiff/scheme.hpp"

namespace crossdiff::diagnostics {

struct MonitorTolerances {
    double entropy_relative = 1e-9;
    double linf_relative = 1e-8;
    double dissipation_relative = 1e-8;
    double negativity = 1e-12;
    /// Mass drift allowed per step, in units of solver tol * |Omega|.
    double mass_factor = 10.0;
    double sandwich_relative = 1e-12;
    double chain_relative = 1e-9;
};

struct Verdict {
    std::string name;
    std::string statement;
    bool pass = true;
    std::size_t checks = 0;
    std::size_t violations = 0;
    /// Largest observed (lhs - rhs) / scale; <= 0 means the inequality holds with room.
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t first_violation_step = 0;
};

template <CellGrid G>
class RunMonitor {
public:
    RunMonitor(const G& grid, const Params& params, double solver_tol, MonitorTolerances tol = {})
        : grid_(grid), params_(params), solver_tol_(solver_tol), tol_(tol) {
        verdicts_ = {
            {"mass_conservation", "|int u_k(t_{l+1}) - int u_k(t_l)| <= 10 tol |Omega| per component"},
            {"nonnegativity", "min(f, g) >= -1e-12"},
            {"linf_bound", "||f+g||_inf(t) <= (d/b) max{a,b}/min{c,d} ||f0+g0||_inf"},
            {"entropy_monotonicity", "E_n(u_{l+1}) <= E_n(u_l) + 1e-9 E_n(u_0), n = 1..n_max"},
            {"dissipation_inequality", "E_1(u_l) + tau sum_k D(u_k) <= E_1(u_0) (1 + 1e-8)"},
            {"entropy_sandwich", "int (cf+dg)^n/d^n <= E_n(u) <= int (af+bg)^n/b^n"},
            {"norm_chain", "||c f + d g||_n <= (d/b) ||a F + b G||_n, n in {2,4,8,16}"},
        };
    }

    void observe(const Frame& frame) {
        const std::size_t l = frames_seen_++;
        const StepReport& r = frame.report;
        if (l == 0) {
            initial_ = r;
            linf0_ = r.linf;
            e1_0_ = r.entropies.empty() ? 0.0 : r.entropies[0];
            n_max_sandwich_ = std::max(2, static_cast<int>(r.entropies.size()));
        }

        record(kNonneg, l, -r.min_value - tol_.negativity, 1.0);
        record(kLinf, l, r.linf - params_.linf_growth_bound() * linf0_ * (1.0 + tol_.linf_relative),
               std::max(linf0_, 1e-300));
        if (!frame.state.f.empty()) check_sandwich(frame.state, l);

        if (l > 0) {
            const double tau = frame.time - previous_time_;
            const double mass_limit = tol_.mass_factor * solver_tol_ * grid_.measure();
            const double df = std::abs(r.mass_f - previous_.mass_f);
            const double dg = std::abs(r.mass_g - previous_.mass_g);
            record(kMass, l, std::max(df, dg) - r.clamped_mass - mass_limit, std::max(mass_limit, 1e-300));

            for (std::size_t n = 0; n < r.entropies.size() && n < previous_.entropies.size(); ++n) {
                const double scale = std::max(previous_.entropies[n], initial_.entropies[n]);
                const double slack = tol_.entropy_relative * scale;
                record(kEntropy, l, r.entropies[n] - previous_.entropies[n] - slack, std::max(scale, 1e-300));
            }

            cumulative_dissipation_ += tau * r.dissipation;
            if (!r.entropies.empty()) {
                const double rhs = e1_0_ * (1.0 + tol_.dissipation_relative);
                record(kDissipation, l, r.entropies[0] + cumulative_dissipation_ - rhs, std::max(e1_0_, 1e-300));
            }
            if (!frame.state.f.empty() && !previous_state_.f.empty()) check_chain(previous_state_, frame.state, l);
        }
        previous_ = r;
        previous_time_ = frame.time;
        previous_state_ = frame.state;
    }

    const std::vector<Verdict>& verdicts() const { return verdicts_; }
    bool all_pass() const {
        return std::all_of(verdicts_.begin(), verdicts_.end(), [](const Verdict& v) { return v.pass; });
    }
    double cumulative_dissipation() const { return cumulative_dissipation_; }
    std::size_t frames_seen() const { return frames_seen_; }

private:
    enum Index : std::size_t { kMass, kNonneg, kLinf, kEntropy, kDissipation, kSandwich, kChain };

    /// excess > 0 is a violation; worst is stored relative to `scale`.
    void record(std::size_t which, std::size_t step, double excess, double scale) {
        Verdict& v = verdicts_[which];
        ++v.checks;
        v.worst = std::max(v.worst, excess / scale);
        if (excess > 0.0 || std::isnan(excess)) {
            if (v.violations == 0) v.first_violation_step = step;
            ++v.violations;
            v.pass = false;
        }
    }

    void check_sandwich(const State& u, std::size_t l) {
        for (int n = 2; n <= n_max_sandwich_; ++n) {
            const Sandwich s = entropy_sandwich(grid_, u, params_, n);
            const double slack = tol_.sandwich_relative * s.value;
            record(kSandwich, l, std::max(s.lower - s.value, s.value - s.upper) - slack, std::max(s.value, 1e-300));
        }
    }

    void check_chain(const State& before, const State& after, std::size_t l) {
        for (int n : {2, 4, 8, 16}) {
            const NormChain c = norm_chain(grid_, before, after, params_, n);
            record(kChain, l, c.lhs - c.rhs * (1.0 + tol_.chain_relative), std::max(c.rhs, 1e-300));
        }
    }

    const G& grid_;
    Params params_;
    double solver_tol_;
    MonitorTolerances tol_;
    std::vector<Verdict> verdicts_;
    std::size_t frames_seen_ = 0;
    StepReport initial_;
    StepReport previous_;
    State previous_state_;
    double previous_time_ = 0.0;
    double linf0_ = 0.0;
    double e1_0_ = 0.0;
    double cumulative_dissipation_ = 0.0;
    int n_max_sandwich_ = 2;
};

}  // namespace crossdiff::diagnostics
