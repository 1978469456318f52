#pragma once

// Machine-readable run outputs. Reals are written as %.16e so that every
// column round-trips to the same double; nothing platform- or clock-dependent
// is written, so identical runs produce identical bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "crossdiff/cli/config.hpp"
#include "crossdiff/error.hpp"
#include "crossdiff/monitor.hpp"
#include "crossdiff/scheme.hpp"

namespace crossdiff::cli {

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline std::string snapshot_name(double time) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "state_%.6f.csv", time);
    return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

/// Streams one diagnostics.csv row per frame.
class DiagnosticsWriter {
public:
    DiagnosticsWriter(const std::filesystem::path& path, int n_max) : path_(path), out_(open_output(path)) {
        out_ << "time,mass_f,mass_g";
        for (int n = 1; n <= n_max; ++n) out_ << ",E" << n;
        out_ << ",dissipation_cum,linf_sum,iterations,residual\n";
    }

    void write(const Frame& frame, double time) {
        const StepReport& r = frame.report;
        if (rows_ > 0) cumulative_ += (time - last_time_) * r.dissipation;
        last_time_ = time;
        ++rows_;
        out_ << format_real(time) << ',' << format_real(r.mass_f) << ',' << format_real(r.mass_g);
        for (double e : r.entropies) out_ << ',' << format_real(e);
        out_ << ',' << format_real(cumulative_) << ',' << format_real(r.linf) << ',' << r.iterations << ','
             << format_real(r.residual) << '\n';
        if (!out_) throw IoError("write failed on " + path_.string());
    }

    std::size_t rows() const { return rows_; }

    void close() {
        out_.close();
        if (!out_) throw IoError("write failed on " + path_.string());
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t rows_ = 0;
    double cumulative_ = 0.0;
    double last_time_ = 0.0;
};

template <CellGrid G>
void write_state(const std::filesystem::path& path, const G& grid, const State& u) {
    std::ofstream out = open_output(path);
    out << (G::dimension == 2 ? "index,x,y,f,g\n" : "index,x,f,g\n");
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Vec2 x = grid.cell_center(i);
        out << i << ',' << format_real(x[0]);
        if constexpr (G::dimension == 2) out << ',' << format_real(x[1]);
        out << ',' << format_real(u.f[i]) << ',' << format_real(u.g[i]) << '\n';
    }
    if (!out) throw IoError("write failed on " + path.string());
}

struct RunSummary {
    std::size_t steps = 0;
    double final_time = 0.0;
    double final_tau = 0.0;
    int tau_halvings = 0;
    std::optional<RunFailure> failure;
    std::vector<diagnostics::Verdict> verdicts;
    bool verdicts_pass = true;

    bool pass() const { return !failure && verdicts_pass; }
};

inline std::string describe_params(const Params& p) {
    return "a=" + format_real(p.a()) + " b=" + format_real(p.b()) + " c=" + format_real(p.c()) +
           " d=" + format_real(p.d());
}

inline void write_summary(const std::filesystem::path& path, const RunConfig& cfg, const RunSummary& s) {
    std::ofstream out = open_output(path);
    const ThetaConstants th = theta_constants(cfg.params);
    out << "params: " << describe_params(cfg.params) << '\n';
    out << "theta1: " << format_real(th.theta1) << '\n';
    out << "theta2: " << format_real(th.theta2) << '\n';
    out << "grid: dimension=" << cfg.dimension << " cells=" << cfg.cells;
    if (cfg.dimension == 2) out << " cells-y=" << cfg.cells_y;
    out << " length=" << format_real(cfg.length);
    if (cfg.dimension == 2) out << " length-y=" << format_real(cfg.length_y);
    out << '\n';
    out << "tau: " << format_real(cfg.tau) << " t-final: " << format_real(cfg.t_final) << '\n';
    out << "steps: " << s.steps << " final-time: " << format_real(s.final_time)
        << " final-tau: " << format_real(s.final_tau) << " tau-halvings: " << s.tau_halvings << '\n';
    if (s.failure) {
        out << "status: FAILED at step " << s.failure->step_index << " (t=" << format_real(s.failure->time)
            << "): " << to_string(s.failure->kind) << ": " << s.failure->message << '\n';
    } else {
        out << "status: completed\n";
    }
    out << "verdicts:\n";
    for (const auto& v : s.verdicts) {
        out << "  " << v.name << ": " << (v.pass ? "PASS" : "FAIL") << " worst=" << format_real(v.worst)
            << " checks=" << v.checks << " violations=" << v.violations;
        if (v.violations > 0) out << " first-violation-step=" << v.first_violation_step;
        out << "  [" << v.statement << "]\n";
    }
    out << "overall: " << (s.pass() ? "PASS" : "FAIL") << '\n';
    if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace crossdiff::cli
