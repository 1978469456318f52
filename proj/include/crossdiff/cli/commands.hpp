#pragma once

// Subcommands: run, sweep, verify, limits. main_entry returns the process
// exit code; errors are printed to stderr by category.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "crossdiff/cli/config.hpp"
#include "crossdiff/cli/initial.hpp"
#include "crossdiff/cli/output.hpp"
#include "crossdiff/monitor.hpp"
#include "crossdiff/properties.hpp"
#include "crossdiff/scheme.hpp"

namespace crossdiff::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kNumerical = 3, kInvariant = 4, kIo = 5 };

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::invalid_input: return kConfig;
        case ErrorKind::non_convergence:
        case ErrorKind::rho_too_small: return kNumerical;
        case ErrorKind::invariant_violation: return kInvariant;
        case ErrorKind::io: return kIo;
    }
    return kNumerical;
}

/// Allowed excess of a regularized state over rho.
inline constexpr double kCapSlack = 1e-10;

struct RunOutcome {
    RunSummary summary;
    State final_state;
    std::vector<double> final_entropies;
    double final_linf = 0.0;
    double steady_residual = 0.0;

    int exit_code() const {
        if (summary.failure) return exit_code_for(summary.failure->kind);
        return summary.verdicts_pass ? kOk : kInvariant;
    }
};

template <class Fn>
decltype(auto) with_grid(const RunConfig& cfg, Fn&& fn) {
    try {
        if (cfg.dimension == 2) {
            const Grid2D grid(cfg.cells, cfg.cells_y, cfg.length, cfg.length_y);
            return fn(grid);
        }
        const Grid1D grid(cfg.cells, cfg.length);
        return fn(grid);
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
}

struct RunHooks {
    /// Called with (global time, frame) for every accepted frame.
    std::function<void(double, const Frame&)> on_frame;
};

/// Marches cfg on `grid`. On non-convergence tau is halved (at most
/// cfg.tau_retries times) and marching resumes from the last accepted state.
template <CellGrid G>
RunOutcome march(const G& grid, const RunConfig& cfg, const State& initial, const RunHooks& hooks = {}) {
    diagnostics::RunMonitor<G> monitor(grid, cfg.params, cfg.solver.tol);
    diagnostics::Verdict cap{"regularized_cap", "max(f, g) <= rho + 1e-10 after every regularized step"};
    const std::optional<Regularization> reg = cfg.solver.regularization;

    RunOutcome outcome;
    RunSummary& s = outcome.summary;
    State current = initial;
    double t0 = 0.0;
    double tau = cfg.tau;
    bool first_segment = true;
    std::size_t steps = 0;

    for (;;) {
        bool segment_start = true;
        const StepObserver observer = [&](const Frame& frame) {
            if (segment_start) {
                segment_start = false;
                if (!first_segment) return;
            } else {
                ++steps;
            }
            Frame global{t0 + frame.time, frame.state, frame.report};
            monitor.observe(global);
            if (reg && steps > 0) {
                ++cap.checks;
                const double excess = frame.report.cap_excess - kCapSlack;
                cap.worst = std::max(cap.worst, excess / reg->rho);
                if (excess > 0.0) {
                    if (cap.violations++ == 0) cap.first_violation_step = steps;
                    cap.pass = false;
                }
            }
            if (hooks.on_frame) hooks.on_frame(global.time, global);
        };
        const std::vector<StepObserver> observers{observer};
        const Trajectory traj = run(grid, current, tau, cfg.t_final - t0, cfg.params, cfg.solver, observers,
                                    RunOptions{false});
        first_segment = false;
        current = traj.last().state;
        const double reached = t0 + traj.last().time;

        if (traj.failure && traj.failure->kind == ErrorKind::non_convergence && s.tau_halvings < cfg.tau_retries) {
            ++s.tau_halvings;
            tau *= 0.5;
            t0 = reached;
            continue;
        }
        if (traj.failure) {
            RunFailure f = *traj.failure;
            f.step_index = steps + 1;
            f.time = reached;
            s.failure = f;
        }
        t0 = reached;
        break;
    }

    s.steps = steps;
    s.final_time = t0;
    s.final_tau = tau;
    s.verdicts = monitor.verdicts();
    if (reg) s.verdicts.push_back(cap);
    s.verdicts_pass = std::all_of(s.verdicts.begin(), s.verdicts.end(), [](const auto& v) { return v.pass; });
    outcome.final_entropies = describe(grid, current, cfg.params, cfg.solver.n_max).entropies;
    outcome.final_linf = diagnostics::linf_sum(current);
    outcome.steady_residual = diagnostics::steady_residual(grid, current, cfg.params, cfg.solver.mobility_face);
    outcome.final_state = std::move(current);
    return outcome;
}

/// One full run with diagnostics.csv, state snapshots and summary.txt in cfg.out.
inline RunOutcome execute_run(const RunConfig& cfg) {
    return with_grid(cfg, [&](const auto& grid) {
        const State initial = make_initial(grid, cfg.ic, cfg.seed);
        ensure_directory(cfg.out);
        DiagnosticsWriter writer(cfg.out / "diagnostics.csv", cfg.solver.n_max);
        std::size_t frame_index = 0;
        double last_snapshot = -1.0;
        RunHooks hooks;
        hooks.on_frame = [&](double time, const Frame& frame) {
            writer.write(frame, time);
            const bool due = frame_index == 0 ||
                             (cfg.snapshot_interval > 0 && frame_index % cfg.snapshot_interval == 0);
            if (due) {
                write_state(cfg.out / snapshot_name(time), grid, frame.state);
                last_snapshot = time;
            }
            ++frame_index;
        };
        RunOutcome out = march(grid, cfg, initial, hooks);
        writer.close();
        if (out.summary.final_time != last_snapshot) {
            write_state(cfg.out / snapshot_name(out.summary.final_time), grid, out.final_state);
        }
        write_summary(cfg.out / "summary.txt", cfg, out.summary);
        return out;
    });
}

struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};

inline SweepAxis parse_sweep_axis(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("--sweep expects key=v1,v2,..., got '" + text + "'");
    SweepAxis axis{trim(text.substr(0, eq)), {}};
    if (!is_config_key(axis.key)) throw ConfigError("--sweep: unknown key '" + axis.key + "'");
    if (axis.key == "out") throw ConfigError("--sweep cannot vary 'out'");
    std::istringstream ss(text.substr(eq + 1));
    std::string v;
    while (std::getline(ss, v, ',')) {
        v = trim(v);
        if (v.empty()) throw ConfigError("--sweep: empty value for '" + axis.key + "'");
        axis.values.push_back(v);
    }
    if (axis.values.empty()) throw ConfigError("--sweep: no values for '" + axis.key + "'");
    return axis;
}

/// Cartesian product, last axis fastest.
inline std::vector<ConfigMap> expand_sweep(const ConfigMap& base, const std::vector<SweepAxis>& axes) {
    std::vector<ConfigMap> out{base};
    for (const SweepAxis& axis : axes) {
        std::vector<ConfigMap> next;
        next.reserve(out.size() * axis.values.size());
        for (const ConfigMap& m : out) {
            for (const std::string& v : axis.values) {
                ConfigMap c = m;
                c[axis.key] = v;
                next.push_back(std::move(c));
            }
        }
        out = std::move(next);
    }
    return out;
}

struct SweepRow {
    std::vector<std::string> values;
    int exit_code = kOk;
    std::string status;
    std::string message;
    RunOutcome outcome;
};

inline int run_sweep(const ConfigMap& base, const std::vector<SweepAxis>& axes, unsigned jobs, std::ostream& log) {
    if (axes.empty()) throw ConfigError("sweep needs at least one --sweep key=v1,v2,...");
    const RunConfig base_cfg = resolve(base);
    const std::vector<ConfigMap> runs = expand_sweep(base, axes);
    std::vector<SweepRow> rows(runs.size());
    ensure_directory(base_cfg.out);

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            SweepRow& row = rows[i];
            for (const SweepAxis& a : axes) row.values.push_back(runs[i].at(a.key));
            try {
                RunConfig cfg = resolve(runs[i]);
                cfg.out = base_cfg.out / ("run_" + std::to_string(i));
                row.outcome = execute_run(cfg);
                row.exit_code = row.outcome.exit_code();
                row.status = row.outcome.summary.failure ? tag(row.outcome.summary.failure->kind)
                                                         : (row.outcome.summary.verdicts_pass ? "PASS" : "FAIL");
            } catch (const Error& e) {
                row.exit_code = exit_code_for(e.kind());
                row.status = tag(e.kind());
                row.message = e.what();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(runs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ofstream csv = open_output(base_cfg.out / "sweep.csv");
    csv << "run";
    for (const SweepAxis& a : axes) csv << ',' << a.key;
    csv << ",status,exit_code,steps,final_time,E1_final,linf_final,steady_residual\n";
    int worst = kOk;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SweepRow& r = rows[i];
        csv << i;
        for (const auto& v : r.values) csv << ',' << v;
        const RunSummary& s = r.outcome.summary;
        const double e1 = r.outcome.final_entropies.empty() ? 0.0 : r.outcome.final_entropies[0];
        csv << ',' << r.status << ',' << r.exit_code << ',' << s.steps << ',' << format_real(s.final_time) << ','
            << format_real(e1) << ',' << format_real(r.outcome.final_linf) << ','
            << format_real(r.outcome.steady_residual) << '\n';
        log << "run_" << i << ": " << r.status;
        if (!r.message.empty()) log << " (" << r.message << ")";
        log << '\n';
        worst = std::max(worst, r.exit_code);
    }
    if (!csv) throw IoError("write failed on sweep.csv");
    return worst;
}

inline int run_verify(const properties::SuiteOptions& opts, std::ostream& log) {
    const std::vector<properties::PropertyResult> results = properties::run_suite(opts);
    bool ok = true;
    char line[256];
    for (const auto& r : results) {
        std::snprintf(line, sizeof line, "%-32s %s  checks=%zu failures=%zu worst=%.3e time=%.3fs\n", r.name.c_str(),
                      r.passed() ? "PASS" : "FAIL", r.checks, r.failures, r.worst, r.seconds);
        log << line;
        ok = ok && r.passed();
    }
    log << "overall: " << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kOk : kInvariant;
}

inline std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::istringstream ss(text);
    std::string v;
    while (std::getline(ss, v, ',')) out.push_back(parse_real(key, trim(v)));
    if (out.empty()) throw ConfigError("'" + key + "' needs at least one value");
    return out;
}

/// Regularized versus exact runs for every (rho, eps); writes limits.csv.
inline int run_limits(RunConfig cfg, const std::vector<double>& eps_list, const std::vector<double>& rho_list,
                      std::ostream& log) {
    cfg.solver.regularization.reset();
    ensure_directory(cfg.out);
    return with_grid(cfg, [&](const auto& grid) {
        const State initial = make_initial(grid, cfg.ic, cfg.seed);
        const RunOutcome exact = march(grid, cfg, initial);
        if (exact.summary.failure) {
            throw NonConvergence("exact reference run failed: " + exact.summary.failure->message);
        }
        std::ofstream csv = open_output(cfg.out / "limits.csv");
        csv << "rho,eps,max_diff,max_diff_over_eps,max_cap_excess,max_entropy_increment,status\n";
        int code = kOk;
        for (double rho : rho_list) {
            for (double eps : eps_list) {
                RunConfig rc = cfg;
                rc.solver.regularization = Regularization{eps, rho};
                std::vector<double> previous;
                double increment = 0.0, cap_excess = 0.0;
                RunHooks hooks;
                hooks.on_frame = [&](double, const Frame& frame) {
                    const auto& e = frame.report.entropies;
                    for (std::size_t n = 0; n < e.size() && n < previous.size(); ++n) {
                        increment = std::max(increment, e[n] - previous[n]);
                    }
                    previous = e;
                    cap_excess = std::max(cap_excess, frame.report.cap_excess);
                };
                std::string status = "ok";
                double diff = std::numeric_limits<double>::quiet_NaN();
                try {
                    rc.solver.validate();
                    const RunOutcome r = march(grid, rc, initial, hooks);
                    if (r.summary.failure) {
                        status = tag(r.summary.failure->kind);
                        code = std::max(code, static_cast<int>(kNumerical));
                    } else {
                        diff = 0.0;
                        for (std::size_t i = 0; i < initial.size(); ++i) {
                            diff = std::max({diff, std::abs(r.final_state.f[i] - exact.final_state.f[i]),
                                             std::abs(r.final_state.g[i] - exact.final_state.g[i])});
                        }
                    }
                } catch (const Error& e) {
                    status = tag(e.kind());
                    code = std::max(code, exit_code_for(e.kind()));
                }
                csv << format_real(rho) << ',' << format_real(eps) << ',' << format_real(diff) << ','
                    << format_real(diff / eps) << ',' << format_real(cap_excess) << ',' << format_real(increment)
                    << ',' << status << '\n';
                char line[200];
                std::snprintf(line, sizeof line, "rho=%-10.4g eps=%-10.4g max|u_reg - u|=%.3e (%.3f eps) %s\n", rho,
                              eps, diff, diff / eps, status.c_str());
                log << line;
            }
        }
        if (!csv) throw IoError("write failed on limits.csv");
        return code;
    });
}

namespace detail {

/// Registers --KEY for every configuration key plus --config.
class ConfigOptions {
public:
    void attach(CLI::App* app) {
        app->add_option("--config", config_path_, "key = value configuration file");
        for (const KeyInfo& k : config_keys()) {
            auto& slot = values_[std::string(k.name)];
            options_.emplace_back(std::string(k.name),
                                  app->add_option("--" + std::string(k.name), slot, std::string(k.help)));
        }
    }

    ConfigMap collect() const {
        ConfigMap base;
        if (!config_path_.empty()) base = load_config_file(config_path_);
        ConfigMap overrides;
        for (const auto& [name, opt] : options_) {
            if (opt->count() > 0) overrides[name] = values_.at(name);
        }
        return merge(std::move(base), overrides);
    }

private:
    std::string config_path_;
    std::map<std::string, std::string> values_;
    std::vector<std::pair<std::string, CLI::Option*>> options_;
};

}  // namespace detail

inline int main_entry(int argc, const char* const* argv, std::ostream& log = std::cout,
                      std::ostream& err = std::cerr) {
    CLI::App app{"crossdiff: implicit finite-volume solver and entropy checks for a two-species cross-diffusion system"};
    app.require_subcommand(1);

    CLI::App* run_cmd = app.add_subcommand("run", "single simulation");
    detail::ConfigOptions run_opts;
    run_opts.attach(run_cmd);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Cartesian parameter sweep, one run per directory");
    detail::ConfigOptions sweep_opts;
    sweep_opts.attach(sweep_cmd);
    std::vector<std::string> sweep_args;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    sweep_cmd->add_option("--sweep", sweep_args, "key=v1,v2,... (repeatable)")->required();
    sweep_cmd->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

    CLI::App* verify_cmd = app.add_subcommand("verify", "sampling checks of the entropy polynomials, no PDE solve");
    properties::SuiteOptions suite;
    verify_cmd->add_option("--n-max", suite.n_max, "largest degree checked")->check(CLI::Range(2, kMaxDegree));
    verify_cmd->add_option("--samples", suite.samples, "points per parameter set and degree");
    verify_cmd->add_option("--seed", suite.seed, "generator seed");
    verify_cmd->add_option("--param-draws", suite.param_draws, "random parameter sets")->check(CLI::PositiveNumber);

    CLI::App* limits_cmd = app.add_subcommand("limits", "regularized versus exact runs over eps and rho");
    detail::ConfigOptions limits_opts;
    limits_opts.attach(limits_cmd);
    std::string eps_list = "1e-2,1e-3,1e-4";
    std::string rho_list = "1e3";
    limits_cmd->add_option("--eps-list", eps_list, "comma-separated eps values");
    limits_cmd->add_option("--rho-list", rho_list, "comma-separated rho values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, log, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (run_cmd->parsed()) {
            const RunConfig cfg = resolve(run_opts.collect());
            const RunOutcome out = execute_run(cfg);
            const RunSummary& s = out.summary;
            log << "steps: " << s.steps << ", final time: " << s.final_time << ", output: " << cfg.out.string()
                << '\n';
            for (const auto& v : s.verdicts) {
                if (!v.pass) err << "violated: " << v.name << " [" << v.statement << "]\n";
            }
            if (s.failure) {
                err << "error [" << tag(s.failure->kind) << "]: step " << s.failure->step_index << ": "
                    << s.failure->message << '\n';
            }
            log << "overall: " << (s.pass() ? "PASS" : "FAIL") << '\n';
            return out.exit_code();
        }
        if (sweep_cmd->parsed()) {
            std::vector<SweepAxis> axes;
            for (const auto& text : sweep_args) axes.push_back(parse_sweep_axis(text));
            return run_sweep(sweep_opts.collect(), axes, jobs, log);
        }
        if (verify_cmd->parsed()) return run_verify(suite, log);
        if (limits_cmd->parsed()) {
            const RunConfig cfg = resolve(limits_opts.collect());
            return run_limits(cfg, parse_real_list("eps-list", eps_list), parse_real_list("rho-list", rho_list), log);
        }
    } catch (const Error& e) {
        err << "error [" << tag(e.kind()) << "]: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error [io]: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "error [internal]: " << e.what() << '\n';
        return kNumerical;
    }
    return kUsage;
}

}  // namespace crossdiff::cli
