#pragma once

// Run configuration: a flat `key = value` file merged with command-line
// overrides of the same keys. Every key is listed in config_keys(); unknown
// keys are rejected.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "crossdiff/error.hpp"
#include "crossdiff/params.hpp"
#include "crossdiff/scheme.hpp"

namespace crossdiff::cli {

struct KeyInfo {
    std::string_view name;
    std::string_view help;
};

inline const std::vector<KeyInfo>& config_keys() {
    static const std::vector<KeyInfo> keys = {
        {"a", "self-diffusion of f"},
        {"b", "cross-diffusion of f by g"},
        {"c", "cross-diffusion of g by f"},
        {"d", "self-diffusion of g"},
        {"muskat-R", "Muskat preset R: (a,b,c,d) = (1+R, R, mu R, mu R)"},
        {"muskat-mu", "Muskat preset mu"},
        {"dimension", "1 or 2"},
        {"cells", "cells in x"},
        {"cells-y", "cells in y (dimension 2)"},
        {"length", "domain length in x"},
        {"length-y", "domain length in y (dimension 2)"},
        {"tau", "time step"},
        {"t-final", "final time"},
        {"eps", "regularization eps in (0,1); needs rho"},
        {"rho", "regularization cap rho > 1; needs eps"},
        {"method", "picard or newton"},
        {"tol", "nonlinear residual tolerance (max-norm)"},
        {"max-iters", "nonlinear iteration limit per step"},
        {"mobility-face", "upwind or arithmetic"},
        {"clamp-negative", "clip negative cells to 0 after each step"},
        {"n-max", "entropies E_1..E_n recorded per step"},
        {"ic", "constant, cosine-bump, step, random-smooth, from-file"},
        {"ic-f0", "base level of f"},
        {"ic-g0", "base level of g"},
        {"ic-f-amp", "amplitude of the f perturbation"},
        {"ic-g-amp", "amplitude of the g perturbation"},
        {"ic-k", "cosine wave number in x"},
        {"ic-k-y", "cosine wave number in y"},
        {"ic-modes", "number of Fourier modes for random-smooth"},
        {"ic-split", "step location as a fraction of the length"},
        {"ic-f-left", "f left of the step"},
        {"ic-f-right", "f right of the step"},
        {"ic-g-left", "g left of the step"},
        {"ic-g-right", "g right of the step"},
        {"ic-file", "CSV with f and g columns"},
        {"seed", "seed for random-smooth"},
        {"out", "output directory"},
        {"snapshot-interval", "write state every k steps (0: first and last only)"},
        {"tau-retries", "halvings of tau allowed on non-convergence"},
    };
    return keys;
}

inline bool is_config_key(std::string_view key) {
    const auto& keys = config_keys();
    return std::any_of(keys.begin(), keys.end(), [&](const KeyInfo& k) { return k.name == key; });
}

using ConfigMap = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

/// `key = value` per line; `#` starts a comment; blank lines ignored.
inline ConfigMap parse_config_text(std::string_view text, std::string_view origin = "config") {
    ConfigMap out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        const std::string where = std::string(origin) + ":" + std::to_string(line_no);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (!is_config_key(key)) throw ConfigError(where + ": unknown key '" + key + "'");
        if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
        if (out.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        out[key] = value;
    }
    return out;
}

inline ConfigMap load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

/// Later maps override earlier ones key by key.
inline ConfigMap merge(ConfigMap base, const ConfigMap& overrides) {
    for (const auto& [k, v] : overrides) base[k] = v;
    return base;
}

inline double parse_real(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ConfigError("'" + std::string(key) + "' expects a real number, got '" + std::string(text) + "'");
    }
    return v;
}

inline long long parse_integer(std::string_view key, std::string_view text) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("'" + std::string(key) + "' expects an integer, got '" + std::string(text) + "'");
    }
    return v;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError("'" + std::string(key) + "' expects true or false, got '" + std::string(text) + "'");
}

struct InitialData {
    std::string name = "cosine-bump";
    double f0 = 1.0;
    double g0 = 1.0;
    double f_amp = 0.5;
    double g_amp = 0.0;
    double k = 1.0;
    double k_y = 0.0;
    int modes = 4;
    double split = 0.5;
    double f_left = 1.5, f_right = 0.5;
    double g_left = 1.0, g_right = 1.0;
    std::string file;
};

struct RunConfig {
    Params params{2.0, 1.0, 1.0, 1.0};
    int dimension = 1;
    std::size_t cells = 64;
    std::size_t cells_y = 16;
    double length = 1.0;
    double length_y = 1.0;
    double tau = 1e-3;
    double t_final = 1.0;
    SolverOptions solver;
    InitialData ic;
    std::uint64_t seed = 1;
    std::filesystem::path out = "out";
    std::size_t snapshot_interval = 0;
    int tau_retries = 4;
};

namespace detail {

class Reader {
public:
    explicit Reader(const ConfigMap& m) : m_(m) {}

    const std::string* find(const char* key) const {
        const auto it = m_.find(key);
        return it == m_.end() ? nullptr : &it->second;
    }
    void real(const char* key, double& dst) const {
        if (const auto* v = find(key)) dst = parse_real(key, *v);
    }
    void positive(const char* key, double& dst) const {
        real(key, dst);
        if (!(dst > 0.0)) throw ConfigError(std::string("'") + key + "' must be positive");
    }
    void nonnegative(const char* key, double& dst) const {
        real(key, dst);
        if (!(dst >= 0.0)) throw ConfigError(std::string("'") + key + "' must be nonnegative");
    }
    template <class Int>
    void integer(const char* key, Int& dst, long long lo) const {
        if (const auto* v = find(key)) {
            const long long x = parse_integer(key, *v);
            if (x < lo) throw ConfigError(std::string("'") + key + "' must be >= " + std::to_string(lo));
            dst = static_cast<Int>(x);
        }
    }

private:
    const ConfigMap& m_;
};

inline Params resolve_params(const Reader& r) {
    const bool any_abcd = r.find("a") || r.find("b") || r.find("c") || r.find("d");
    const bool any_muskat = r.find("muskat-R") || r.find("muskat-mu");
    try {
        if (any_muskat) {
            if (any_abcd) throw ConfigError("muskat-R/muskat-mu and a/b/c/d are mutually exclusive");
            if (!r.find("muskat-R") || !r.find("muskat-mu")) {
                throw ConfigError("muskat preset needs both muskat-R and muskat-mu");
            }
            double R = 0.0, mu = 0.0;
            r.real("muskat-R", R);
            r.real("muskat-mu", mu);
            return Params::muskat(R, mu);
        }
        double a = 2.0, b = 1.0, c = 1.0, d = 1.0;
        r.real("a", a);
        r.real("b", b);
        r.real("c", c);
        r.real("d", d);
        return Params(a, b, c, d);
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("invalid parameters: ") + e.what());
    }
}

}  // namespace detail

inline RunConfig resolve(const ConfigMap& m) {
    for (const auto& [key, value] : m) {
        if (!is_config_key(key)) throw ConfigError("unknown key '" + key + "'");
    }
    const detail::Reader r(m);
    RunConfig c;
    c.params = detail::resolve_params(r);

    r.integer("dimension", c.dimension, 1);
    if (c.dimension != 1 && c.dimension != 2) throw ConfigError("'dimension' must be 1 or 2");
    r.integer("cells", c.cells, 2);
    r.integer("cells-y", c.cells_y, 2);
    r.positive("length", c.length);
    r.positive("length-y", c.length_y);
    r.positive("tau", c.tau);
    r.positive("t-final", c.t_final);

    if (const auto* v = r.find("method")) {
        if (*v == "picard") c.solver.method = Method::picard;
        else if (*v == "newton") c.solver.method = Method::newton;
        else throw ConfigError("'method' must be picard or newton, got '" + *v + "'");
    }
    r.positive("tol", c.solver.tol);
    r.integer("max-iters", c.solver.max_iters, 1);
    if (const auto* v = r.find("mobility-face")) {
        if (*v == "upwind") c.solver.mobility_face = FaceMobility::upwind;
        else if (*v == "arithmetic") c.solver.mobility_face = FaceMobility::arithmetic;
        else throw ConfigError("'mobility-face' must be upwind or arithmetic, got '" + *v + "'");
    }
    if (const auto* v = r.find("clamp-negative")) c.solver.clamp_negative = parse_bool("clamp-negative", *v);
    r.integer("n-max", c.solver.n_max, 1);
    if (c.solver.n_max > kMaxDegree) throw ConfigError("'n-max' must be <= " + std::to_string(kMaxDegree));

    if (r.find("eps") || r.find("rho")) {
        if (!r.find("eps") || !r.find("rho")) throw ConfigError("regularization needs both eps and rho");
        Regularization reg{0.0, 0.0};
        r.real("eps", reg.eps);
        r.real("rho", reg.rho);
        if (!(reg.eps > 0.0 && reg.eps < 1.0)) throw ConfigError("'eps' must lie in (0, 1)");
        if (!(reg.rho > 1.0)) throw ConfigError("'rho' must be > 1");
        c.solver.regularization = reg;
    }

    InitialData& ic = c.ic;
    if (const auto* v = r.find("ic")) ic.name = *v;
    static const std::vector<std::string> presets = {"constant", "cosine-bump", "step", "random-smooth", "from-file"};
    if (std::find(presets.begin(), presets.end(), ic.name) == presets.end()) {
        throw ConfigError("unknown initial condition '" + ic.name + "'");
    }
    r.nonnegative("ic-f0", ic.f0);
    r.nonnegative("ic-g0", ic.g0);
    r.real("ic-f-amp", ic.f_amp);
    r.real("ic-g-amp", ic.g_amp);
    r.real("ic-k", ic.k);
    r.real("ic-k-y", ic.k_y);
    r.integer("ic-modes", ic.modes, 1);
    r.real("ic-split", ic.split);
    if (!(ic.split >= 0.0 && ic.split <= 1.0)) throw ConfigError("'ic-split' must lie in [0, 1]");
    r.nonnegative("ic-f-left", ic.f_left);
    r.nonnegative("ic-f-right", ic.f_right);
    r.nonnegative("ic-g-left", ic.g_left);
    r.nonnegative("ic-g-right", ic.g_right);
    if (const auto* v = r.find("ic-file")) ic.file = *v;
    if (ic.name == "from-file" && ic.file.empty()) throw ConfigError("ic from-file needs ic-file");

    r.integer("seed", c.seed, 0);
    if (const auto* v = r.find("out")) c.out = *v;
    r.integer("snapshot-interval", c.snapshot_interval, 0);
    r.integer("tau-retries", c.tau_retries, 0);
    return c;
}

}  // namespace crossdiff::cli
