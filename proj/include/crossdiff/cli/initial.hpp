#pragma once

// Initial-condition presets evaluated at cell centers. All presets are
// clipped at 0; random-smooth is a function of the seed alone.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "crossdiff/cli/config.hpp"
#include "crossdiff/grid.hpp"

namespace crossdiff::cli {

namespace detail {

struct Extent {
    double lx;
    double ly;
};

template <CellGrid G>
Extent extent(const G& grid) {
    if constexpr (G::dimension == 1) return {grid.length(), 1.0};
    else return {grid.length_x(), grid.length_y()};
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

/// Low-frequency Fourier sum with coefficients uniform in [-1, 1] scaled by 1/(1 + mx + my).
struct FourierField {
    std::vector<double> coeff;
    int modes;
    bool two_d;

    FourierField(std::mt19937_64& rng, int m, bool two_dim) : modes(m), two_d(two_dim) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const int ny = two_d ? modes + 1 : 1;
        coeff.resize(static_cast<std::size_t>((modes + 1) * ny));
        for (double& c : coeff) c = u(rng);
    }

    double operator()(double sx, double sy) const {
        const int ny = two_d ? modes + 1 : 1;
        double s = 0.0;
        for (int my = 0; my < ny; ++my) {
            for (int mx = 0; mx <= modes; ++mx) {
                if (mx == 0 && my == 0) continue;
                const double c = coeff[static_cast<std::size_t>(mx + (modes + 1) * my)];
                s += c / (1.0 + mx + my) * std::cos(mx * std::numbers::pi * sx) * std::cos(my * std::numbers::pi * sy);
            }
        }
        return s;
    }
};

}  // namespace detail

/// Reads the `f` and `g` columns of a CSV with a header row.
inline State read_state_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read initial-condition file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
    const auto header = detail::split_csv_line(line);
    const auto col = [&](const char* name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ConfigError(path.string() + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t cf = col("f"), cg = col("g");
    State u;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ConfigError(path.string() + ":" + std::to_string(row) + ": expected " +
                              std::to_string(header.size()) + " columns");
        }
        u.f.push_back(parse_real("f", cells[cf]));
        u.g.push_back(parse_real("g", cells[cg]));
    }
    return u;
}

template <CellGrid G>
State make_initial(const G& grid, const InitialData& ic, std::uint64_t seed) {
    const std::size_t n = grid.num_cells();
    const detail::Extent ext = detail::extent(grid);
    State u;
    u.f.resize(n);
    u.g.resize(n);

    if (ic.name == "from-file") {
        State loaded = read_state_csv(ic.file);
        if (loaded.size() != n) {
            throw ConfigError("initial-condition file has " + std::to_string(loaded.size()) + " rows, grid has " +
                              std::to_string(n) + " cells");
        }
        u = std::move(loaded);
    } else if (ic.name == "constant") {
        std::fill(u.f.begin(), u.f.end(), ic.f0);
        std::fill(u.g.begin(), u.g.end(), ic.g0);
    } else if (ic.name == "cosine-bump") {
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 x = grid.cell_center(i);
            const double shape = std::cos(ic.k * std::numbers::pi * x[0] / ext.lx) *
                                 std::cos(ic.k_y * std::numbers::pi * x[1] / ext.ly);
            u.f[i] = ic.f0 + ic.f_amp * shape;
            u.g[i] = ic.g0 + ic.g_amp * shape;
        }
    } else if (ic.name == "step") {
        for (std::size_t i = 0; i < n; ++i) {
            const bool left = grid.cell_center(i)[0] < ic.split * ext.lx;
            u.f[i] = left ? ic.f_left : ic.f_right;
            u.g[i] = left ? ic.g_left : ic.g_right;
        }
    } else if (ic.name == "random-smooth") {
        std::mt19937_64 rng(seed);
        const bool two_d = G::dimension == 2;
        const detail::FourierField pf(rng, ic.modes, two_d);
        const detail::FourierField pg(rng, ic.modes, two_d);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 x = grid.cell_center(i);
            const double sx = x[0] / ext.lx, sy = x[1] / ext.ly;
            u.f[i] = ic.f0 + ic.f_amp * pf(sx, sy);
            u.g[i] = ic.g0 + ic.g_amp * pg(sx, sy);
        }
    } else {
        throw ConfigError("unknown initial condition '" + ic.name + "'");
    }

    for (auto* comp : {&u.f, &u.g}) {
        for (double& v : *comp) {
            if (!std::isfinite(v)) throw ConfigError("initial condition contains non-finite values");
            v = std::max(v, 0.0);
        }
    }
    return u;
}

}  // namespace crossdiff::cli
