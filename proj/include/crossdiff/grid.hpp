#pragma once

// Uniform cell-centered finite-volume meshes with homogeneous Neumann closure.
//
// A grid is a set of equal-volume cells plus a list of faces. Interior faces
// couple a lower and an upper cell; boundary faces carry zero flux. The
// discrete gradient on a face is (v_upper - v_lower) / spacing and the
// divergence is its negative adjoint with respect to the cell/face measures,
// so summation by parts holds exactly.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <sstream>
#include <vector>

#include "crossdiff/error.hpp"
#include "crossdiff/mat2.hpp"

namespace crossdiff {

struct Face {
    std::size_t lower = 0;
    std::size_t upper = 0;
    double spacing = 0.0;  // distance between the two cell centers
    double area = 0.0;
    bool boundary = false;

    double measure() const { return area * spacing; }
};

template <class G>
concept CellGrid = requires(const G& g, std::size_t i) {
    { g.num_cells() } -> std::convertible_to<std::size_t>;
    { g.num_faces() } -> std::convertible_to<std::size_t>;
    { g.face(i) } -> std::convertible_to<const Face&>;
    { g.cell_volume() } -> std::convertible_to<double>;
    { g.measure() } -> std::convertible_to<double>;
    { g.cell_center(i) } -> std::convertible_to<Vec2>;
    { g.coupling_width() } -> std::convertible_to<std::size_t>;
    { G::dimension } -> std::convertible_to<int>;
};

class Grid1D {
public:
    static constexpr int dimension = 1;

    Grid1D(std::size_t num_cells, double length) : n_(num_cells), length_(length) {
        if (num_cells < 2) throw InvalidInput("grid needs at least 2 cells");
        if (!(length > 0.0) || !std::isfinite(length)) throw InvalidInput("grid length must be positive");
        dx_ = length / static_cast<double>(num_cells);
        // Face k sits between cells k-1 and k; faces 0 and n are the walls.
        faces_.reserve(n_ + 1);
        faces_.push_back({0, 0, dx_, 1.0, true});
        for (std::size_t k = 1; k < n_; ++k) faces_.push_back({k - 1, k, dx_, 1.0, false});
        faces_.push_back({n_ - 1, n_ - 1, dx_, 1.0, true});
    }

    std::size_t num_cells() const { return n_; }
    std::size_t num_faces() const { return faces_.size(); }
    const Face& face(std::size_t k) const { return faces_[k]; }
    std::span<const Face> faces() const { return faces_; }
    double length() const { return length_; }
    double dx() const { return dx_; }
    double cell_volume() const { return dx_; }
    double measure() const { return length_; }
    Vec2 cell_center(std::size_t i) const { return {(static_cast<double>(i) + 0.5) * dx_, 0.0}; }
    std::size_t coupling_width() const { return 1; }

private:
    std::size_t n_;
    double length_;
    double dx_;
    std::vector<Face> faces_;
};

/// Tensor-product extension; cell (i, j) has index i + nx * j.
class Grid2D {
public:
    static constexpr int dimension = 2;

    Grid2D(std::size_t nx, std::size_t ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
        if (nx < 2 || ny < 2) throw InvalidInput("grid needs at least 2 cells per direction");
        if (!(lx > 0.0 && ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
            throw InvalidInput("grid lengths must be positive");
        }
        dx_ = lx / static_cast<double>(nx);
        dy_ = ly / static_cast<double>(ny);
        faces_.reserve((nx + 1) * ny + nx * (ny + 1));
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i <= nx; ++i) {
                if (i == 0 || i == nx) {
                    const std::size_t c = index(i == 0 ? 0 : nx - 1, j);
                    faces_.push_back({c, c, dx_, dy_, true});
                } else {
                    faces_.push_back({index(i - 1, j), index(i, j), dx_, dy_, false});
                }
            }
        }
        for (std::size_t j = 0; j <= ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                if (j == 0 || j == ny) {
                    const std::size_t c = index(i, j == 0 ? 0 : ny - 1);
                    faces_.push_back({c, c, dy_, dx_, true});
                } else {
                    faces_.push_back({index(i, j - 1), index(i, j), dy_, dx_, false});
                }
            }
        }
    }

    std::size_t index(std::size_t i, std::size_t j) const { return i + nx_ * j; }
    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }
    double length_x() const { return lx_; }
    double length_y() const { return ly_; }
    std::size_t num_cells() const { return nx_ * ny_; }
    std::size_t num_faces() const { return faces_.size(); }
    const Face& face(std::size_t k) const { return faces_[k]; }
    std::span<const Face> faces() const { return faces_; }
    double cell_volume() const { return dx_ * dy_; }
    double measure() const { return lx_ * ly_; }
    Vec2 cell_center(std::size_t c) const {
        return {(static_cast<double>(c % nx_) + 0.5) * dx_, (static_cast<double>(c / nx_) + 0.5) * dy_};
    }
    std::size_t coupling_width() const { return nx_; }

private:
    std::size_t nx_, ny_;
    double lx_, ly_;
    double dx_ = 0.0, dy_ = 0.0;
    std::vector<Face> faces_;
};

/// Paired nonnegative cell fields u = (f, g).
struct State {
    std::vector<double> f;
    std::vector<double> g;

    std::size_t size() const { return f.size(); }
    Vec2 at(std::size_t i) const { return {f[i], g[i]}; }

    double min_value() const {
        double m = f.empty() ? 0.0 : f[0];
        for (double v : f) m = std::min(m, v);
        for (double v : g) m = std::min(m, v);
        return m;
    }
    double max_value() const {
        double m = f.empty() ? 0.0 : f[0];
        for (double v : f) m = std::max(m, v);
        for (double v : g) m = std::max(m, v);
        return m;
    }

    friend bool operator==(const State&, const State&) = default;
};

template <CellGrid G>
void require_matches(const G& grid, const State& u) {
    if (u.f.size() != grid.num_cells() || u.g.size() != grid.num_cells()) {
        std::ostringstream os;
        os << "state has " << u.f.size() << "/" << u.g.size() << " cells, grid has " << grid.num_cells();
        throw InvalidInput(os.str());
    }
}

/// Throws unless every cell value is >= -tolerance.
inline void require_nonnegative(const State& u, double tolerance = 0.0) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u.f[i] >= -tolerance && u.g[i] >= -tolerance)) {
            std::ostringstream os;
            os << "state must be nonnegative, cell " << i << " has (" << u.f[i] << ", " << u.g[i] << ")";
            throw InvalidInput(os.str());
        }
    }
}

template <CellGrid G>
std::vector<double> face_gradient(const G& grid, std::span<const double> values) {
    if (values.size() != grid.num_cells()) throw InvalidInput("field size does not match grid");
    std::vector<double> out(grid.num_faces(), 0.0);
    for (std::size_t k = 0; k < grid.num_faces(); ++k) {
        const Face& fc = grid.face(k);
        if (!fc.boundary) out[k] = (values[fc.upper] - values[fc.lower]) / fc.spacing;
    }
    return out;
}

template <CellGrid G>
std::vector<double> divergence(const G& grid, std::span<const double> flux) {
    if (flux.size() != grid.num_faces()) throw InvalidInput("flux size does not match grid faces");
    std::vector<double> out(grid.num_cells(), 0.0);
    const double vol = grid.cell_volume();
    for (std::size_t k = 0; k < grid.num_faces(); ++k) {
        const Face& fc = grid.face(k);
        if (fc.boundary) {
            if (flux[k] != 0.0) {
                std::ostringstream os;
                os << "boundary face " << k << " carries nonzero flux " << flux[k];
                throw InvalidInput(os.str());
            }
            continue;
        }
        const double q = fc.area * flux[k] / vol;
        out[fc.lower] += q;
        out[fc.upper] -= q;
    }
    return out;
}

/// Midpoint quadrature.
template <CellGrid G>
double integrate(const G& grid, std::span<const double> values) {
    if (values.size() != grid.num_cells()) throw InvalidInput("field size does not match grid");
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.cell_volume();
}

template <CellGrid G, class Fn>
    requires std::invocable<Fn, std::size_t>
double integrate(const G& grid, Fn&& per_cell) {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.num_cells(); ++i) s += std::invoke(per_cell, i);
    return s * grid.cell_volume();
}

/// Sum over faces of w_k * measure_k, the face-side counterpart of integrate.
template <CellGrid G>
double integrate_faces(const G& grid, std::span<const double> face_values) {
    double s = 0.0;
    for (std::size_t k = 0; k < grid.num_faces(); ++k) {
        if (!grid.face(k).boundary) s += face_values[k] * grid.face(k).measure();
    }
    return s;
}

}  // namespace crossdiff
