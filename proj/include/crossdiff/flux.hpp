#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "crossdiff/grid.hpp"
#include "crossdiff/params.hpp"

namespace crossdiff {

/// How a cell-based mobility is carried to a face.
enum class FaceMobility { upwind, arithmetic };

struct FaceWeights {
    double lower;
    double upper;
};

/// Weights of the two adjacent cells for a face whose driving gradient is
/// `drive` (upper minus lower). Upwind takes the cell on the high-pressure
/// side, which is where the flux comes from.
inline FaceWeights face_weights(FaceMobility mode, double drive) {
    if (mode == FaceMobility::arithmetic || drive == 0.0) return {0.5, 0.5};
    return drive > 0.0 ? FaceWeights{0.0, 1.0} : FaceWeights{1.0, 0.0};
}

/// Per-face fluxes of the exact system, f_face grad(af+bg) and g_face grad(cf+dg).
/// Boundary faces are zero.
template <CellGrid G>
std::array<std::vector<double>, 2> exact_fluxes(const G& grid, const State& u, const Params& p,
                                                FaceMobility mode = FaceMobility::upwind) {
    std::array<std::vector<double>, 2> out{std::vector<double>(grid.num_faces(), 0.0),
                                           std::vector<double>(grid.num_faces(), 0.0)};
    for (std::size_t k = 0; k < grid.num_faces(); ++k) {
        const Face& fc = grid.face(k);
        if (fc.boundary) continue;
        const Vec2 ul = u.at(fc.lower);
        const Vec2 ur = u.at(fc.upper);
        const Vec2 delta{ur[0] - ul[0], ur[1] - ul[1]};
        for (int c = 0; c < 2; ++c) {
            const double drive = dot(p.coupling_row(c), delta);
            const FaceWeights w = face_weights(mode, drive);
            const double mob = w.lower * ul[c] + w.upper * ur[c];
            out[static_cast<std::size_t>(c)][k] = mob * drive / fc.spacing;
        }
    }
    return out;
}

}  // namespace crossdiff
