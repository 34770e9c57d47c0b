#pragma once

// Field snapshots as CSV: one row per cell, columns
//     t,i[,j],x[,y],rho,alpha,beta,nu,vx[,vy],lambda,P0[,extra...]
// plus a JSON sidecar describing the grid and the physics constants. The nu
// column is the periodic part; the sidecar carries nu_gradient.

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "relflow/clebsch.hpp"
#include "relflow/io.hpp"

namespace relflow {

/// Additional per-cell column appended after P0.
struct ExtraColumn {
    std::string name;
    std::span<const double> values;
};

inline void write_snapshot_header(std::ostream& os, const Grid& g, std::span<const ExtraColumn> extra = {}) {
    os << (g.dim == 2 ? "t,i,j,x,y,rho,alpha,beta,nu,vx,vy,lambda,P0" : "t,i,x,rho,alpha,beta,nu,vx,lambda,P0");
    for (const auto& e : extra) os << ',' << e.name;
    os << '\n';
}

/// Rows for one state; the kinematics must belong to `s`.
inline void write_snapshot_rows(std::ostream& os, const ClebschFieldState& s, const Kinematics& kin,
                                std::span<const ExtraColumn> extra = {}) {
    const Grid& g = s.grid;
    for (std::size_t cell = 0; cell < g.cells(); ++cell) {
        CsvRow row(os);
        const Vec3 x = g.position(cell);
        row << s.t << g.ix(cell);
        if (g.dim == 2) row << g.jy(cell);
        row << x.x;
        if (g.dim == 2) row << x.y;
        row << s.rho[cell] << s.alpha[cell] << s.beta[cell] << s.nu[cell] << kin.v[cell].x;
        if (g.dim == 2) row << kin.v[cell].y;
        row << kin.lambda[cell] << pressure(s.eos, kin.rho0[cell]);
        for (const auto& e : extra) row << e.values[cell];
    }
}

inline nlohmann::json snapshot_sidecar(const ClebschFieldState& s) {
    nlohmann::json eos{{"kind", to_string(s.eos.kind())}};
    if (!s.eos.is_dust()) {
        eos["K"] = s.eos.K();
        eos["Gamma"] = s.eos.Gamma();
    }
    return {{"n", s.grid.n}, {"L", s.grid.L}, {"dim", s.grid.dim}, {"eos", eos}, {"k", s.k}, {"c", s.c},
            {"nu_gradient", {s.nu_gradient.x, s.nu_gradient.y, s.nu_gradient.z}}};
}

} // namespace relflow
