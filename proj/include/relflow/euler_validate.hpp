#pragma once

// Independent referee for the Clebsch evolution: evaluates the charged
// relativistic Euler equation
//     d(lambda v)/dt + (1/rho) grad P0 - k (v x B + E) = R
// on stored snapshots (t - dt, t, t + dt). Only the velocity reconstruction is
// shared with the evolver; time derivatives come from the snapshots and
// spatial ones from fresh fourth-order stencils.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "relflow/clebsch.hpp"
#include "relflow/errors.hpp"
#include "relflow/grid.hpp"
#include "relflow/io.hpp"

namespace relflow {

/// RMS norms of the individual terms of the residual.
struct ResidualTerms {
    double inertia = 0.0;
    double pressure = 0.0;
    double electric = 0.0;
    double magnetic = 0.0;
};

struct ResidualReport {
    Grid grid;
    double dt = 0.0;
    double l2 = 0.0;   ///< RMS of |R| over unmasked cells (m/s^2)
    double linf = 0.0; ///< max |R| over unmasked cells
    std::optional<double> order;
    ResidualTerms terms;
    std::size_t masked_cells = 0;
    VectorField residual; ///< zero on masked cells
};

struct ResidualOptions {
    double rho_floor = 1e-12; ///< cells with rho < rho_floor * max(rho) are masked
};

/// d_t g + v.grad g at levels[center], central in time, fourth order in space.
inline ScalarField material_derivative(const Grid& grid, std::span<const ScalarField> levels, std::span<const Vec3> v,
                                       double dt, std::size_t center = 1) {
    if (levels.size() < 3 || center == 0 || center + 1 >= levels.size())
        throw InsufficientData("material_derivative: needs a level on each side of the evaluation level");
    if (!(dt > 0.0)) throw DomainError("material_derivative: dt must be positive");
    const auto& prev = levels[center - 1];
    const auto& mid = levels[center];
    const auto& next = levels[center + 1];
    const std::size_t n = grid.cells();
    if (prev.size() != n || mid.size() != n || next.size() != n || v.size() != n)
        throw DomainError("material_derivative: field sizes do not match the grid");
    ScalarField out(n);
    parallel_for(n, [&](std::size_t c) {
        out[c] = (next[c] - prev[c]) / (2.0 * dt) + dot(v[c], grad_at(grid, mid, c));
    });
    return out;
}

namespace detail {

inline void check_triplet(std::span<const ClebschFieldState> states, double dt) {
    if (states.size() != 3) throw InsufficientData("euler residual: exactly three consecutive states are required");
    if (!(dt > 0.0)) throw DomainError("euler residual: dt must be positive");
    const auto& m = states[1];
    for (const auto& s : states) {
        if (s.grid != m.grid || s.eos != m.eos || s.k != m.k || s.c != m.c || !(s.field == m.field) ||
            s.nu_gradient != m.nu_gradient)
            throw DomainError("euler residual: states describe different problems");
    }
    const double tol = 1e-9 * dt + 1e-12 * std::abs(m.t);
    if (std::abs((states[1].t - states[0].t) - dt) > tol || std::abs((states[2].t - states[1].t) - dt) > tol)
        throw DomainError("euler residual: states are not equally spaced by dt");
}

/// Component `axis` of a vector field as a scalar field.
inline ScalarField component(std::span<const Vec3> f, int axis) {
    ScalarField out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i][static_cast<std::size_t>(axis)];
    return out;
}

/// (v.grad) f for an in-plane vector field f.
inline VectorField advect(const Grid& g, std::span<const Vec3> v, std::span<const Vec3> f) {
    VectorField out(g.cells());
    for (int a = 0; a < g.dim; ++a) {
        const ScalarField comp = component(f, a);
        for (std::size_t c = 0; c < g.cells(); ++c)
            out[c][static_cast<std::size_t>(a)] = dot(v[c], grad_at(g, comp, c));
    }
    return out;
}

inline Vec3 in_plane(const Grid& g, const Vec3& a) {
    Vec3 out;
    for (int d = 0; d < g.dim; ++d) out[static_cast<std::size_t>(d)] = a[static_cast<std::size_t>(d)];
    return out;
}

struct NormAccumulator {
    double sum2 = 0.0;
    double max = 0.0;
    std::size_t count = 0;

    void add(const Vec3& r) {
        const double m = norm(r);
        sum2 += m * m;
        max = std::max(max, m);
        ++count;
    }
    double rms() const { return count ? std::sqrt(sum2 / static_cast<double>(count)) : 0.0; }
};

struct ResidualParts {
    VectorField inertia, pressure, electric, magnetic;
};

inline ResidualReport finish_report(const ClebschFieldState& mid, double dt, const ResidualParts& parts,
                                    const ResidualOptions& opt) {
    const std::size_t n = mid.grid.cells();
    const double rho_max = *std::max_element(mid.rho.begin(), mid.rho.end());
    const double floor = opt.rho_floor * rho_max;

    ResidualReport rep;
    rep.grid = mid.grid;
    rep.dt = dt;
    rep.residual.assign(n, Vec3{});
    NormAccumulator total, in, pr, el, ma;
    for (std::size_t c = 0; c < n; ++c) {
        if (!(mid.rho[c] >= floor) || mid.rho[c] == 0.0) {
            ++rep.masked_cells;
            continue;
        }
        const Vec3 r = parts.inertia[c] + parts.pressure[c] - parts.electric[c] - parts.magnetic[c];
        rep.residual[c] = r;
        total.add(r);
        in.add(parts.inertia[c]);
        pr.add(parts.pressure[c]);
        el.add(parts.electric[c]);
        ma.add(parts.magnetic[c]);
    }
    if (total.count == 0) throw InsufficientData("euler residual: every cell is below the density floor");
    rep.l2 = total.rms();
    rep.linf = total.max;
    rep.terms = {in.rms(), pr.rms(), el.rms(), ma.rms()};
    return rep;
}

} // namespace detail

/// Residual of d(lambda v)/dt = -(1/rho) grad P0 + k (v x B + E) at the middle state.
inline ResidualReport euler_residual(std::span<const ClebschFieldState> states, double dt,
                                     const ResidualOptions& opt = {}) {
    detail::check_triplet(states, dt);
    const ClebschFieldState& mid = states[1];
    const Grid& g = mid.grid;
    const std::size_t n = g.cells();

    std::array<Kinematics, 3> kin{compute_kinematics(states[0]), compute_kinematics(states[1]),
                                  compute_kinematics(states[2])};
    std::array<VectorField, 3> mom;
    for (std::size_t l = 0; l < 3; ++l) {
        mom[l].resize(n);
        for (std::size_t c = 0; c < n; ++c) mom[l][c] = kin[l].lambda[c] * kin[l].v[c];
    }

    const Kinematics& km = kin[1];
    ScalarField P0(n);
    for (std::size_t c = 0; c < n; ++c) P0[c] = pressure(mid.eos, km.rho0[c]);

    detail::ResidualParts parts;
    parts.inertia = detail::advect(g, km.v, mom[1]);
    parts.pressure.resize(n);
    parts.electric.resize(n);
    parts.magnetic.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        parts.inertia[c] += (mom[2][c] - mom[0][c]) / (2.0 * dt);
        parts.pressure[c] = mid.rho[c] > 0.0 ? grad_at(g, P0, c) / mid.rho[c] : Vec3{};
        const FieldSample f = evaluate_fields(mid.field, g.position(c), mid.t);
        parts.electric[c] = detail::in_plane(g, mid.k * f.E);
        parts.magnetic[c] = detail::in_plane(g, mid.k * cross(km.v[c], f.B));
    }
    return detail::finish_report(mid, dt, parts, opt);
}

/// Residual of the enthalpy form for neutral fluids,
///     (e0 + P0)(gamma/c^2) d(gamma v)/dt + grad P0 + (gamma^2/c^2)(dP0/dt) v,
/// divided by rho so it is comparable with euler_residual.
inline ResidualReport euler_residual_alt(std::span<const ClebschFieldState> states, double dt,
                                         const ResidualOptions& opt = {}) {
    detail::check_triplet(states, dt);
    const ClebschFieldState& mid = states[1];
    if (mid.k != 0.0) throw DomainError("euler_residual_alt: only neutral fluids (k = 0) are supported");
    const Grid& g = mid.grid;
    const std::size_t n = g.cells();
    const double c2 = mid.c * mid.c;

    std::array<Kinematics, 3> kin{compute_kinematics(states[0]), compute_kinematics(states[1]),
                                  compute_kinematics(states[2])};
    std::array<VectorField, 3> gv;
    std::array<ScalarField, 3> P0;
    for (std::size_t l = 0; l < 3; ++l) {
        gv[l].resize(n);
        P0[l].resize(n);
        for (std::size_t c = 0; c < n; ++c) {
            gv[l][c] = kin[l].gamma[c] * kin[l].v[c];
            P0[l][c] = pressure(mid.eos, kin[l].rho0[c]);
        }
    }
    const Kinematics& km = kin[1];
    const ScalarField dP0_dt = material_derivative(g, P0, km.v, dt);
    VectorField dgv_dt = detail::advect(g, km.v, gv[1]);

    detail::ResidualParts parts;
    parts.inertia.resize(n);
    parts.pressure.resize(n);
    parts.electric.assign(n, Vec3{});
    parts.magnetic.assign(n, Vec3{});
    for (std::size_t c = 0; c < n; ++c) {
        if (!(mid.rho[c] > 0.0)) continue;
        dgv_dt[c] += (gv[2][c] - gv[0][c]) / (2.0 * dt);
        const double rho0 = km.rho0[c];
        const double e0 = rho0 * c2 + rho0 * internal_energy(mid.eos, rho0);
        const double gm = km.gamma[c];
        parts.inertia[c] = ((e0 + P0[1][c]) * gm / c2 / mid.rho[c]) * dgv_dt[c];
        parts.pressure[c] = (grad_at(g, P0[1], c) + (gm * gm / c2 * dP0_dt[c]) * km.v[c]) / mid.rho[c];
    }
    return detail::finish_report(mid, dt, parts, opt);
}

// ---------------------------------------------------------------------------
// Convergence studies

/// Least-squares slope of log(error) against log(spacing).
inline double fit_order(std::span<const double> spacing, std::span<const double> error) {
    if (spacing.size() != error.size() || spacing.size() < 2)
        throw InsufficientData("fit_order: need at least two (spacing, error) pairs");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(spacing.size());
    for (std::size_t i = 0; i < spacing.size(); ++i) {
        if (!(spacing[i] > 0.0) || !(error[i] > 0.0)) throw DomainError("fit_order: values must be positive");
        const double x = std::log(spacing[i]);
        const double y = std::log(error[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// One resolution of a study: three snapshots, their spacing in time, and the
/// refinement parameter the order is measured against (h or dt).
struct ConvergenceCase {
    std::array<ClebschFieldState, 3> states;
    double dt = 0.0;
    double spacing = 0.0;
};

using CaseBuilder = std::function<ConvergenceCase(std::size_t n)>;

enum class ResidualForm { velocity, enthalpy };

struct ConvergenceResult {
    std::vector<std::size_t> resolutions;
    std::vector<double> spacings;
    std::vector<ResidualReport> reports;
    std::optional<double> order_l2;
    std::optional<double> order_linf;
    bool monotone = false; ///< l2 strictly decreasing with refinement
};

/// dt = coefficient * h.
struct DtRule {
    double coefficient = 0.25;
    double operator()(double h) const { return coefficient * h; }
};

/// Runs `build` at every resolution (coarse to fine) and fits orders when the
/// L2 residual decreases monotonically.
inline ConvergenceResult convergence_study(const CaseBuilder& build, std::span<const std::size_t> resolutions,
                                           ResidualForm form = ResidualForm::velocity,
                                           const ResidualOptions& opt = {}) {
    if (resolutions.size() < 3) throw InsufficientData("convergence_study: at least three resolutions are required");
    ConvergenceResult out;
    for (std::size_t n : resolutions) {
        const ConvergenceCase cs = build(n);
        ResidualReport rep = form == ResidualForm::velocity ? euler_residual(cs.states, cs.dt, opt)
                                                            : euler_residual_alt(cs.states, cs.dt, opt);
        out.resolutions.push_back(n);
        out.spacings.push_back(cs.spacing);
        out.reports.push_back(std::move(rep));
    }
    out.monotone = true;
    for (std::size_t i = 1; i < out.reports.size(); ++i) {
        const bool finer = out.spacings[i] < out.spacings[i - 1];
        if (!finer || !(out.reports[i].l2 < out.reports[i - 1].l2)) out.monotone = false;
    }
    if (out.monotone) {
        std::vector<double> l2, linf;
        for (const auto& r : out.reports) {
            l2.push_back(r.l2);
            linf.push_back(r.linf);
        }
        out.order_l2 = fit_order(out.spacings, l2);
        if (std::all_of(linf.begin(), linf.end(), [](double x) { return x > 0.0; }))
            out.order_linf = fit_order(out.spacings, linf);
        for (auto& r : out.reports) r.order = out.order_l2;
    }
    return out;
}

/// `n,dt,l2,linf,order_estimate`; the order column is empty when no fit was made.
inline void write_residual_csv(std::ostream& os, const ConvergenceResult& res) {
    os << "n,dt,l2,linf,order_estimate\n";
    for (std::size_t i = 0; i < res.reports.size(); ++i) {
        CsvRow row(os);
        row << res.resolutions[i] << res.reports[i].dt << res.reports[i].l2 << res.reports[i].linf;
        if (res.order_l2) row << *res.order_l2; else row << std::string_view{};
    }
}

inline void write_residual_text(std::ostream& os, const ConvergenceResult& res) {
    for (std::size_t i = 0; i < res.reports.size(); ++i) {
        const auto& r = res.reports[i];
        os << "n=" << res.resolutions[i] << " dt=" << format_double(r.dt) << " l2=" << format_double(r.l2)
           << " linf=" << format_double(r.linf) << " masked=" << r.masked_cells
           << " terms[inertia=" << format_double(r.terms.inertia) << " pressure=" << format_double(r.terms.pressure)
           << " electric=" << format_double(r.terms.electric) << " magnetic=" << format_double(r.terms.magnetic)
           << "]\n";
    }
    if (res.order_l2) os << "observed order (l2): " << format_double(*res.order_l2) << "\n";
    else os << "observed order: not fitted (residuals not monotone)\n";
}

} // namespace relflow
