#pragma once

// Eulerian Clebsch description of a charged relativistic barotropic fluid.
//
// State: lab density rho and the potentials alpha, beta, nu on a periodic
// grid; nu may carry a constant mean gradient on top of its periodic part,
// which is how a net momentum enters. The velocity is implicit,
//     lambda(v, rho) v = alpha grad beta + grad nu - k A,
//     lambda = gamma (1 + w0(rho/gamma)/c^2),
// and the potentials evolve by
//     d_t rho   = -div(rho v)
//     d_t alpha = -v.grad alpha
//     d_t beta  = -v.grad beta
//     d_t nu    = -v.grad nu - (c^2 + w0)/gamma + k (A.v - phi).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "relflow/errors.hpp"
#include "relflow/grid.hpp"
#include "relflow/parallel.hpp"
#include "relflow/spacetime.hpp"
#include "relflow/thermo.hpp"

namespace relflow {

struct ClebschFieldState {
    Grid grid;
    double t = 0.0;
    ScalarField rho;
    ScalarField alpha;
    ScalarField beta;
    ScalarField nu;     ///< periodic part of nu
    Vec3 nu_gradient;   ///< constant mean gradient: full nu = nu + nu_gradient . x
    double k = 0.0; ///< charge-to-mass ratio e/m
    BarotropicEOS eos;
    FieldConfiguration field;
    double c = 1.0;

    /// Uniform zero potentials and the given lab density on `grid`.
    static ClebschFieldState at_rest(const Grid& g, double rho, const BarotropicEOS& eos, double c = 1.0) {
        ClebschFieldState s;
        s.grid = g;
        s.rho.assign(g.cells(), rho);
        s.alpha.assign(g.cells(), 0.0);
        s.beta.assign(g.cells(), 0.0);
        s.nu.assign(g.cells(), 0.0);
        s.eos = eos;
        s.c = c;
        return s;
    }

    /// Gradient of the full nu at one cell.
    Vec3 grad_nu(std::size_t cell) const { return grad_at(grid, nu, cell) + nu_gradient; }

    void validate() const;
};

namespace detail {

inline bool out_of_plane_free(const Grid& g, const FieldSample& f) {
    if (g.dim == 1) return f.A.y == 0.0 && f.A.z == 0.0 && f.E.y == 0.0 && f.E.z == 0.0 && f.B.y == 0.0 && f.B.z == 0.0;
    return f.A.z == 0.0 && f.E.z == 0.0 && f.B.x == 0.0 && f.B.y == 0.0;
}

inline bool close(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace detail

/// The prescribed field must keep a planar flow planar and have periodic
/// potentials on the box. Checked on a handful of sample events.
inline void require_planar_periodic_field(const Grid& g, const FieldConfiguration& field, double t) {
    if (field.kind() == FieldKind::zero) return;
    const std::array<double, 3> fractions{0.0, 0.3137, 0.7071};
    for (double fx : fractions) {
        for (double fy : fractions) {
            const Vec3 x{fx * g.L, g.dim == 2 ? fy * g.L : 0.0, 0.0};
            const FieldSample s = evaluate_fields(field, x, t);
            if (!detail::out_of_plane_free(g, s))
                throw DomainError(std::string("field '") + to_string(field.kind()) +
                                  "' has components outside the grid plane");
            for (int a = 0; a < g.dim; ++a) {
                Vec3 xs = x;
                xs[static_cast<std::size_t>(a)] += g.L;
                const FieldSample p = evaluate_fields(field, xs, t);
                if (!detail::close(s.phi, p.phi) || !detail::close(s.A.x, p.A.x) || !detail::close(s.A.y, p.A.y))
                    throw DomainError(std::string("field '") + to_string(field.kind()) +
                                      "' potentials are not periodic on the grid");
            }
            if (g.dim == 1) break;
        }
    }
}

inline void ClebschFieldState::validate() const {
    grid.validate();
    const std::size_t n = grid.cells();
    if (rho.size() != n || alpha.size() != n || beta.size() != n || nu.size() != n)
        throw DomainError("clebsch state: field sizes do not match the grid");
    if (!(c > 0.0)) throw DomainError("clebsch state: c must be > 0");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(rho[i] >= 0.0)) throw DomainError("clebsch state: negative or non-finite density at cell " + std::to_string(i));
        if (!std::isfinite(alpha[i]) || !std::isfinite(beta[i]) || !std::isfinite(nu[i]))
            throw DomainError("clebsch state: non-finite potential at cell " + std::to_string(i));
    }
    for (std::size_t d = 0; d < 3; ++d) {
        if (!std::isfinite(nu_gradient[d])) throw DomainError("clebsch state: non-finite nu_gradient");
        if (static_cast<int>(d) >= grid.dim && nu_gradient[d] != 0.0)
            throw DomainError("clebsch state: nu_gradient has an out-of-plane component");
    }
    require_planar_periodic_field(grid, field, t);
}

// ---------------------------------------------------------------------------
// Velocity reconstruction

/// lambda(v, rho) v for a speed v in [0, c).
inline double clebsch_momentum_magnitude(double v, double rho, const BarotropicEOS& eos, double c) {
    const double g = 1.0 / std::sqrt(1.0 - (v / c) * (v / c));
    return g * (1.0 + enthalpy(eos, rho / g) / (c * c)) * v;
}

/// Soft power laws (Gamma <= 2) give a strictly increasing lambda(v) v; for
/// stiffer ones the root is not known to be unique and is scanned for.
inline bool speed_root_is_monotone(const BarotropicEOS& eos) { return eos.is_dust() || eos.Gamma() <= 2.0; }

struct SpeedSolveOptions {
    double tol = 1e-12;            ///< bisection tolerance on v/c
    std::size_t scan_points = 64;  ///< uniqueness scan for non-monotone cases
};

/// Solves lambda(v, rho) v = s for v in [0, c). Throws DomainError on bad
/// input or when no (or more than one) sign change is found.
inline double solve_clebsch_speed(double s, double rho, const BarotropicEOS& eos, double c,
                                  const SpeedSolveOptions& opt = {}) {
    if (!std::isfinite(s) || s < 0.0) throw DomainError("non-finite or negative Clebsch momentum");
    if (!(rho >= 0.0)) throw DomainError("negative density");
    if (s == 0.0) return 0.0;
    if (eos.is_dust() || rho == 0.0) return s / std::sqrt(1.0 + (s / c) * (s / c));

    const double vmax = c * (1.0 - 1e-12);
    auto f = [&](double v) { return clebsch_momentum_magnitude(v, rho, eos, c) - s; };
    if (!(f(vmax) > 0.0)) throw DomainError("root bracket failure: no sign change on [0, c)");

    if (!speed_root_is_monotone(eos)) {
        std::size_t changes = 0;
        double prev = -s;
        for (std::size_t i = 1; i <= opt.scan_points; ++i) {
            const double cur = f(vmax * static_cast<double>(i) / static_cast<double>(opt.scan_points));
            if ((prev < 0.0) != (cur < 0.0)) ++changes;
            prev = cur;
        }
        if (changes > 1) throw DomainError("multiple roots of lambda(v) v = s detected");
    }

    // w0 >= 0 and rho/gamma <= rho bound the root between two dust solutions.
    const double bar_max = 1.0 + enthalpy(eos, rho) / (c * c);
    double lo = (s / bar_max) / std::sqrt(1.0 + (s / (bar_max * c)) * (s / (bar_max * c)));
    double hi = std::min(vmax, s / std::sqrt(1.0 + (s / c) * (s / c)));
    if (!(f(lo) <= 0.0) || !(f(hi) >= 0.0)) {
        lo = 0.0;
        hi = vmax;
    }
    while (hi - lo > opt.tol * c) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) < 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Per-cell quantities derived from the potentials at the state's time.
struct Kinematics {
    VectorField momentum; ///< alpha grad beta + grad nu - k A  (= lambda v)
    VectorField v;
    ScalarField gamma;
    ScalarField rho0;
    ScalarField w0;
    ScalarField lambda;
    std::vector<FieldSample> fields;
};

inline VectorField clebsch_momentum(const ClebschFieldState& s, std::vector<FieldSample>* fields_out = nullptr) {
    const Grid& g = s.grid;
    VectorField w(g.cells());
    std::vector<FieldSample> fields(g.cells());
    parallel_for(g.cells(), [&](std::size_t cell) {
        fields[cell] = evaluate_fields(s.field, g.position(cell), s.t);
        Vec3 a = s.alpha[cell] * grad_at(g, s.beta, cell) + s.grad_nu(cell);
        const Vec3& A = fields[cell].A;
        for (int d = 0; d < g.dim; ++d) a[static_cast<std::size_t>(d)] -= s.k * A[static_cast<std::size_t>(d)];
        w[cell] = a;
    });
    if (fields_out) *fields_out = std::move(fields);
    return w;
}

inline Kinematics compute_kinematics(const ClebschFieldState& s, const SpeedSolveOptions& opt = {}) {
    Kinematics kin;
    kin.momentum = clebsch_momentum(s, &kin.fields);
    const std::size_t n = s.grid.cells();
    kin.v.resize(n);
    kin.gamma.resize(n);
    kin.rho0.resize(n);
    kin.w0.resize(n);
    kin.lambda.resize(n);
    parallel_for(n, [&](std::size_t cell) {
        const Vec3& w = kin.momentum[cell];
        if (!std::isfinite(w.x) || !std::isfinite(w.y) || !std::isfinite(w.z))
            throw ReconstructionError(cell, "non-finite gradient input");
        const double mag = norm(w);
        double speed = 0.0;
        try {
            speed = solve_clebsch_speed(mag, s.rho[cell], s.eos, s.c, opt);
        } catch (const DomainError& e) {
            throw ReconstructionError(cell, e.what());
        }
        const Vec3 v = mag > 0.0 ? (speed / mag) * w : Vec3{};
        const double g = 1.0 / std::sqrt(1.0 - (speed / s.c) * (speed / s.c));
        kin.v[cell] = v;
        kin.gamma[cell] = g;
        kin.rho0[cell] = s.rho[cell] / g;
        kin.w0[cell] = enthalpy(s.eos, kin.rho0[cell]);
        kin.lambda[cell] = g * (1.0 + kin.w0[cell] / (s.c * s.c));
    });
    return kin;
}

/// Physical velocity from the Clebsch representation.
inline VectorField reconstruct_velocity(const ClebschFieldState& s, const SpeedSolveOptions& opt = {}) {
    return compute_kinematics(s, opt).v;
}

// ---------------------------------------------------------------------------
// Evolution

struct ClebschRates {
    ScalarField rho;
    ScalarField alpha;
    ScalarField beta;
    ScalarField nu;
};

/// Right-hand sides of the continuity, label and nu equations.
inline ClebschRates clebsch_rates(const ClebschFieldState& s, const Kinematics& kin) {
    const Grid& g = s.grid;
    const std::size_t n = g.cells();
    ClebschRates r;

    VectorField flux(n);
    for (std::size_t i = 0; i < n; ++i) flux[i] = s.rho[i] * kin.v[i];
    r.rho = divergence(g, flux);
    for (double& x : r.rho) x = -x;

    r.alpha.resize(n);
    r.beta.resize(n);
    r.nu.resize(n);
    const double c2 = s.c * s.c;
    parallel_for(n, [&](std::size_t cell) {
        const Vec3& v = kin.v[cell];
        r.alpha[cell] = -dot(v, grad_at(g, s.alpha, cell));
        r.beta[cell] = -dot(v, grad_at(g, s.beta, cell));
        const FieldSample& f = kin.fields[cell];
        r.nu[cell] = -dot(v, s.grad_nu(cell)) - (c2 + kin.w0[cell]) / kin.gamma[cell] +
                     s.k * (dot(f.A, v) - f.phi);
    });
    return r;
}

inline ClebschRates clebsch_rates(const ClebschFieldState& s) { return clebsch_rates(s, compute_kinematics(s)); }

/// max(|v| + c_s) over the grid.
inline double max_signal_speed(const ClebschFieldState& s, const Kinematics& kin) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.grid.cells(); ++i)
        m = std::max(m, norm(kin.v[i]) + sound_speed(s.eos, kin.rho0[i], s.c));
    return m;
}

/// Largest dt allowed by the CFL condition; +inf for a state with no signal.
inline double stable_dt(const ClebschFieldState& s, double cfl = 0.4) {
    const double m = max_signal_speed(s, compute_kinematics(s));
    return m > 0.0 ? cfl * s.grid.h() / m : std::numeric_limits<double>::infinity();
}

inline double total_mass(const ClebschFieldState& s) { return integrate(s.grid, s.rho); }

struct EvolveOptions {
    double cfl = 0.4;
    SpeedSolveOptions solver;
};

/// One RK4 step; the velocity is reconstructed at every stage.
inline ClebschFieldState evolve_step(const ClebschFieldState& s, double dt, const EvolveOptions& opt = {}) {
    if (!(dt > 0.0)) throw DomainError("evolve_step: dt must be positive");
    const Kinematics kin0 = compute_kinematics(s, opt.solver);
    const double m = max_signal_speed(s, kin0);
    if (m > 0.0 && dt > opt.cfl * s.grid.h() / m * (1.0 + 1e-12))
        throw CflViolation("evolve_step: dt = " + std::to_string(dt) + " exceeds CFL limit " +
                           std::to_string(opt.cfl * s.grid.h() / m));

    const std::size_t n = s.grid.cells();
    auto shifted = [&](const ClebschRates& r, double a) {
        ClebschFieldState out = s;
        out.t = s.t + a;
        for (std::size_t i = 0; i < n; ++i) {
            out.rho[i] += a * r.rho[i];
            out.alpha[i] += a * r.alpha[i];
            out.beta[i] += a * r.beta[i];
            out.nu[i] += a * r.nu[i];
        }
        return out;
    };
    auto rates = [&](const ClebschFieldState& st) { return clebsch_rates(st, compute_kinematics(st, opt.solver)); };

    const ClebschRates k1 = clebsch_rates(s, kin0);
    const ClebschRates k2 = rates(shifted(k1, 0.5 * dt));
    const ClebschRates k3 = rates(shifted(k2, 0.5 * dt));
    const ClebschRates k4 = rates(shifted(k3, dt));

    ClebschFieldState out = s;
    out.t = s.t + dt;
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.rho[i] += w * (k1.rho[i] + 2.0 * k2.rho[i] + 2.0 * k3.rho[i] + k4.rho[i]);
        out.alpha[i] += w * (k1.alpha[i] + 2.0 * k2.alpha[i] + 2.0 * k3.alpha[i] + k4.alpha[i]);
        out.beta[i] += w * (k1.beta[i] + 2.0 * k2.beta[i] + 2.0 * k3.beta[i] + k4.beta[i]);
        out.nu[i] += w * (k1.nu[i] + 2.0 * k2.nu[i] + 2.0 * k3.nu[i] + k4.nu[i]);
    }
    return out;
}

/// Evolves `steps` steps of size dt. The final time is set to t0 + steps*dt
/// so repeated stepping does not accumulate drift in t.
inline ClebschFieldState evolve(ClebschFieldState s, double dt, std::size_t steps, const EvolveOptions& opt = {}) {
    const double t0 = s.t;
    for (std::size_t i = 0; i < steps; ++i) {
        s = evolve_step(s, dt, opt);
        s.t = t0 + static_cast<double>(i + 1) * dt;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Four-vectors and the reduced Lagrangian

/// Upper-index Clebsch four-vectors per cell:
///     v_C^mu = ((alpha d_t beta + d_t nu)/c, alpha grad beta + grad nu)
///     v_E^mu = v_C^mu + k A^mu,  A^mu = (phi/c, -A)
struct ClebschFourVectors {
    std::vector<FourVector> vC;
    std::vector<FourVector> vE;
};

namespace detail {

inline ClebschFourVectors assemble_four_vectors(const ClebschFieldState& s, std::span<const double> dbeta_dt,
                                                std::span<const double> dnu_dt) {
    const Grid& g = s.grid;
    const std::size_t n = g.cells();
    ClebschFourVectors out;
    out.vC.resize(n);
    out.vE.resize(n);
    parallel_for(n, [&](std::size_t cell) {
        const Vec3 spatial = s.alpha[cell] * grad_at(g, s.beta, cell) + s.grad_nu(cell);
        const double temporal = (s.alpha[cell] * dbeta_dt[cell] + dnu_dt[cell]) / s.c;
        const FieldSample f = evaluate_fields(s.field, g.position(cell), s.t);
        Vec3 A_in_plane;
        for (int d = 0; d < g.dim; ++d) A_in_plane[static_cast<std::size_t>(d)] = f.A[static_cast<std::size_t>(d)];
        out.vC[cell] = FourVector::from(temporal, spatial);
        out.vE[cell] = FourVector::from(temporal + s.k * f.phi / s.c, spatial - s.k * A_in_plane);
    });
    return out;
}

} // namespace detail

/// Time derivatives taken from the evolution right-hand sides.
inline ClebschFourVectors clebsch_four_vectors(const ClebschFieldState& s) {
    const ClebschRates r = clebsch_rates(s);
    return detail::assemble_four_vectors(s, r.beta, r.nu);
}

/// Time derivatives from central differences of stored levels; spatial parts
/// at the middle level.
inline ClebschFourVectors clebsch_four_vectors(const ClebschFieldState& prev, const ClebschFieldState& mid,
                                               const ClebschFieldState& next, double dt) {
    const std::size_t n = mid.grid.cells();
    if (prev.grid != mid.grid || next.grid != mid.grid) throw DomainError("clebsch_four_vectors: grids differ");
    if (prev.nu_gradient != mid.nu_gradient || next.nu_gradient != mid.nu_gradient)
        throw DomainError("clebsch_four_vectors: nu_gradient differs between levels");
    ScalarField db(n), dn(n);
    for (std::size_t i = 0; i < n; ++i) {
        db[i] = (next.beta[i] - prev.beta[i]) / (2.0 * dt);
        dn[i] = (next.nu[i] - prev.nu[i]) / (2.0 * dt);
    }
    return detail::assemble_four_vectors(mid, db, dn);
}

/// Per-cell max-norm of v_mu + v_Emu / lambda with v_mu = (c, v) (lower index).
inline ScalarField four_velocity_consistency(const ClebschFieldState& s, const ClebschFourVectors& fv,
                                             const Kinematics& kin) {
    const std::size_t n = s.grid.cells();
    ScalarField out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const FourVector vE_lower = fv.vE[i].lowered();
        const FourVector v_lower = FourVector::from(s.c, kin.v[i]);
        double m = 0.0;
        for (std::size_t mu = 0; mu < 4; ++mu) m = std::max(m, std::abs(v_lower[mu] + vE_lower[mu] / kin.lambda[i]));
        out[i] = m;
    }
    return out;
}

/// rho0 [c sqrt(v_Emu v_E^mu) - eps0 - c^2], rho0 from the reconstructed velocity.
inline ScalarField reduced_lagrangian_density(const ClebschFieldState& s, const ClebschFourVectors& fv,
                                              const Kinematics& kin) {
    const std::size_t n = s.grid.cells();
    ScalarField out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double norm2 = minkowski_dot(fv.vE[i], fv.vE[i]);
        if (!(norm2 >= 0.0))
            throw DomainError("reduced_lagrangian_density: negative v_E norm at cell " + std::to_string(i));
        const double rho0 = kin.rho0[i];
        out[i] = rho0 * (s.c * std::sqrt(norm2) - internal_energy(s.eos, rho0) - s.c * s.c);
    }
    return out;
}

inline ScalarField reduced_lagrangian_density(const ClebschFieldState& s) {
    return reduced_lagrangian_density(s, clebsch_four_vectors(s), compute_kinematics(s));
}

/// -rho0 (c^2 + eps0), the matter part of the Eulerian Lagrangian density.
inline double matter_lagrangian_density(double rho, const Vec3& v, const BarotropicEOS& eos, double c = 1.0) {
    const double rho0 = lab_to_rest(rho, v, c);
    return -rho0 * (c * c + internal_energy(eos, rho0));
}

} // namespace relflow
