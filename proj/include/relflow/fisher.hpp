#pragma once

// Quantum Lagrangian density in which the classical internal energy is
// replaced by the Lorentz-invariant Fisher information term:
//     L = rho0 [c sqrt(v_Emu v_E^mu) - c^2] - (hbar^2 / 2m) d^mu a0 d_mu a0,
//     a0 = sqrt(rho0 / m).
// Only densities are evaluated; no field equations are derived or solved.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "relflow/clebsch.hpp"
#include "relflow/errors.hpp"
#include "relflow/grid.hpp"
#include "relflow/thermo.hpp"

namespace relflow {

struct QuantumFieldState {
    Grid grid;
    double t = 0.0;
    ScalarField rho0; ///< rest density
    ScalarField alpha;
    ScalarField beta;
    ScalarField nu;
    double m = 1.0;
    double hbar = 1.0;

    /// a0 = sqrt(rho0 / m); throws on negative density.
    ScalarField amplitude() const {
        ScalarField a(rho0.size());
        for (std::size_t i = 0; i < rho0.size(); ++i) {
            if (!(rho0[i] >= 0.0)) throw DomainError("quantum state: negative rest density at cell " + std::to_string(i));
            a[i] = std::sqrt(rho0[i] / m);
        }
        return a;
    }
};

/// Neighbouring time levels for d_t a0 and d_t of the Clebsch potentials.
struct QuantumTimeLevels {
    const QuantumFieldState* prev = nullptr;
    const QuantumFieldState* next = nullptr;
    double dt = 0.0;
};

/// -(hbar^2/2m) [(d_t a0 / c)^2 - |grad a0|^2]; d_t a0 = 0 without time levels.
inline ScalarField fisher_density(const QuantumFieldState& s, double c = 1.0,
                                  std::optional<QuantumTimeLevels> levels = std::nullopt) {
    if (!(s.m > 0.0)) throw DomainError("fisher_density: mass must be > 0");
    const Grid& g = s.grid;
    const ScalarField a = s.amplitude();
    ScalarField dadt(g.cells(), 0.0);
    if (levels) {
        if (!levels->prev || !levels->next || !(levels->dt > 0.0))
            throw InsufficientData("fisher_density: incomplete time levels");
        const ScalarField ap = levels->prev->amplitude();
        const ScalarField an = levels->next->amplitude();
        for (std::size_t i = 0; i < g.cells(); ++i) dadt[i] = (an[i] - ap[i]) / (2.0 * levels->dt);
    }
    const double coeff = s.hbar * s.hbar / (2.0 * s.m);
    ScalarField out(g.cells());
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const Vec3 ga = grad_at(g, a, i);
        const double dt_c = dadt[i] / c;
        out[i] = -coeff * (dt_c * dt_c - dot(ga, ga));
    }
    return out;
}

/// Clebsch state carrying the same potentials, with lab density rho = gamma rho0.
/// With rho0 known, lambda = gamma (1 + w0(rho0)/c^2), so gamma v follows from
/// |alpha grad beta + grad nu - k A| without a root solve.
inline ClebschFieldState to_clebsch_state(const QuantumFieldState& s, const FieldConfiguration& field, double k,
                                          double c, const BarotropicEOS& eos = BarotropicEOS::dust()) {
    ClebschFieldState cs;
    cs.grid = s.grid;
    cs.t = s.t;
    cs.alpha = s.alpha;
    cs.beta = s.beta;
    cs.nu = s.nu;
    cs.k = k;
    cs.field = field;
    cs.c = c;
    cs.eos = eos;
    cs.rho = s.rho0;
    const VectorField w = clebsch_momentum(cs);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double mag = norm(w[i]);
        double v = 0.0;
        if (mag > 0.0) {
            const double bar = 1.0 + enthalpy(eos, s.rho0[i]) / (c * c);
            const double u = mag / bar; // gamma v
            v = u / std::sqrt(1.0 + (u / c) * (u / c));
        }
        cs.rho[i] = s.rho0[i] / std::sqrt(1.0 - (v / c) * (v / c));
    }
    cs.validate();
    return cs;
}

/// Whether a classical internal energy is kept next to the Fisher term.
enum class InternalEnergyMode { fisher_only, fisher_plus_eos };

struct QuantumLagrangianOptions {
    InternalEnergyMode mode = InternalEnergyMode::fisher_only;
    BarotropicEOS eos; ///< used only with fisher_plus_eos
    std::optional<QuantumTimeLevels> levels;
};

/// Reduced-Lagrangian term (eps0 = 0 by default) plus the Fisher term.
inline ScalarField quantum_lagrangian_density(const QuantumFieldState& s, const FieldConfiguration& field, double k,
                                              double c = 1.0, const QuantumLagrangianOptions& opt = {}) {
    const BarotropicEOS eos = opt.mode == InternalEnergyMode::fisher_only ? BarotropicEOS::dust() : opt.eos;
    ScalarField classical;
    if (opt.levels) {
        if (!opt.levels->prev || !opt.levels->next) throw InsufficientData("quantum_lagrangian_density: incomplete time levels");
        const ClebschFieldState prev = to_clebsch_state(*opt.levels->prev, field, k, c, eos);
        const ClebschFieldState mid = to_clebsch_state(s, field, k, c, eos);
        const ClebschFieldState next = to_clebsch_state(*opt.levels->next, field, k, c, eos);
        classical = reduced_lagrangian_density(mid, clebsch_four_vectors(prev, mid, next, opt.levels->dt),
                                               compute_kinematics(mid));
    } else {
        classical = reduced_lagrangian_density(to_clebsch_state(s, field, k, c, eos));
    }
    const ScalarField fisher = fisher_density(s, c, opt.levels);
    for (std::size_t i = 0; i < classical.size(); ++i) classical[i] += fisher[i];
    return classical;
}

/// rho (v^2/2 - eps0 - c^2) with eps0 evaluated at rho0 = rho/gamma.
inline double classical_limit_density(double rho, const Vec3& v, const BarotropicEOS& eos, double c = 1.0) {
    const double rho0 = lab_to_rest(rho, v, c);
    return rho * (0.5 * dot(v, v) - internal_energy(eos, rho0) - c * c);
}

inline ScalarField classical_limit_density(std::span<const double> rho, std::span<const Vec3> v,
                                           const BarotropicEOS& eos, double c = 1.0) {
    if (rho.size() != v.size()) throw DomainError("classical_limit_density: size mismatch");
    ScalarField out(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) out[i] = classical_limit_density(rho[i], v[i], eos, c);
    return out;
}

} // namespace relflow
