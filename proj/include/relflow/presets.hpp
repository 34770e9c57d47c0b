#pragma once

// Named initial conditions. Every preset is smooth and periodic on its grid;
// uniform_flow and charged_equilibrium are exact solutions and can be sampled
// at any time.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relflow/clebsch.hpp"
#include "relflow/errors.hpp"
#include "relflow/fisher.hpp"
#include "relflow/grid.hpp"
#include "relflow/thermo.hpp"

namespace relflow {

enum class Preset { static_fluid, uniform_flow, acoustic, charged_equilibrium, gaussian_packet };

struct PresetInfo {
    Preset id;
    std::string_view name;
    std::string_view summary;
};

inline constexpr PresetInfo preset_catalog[] = {
    {Preset::static_fluid, "static", "uniform density at rest, constant labels"},
    {Preset::uniform_flow, "uniform_flow", "uniform translation; mean momentum carried by a constant grad nu, alpha advected (exact)"},
    {Preset::acoustic, "acoustic", "small-amplitude sound wave with a label shear"},
    {Preset::charged_equilibrium, "charged_equilibrium",
     "charged fluid at rest, pressure balancing a cosine electrostatic potential (exact)"},
    {Preset::gaussian_packet, "gaussian_packet", "static normalized Gaussian amplitude a0 = sqrt(rho0/m)"},
};

inline std::optional<Preset> preset_from_name(std::string_view name) {
    for (const auto& p : preset_catalog)
        if (p.name == name) return p.id;
    return std::nullopt;
}

inline std::string_view preset_name(Preset p) {
    for (const auto& info : preset_catalog)
        if (info.id == p) return info.name;
    return "unknown";
}

/// Parameters shared by the presets; each preset reads the ones it needs.
struct PresetParams {
    double rho = 1.0;        ///< background lab density
    double amplitude = 1e-3; ///< relative density amplitude (acoustic)
    double velocity = 0.5;   ///< translation speed (uniform_flow), in units of c
    double phi0 = 0.1;       ///< potential amplitude (charged_equilibrium)
    double sigma = 1.0;      ///< Gaussian width (gaussian_packet)
    double mass = 1.0;       ///< particle mass m (gaussian_packet)

    friend bool operator==(const PresetParams&, const PresetParams&) = default;
};

namespace detail {

inline double base_wavenumber(const Grid& g) { return 2.0 * std::numbers::pi / g.L; }

struct Translation {
    double v0, gamma, w0, lambda;
};

inline Translation translation(const BarotropicEOS& eos, double c, const PresetParams& p) {
    const double v0 = p.velocity * c;
    if (!(std::abs(v0) < c)) throw DomainError("uniform_flow: |velocity| must be < 1 (units of c)");
    const double gm = 1.0 / std::sqrt(1.0 - (v0 / c) * (v0 / c));
    const double w0 = enthalpy(eos, p.rho / gm);
    return {v0, gm, w0, gm * (1.0 + w0 / (c * c))};
}

} // namespace detail

inline ClebschFieldState make_static(const Grid& g, const BarotropicEOS& eos, double c, const PresetParams& p) {
    if (!(p.rho >= 0.0)) throw DomainError("static: rho must be >= 0");
    return ClebschFieldState::at_rest(g, p.rho, eos, c);
}

/// Exact translating state at time t, neutral and field-free, moving along x.
/// The momentum sits in the mean gradient of nu, grad nu = lambda v0, so the
/// velocity is uniform on the grid; alpha = sin q(x - v0 t) is a passive label
/// and beta = 0. The periodic part of nu is -gamma (c^2 + w0) t.
inline ClebschFieldState uniform_flow_exact(const Grid& g, const BarotropicEOS& eos, double c, const PresetParams& p,
                                            double t) {
    const detail::Translation tr = detail::translation(eos, c, p);
    ClebschFieldState s = ClebschFieldState::at_rest(g, p.rho, eos, c);
    s.t = t;
    s.nu_gradient = {tr.lambda * tr.v0, 0.0, 0.0};
    const double q = detail::base_wavenumber(g);
    for (std::size_t cell = 0; cell < g.cells(); ++cell) {
        s.alpha[cell] = std::sin(q * (g.position(cell).x - tr.v0 * t));
        s.nu[cell] = -tr.gamma * (c * c + tr.w0) * t;
    }
    return s;
}

/// The same translating flow with periodic potentials only: the momentum is
/// carried by the labels. With theta = q (x - v0 t):
///     alpha = sin theta, beta = -b cos theta, nu = (b/4) sin 2 theta - (c^2 + w0) t / gamma,
/// b = 2 lambda v0 / q, so alpha d_x beta + d_x nu = lambda v0. Discretely the
/// sin theta and sin 2 theta parts are differenced with different errors, which
/// leaves an O(h^4) ripple in the velocity.
inline ClebschFieldState label_flow_exact(const Grid& g, const BarotropicEOS& eos, double c, const PresetParams& p,
                                          double t) {
    const detail::Translation tr = detail::translation(eos, c, p);
    ClebschFieldState s = ClebschFieldState::at_rest(g, p.rho, eos, c);
    s.t = t;
    const double q = detail::base_wavenumber(g);
    const double b = 2.0 * tr.lambda * tr.v0 / q;
    for (std::size_t cell = 0; cell < g.cells(); ++cell) {
        const double theta = q * (g.position(cell).x - tr.v0 * t);
        s.alpha[cell] = std::sin(theta);
        s.beta[cell] = -b * std::cos(theta);
        s.nu[cell] = 0.25 * b * std::sin(2.0 * theta) - (c * c + tr.w0) * t / tr.gamma;
    }
    return s;
}

/// rho = rho_bar (1 + A sin qx); grad nu drives a wave with speed c_s and the
/// label pair (alpha, beta) adds a first-order alpha grad beta contribution.
inline ClebschFieldState make_acoustic(const Grid& g, const BarotropicEOS& eos, double c, const PresetParams& p) {
    if (!(p.rho > 0.0)) throw DomainError("acoustic: rho must be > 0");
    ClebschFieldState s = ClebschFieldState::at_rest(g, p.rho, eos, c);
    const double q = detail::base_wavenumber(g);
    double cs = sound_speed(eos, p.rho, c);
    if (cs == 0.0) cs = 0.1 * c; // dust: drive a velocity perturbation of the same shape
    const double bar = 1.0 + enthalpy(eos, p.rho) / (c * c);
    const double A = p.amplitude;
    for (std::size_t cell = 0; cell < g.cells(); ++cell) {
        const double theta = q * g.position(cell).x;
        s.rho[cell] = p.rho * (1.0 + A * std::sin(theta));
        s.alpha[cell] = std::cos(theta);
        s.beta[cell] = A * cs * std::sin(theta) / q;
        s.nu[cell] = -bar * cs * A * std::cos(theta) / q;
    }
    return s;
}

/// Inverse of w0(rho0) for a power law.
inline double rest_density_for_enthalpy(const BarotropicEOS& eos, double w0) {
    if (eos.is_dust()) throw DomainError("dust has no enthalpy to invert");
    if (!(w0 > 0.0)) throw DomainError("enthalpy must be > 0");
    const double G = eos.Gamma();
    return std::pow(w0 * (G - 1.0) / (eos.K() * G), 1.0 / (G - 1.0));
}

/// Static charged fluid in phi = phi0 cos(q x): w0(rho) + k phi = w0(rho_bar).
/// Exact at every time: nu = -(c^2 + w0(rho_bar)) t.
inline ClebschFieldState charged_equilibrium_exact(const Grid& g, const BarotropicEOS& eos, double k, double c,
                                                   const PresetParams& p, double t = 0.0) {
    if (eos.is_dust()) throw DomainError("charged_equilibrium: dust cannot balance an electric force");
    if (!(p.rho > 0.0)) throw DomainError("charged_equilibrium: rho must be > 0");
    const double C = enthalpy(eos, p.rho);
    if (!(C > std::abs(k * p.phi0))) throw DomainError("charged_equilibrium: |k phi0| must be below w0(rho)");
    ClebschFieldState s = ClebschFieldState::at_rest(g, p.rho, eos, c);
    s.k = k;
    s.t = t;
    s.field = FieldConfiguration::cosine_potential({1.0, 0.0, 0.0}, p.phi0, detail::base_wavenumber(g));
    for (std::size_t cell = 0; cell < g.cells(); ++cell) {
        const double phi = evaluate_fields(s.field, g.position(cell), t).phi;
        s.rho[cell] = rest_density_for_enthalpy(eos, C - k * phi);
        s.nu[cell] = -(c * c + C) * t;
    }
    return s;
}

/// a0 = prod_axes (pi sigma^2)^(-1/4) exp(-(x - L/2)^2 / (2 sigma^2)), so that
/// the integral of a0^2 is 1; rho0 = m a0^2, at rest.
inline QuantumFieldState make_gaussian_packet(const Grid& g, const PresetParams& p, double hbar) {
    if (!(p.sigma > 0.0)) throw DomainError("gaussian_packet: sigma must be > 0");
    if (!(p.mass > 0.0)) throw DomainError("gaussian_packet: mass must be > 0");
    QuantumFieldState s;
    s.grid = g;
    s.m = p.mass;
    s.hbar = hbar;
    s.rho0.resize(g.cells());
    s.alpha.assign(g.cells(), 0.0);
    s.beta.assign(g.cells(), 0.0);
    s.nu.assign(g.cells(), 0.0);
    const double norm1 = std::pow(std::numbers::pi * p.sigma * p.sigma, -0.25);
    for (std::size_t cell = 0; cell < g.cells(); ++cell) {
        const Vec3 x = g.position(cell);
        double a = 1.0;
        for (int d = 0; d < g.dim; ++d) {
            const double r = x[static_cast<std::size_t>(d)] - 0.5 * g.L;
            a *= norm1 * std::exp(-r * r / (2.0 * p.sigma * p.sigma));
        }
        s.rho0[cell] = p.mass * a * a;
    }
    return s;
}

/// Classical view of the Gaussian packet: dust-free static fluid with rho = rho0.
inline ClebschFieldState gaussian_packet_fluid(const Grid& g, const BarotropicEOS& eos, double c, const PresetParams& p) {
    const QuantumFieldState q = make_gaussian_packet(g, p, 0.0);
    ClebschFieldState s = ClebschFieldState::at_rest(g, 0.0, eos, c);
    s.rho = q.rho0;
    return s;
}

/// Fluid preset at t = 0.
inline ClebschFieldState make_fluid_preset(Preset preset, const Grid& g, const BarotropicEOS& eos, double k, double c,
                                           const PresetParams& p) {
    switch (preset) {
    case Preset::static_fluid: {
        ClebschFieldState s = make_static(g, eos, c, p);
        s.k = k;
        return s;
    }
    case Preset::uniform_flow: return uniform_flow_exact(g, eos, c, p, 0.0);
    case Preset::acoustic: return make_acoustic(g, eos, c, p);
    case Preset::charged_equilibrium: return charged_equilibrium_exact(g, eos, k, c, p, 0.0);
    case Preset::gaussian_packet: return gaussian_packet_fluid(g, eos, c, p);
    }
    throw DomainError("unknown preset");
}

} // namespace relflow
