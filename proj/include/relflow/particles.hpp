#pragma once

// Relativistic charged-particle pushers under prescribed fields:
//     d(gamma v)/dt = (e/m) (E + v x B),   dx/dt = v.
// The state carries the reduced momentum u = gamma v so |v| < c holds by
// construction.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <ostream>
#include <string>
#include <vector>

#include "relflow/errors.hpp"
#include "relflow/io.hpp"
#include "relflow/parallel.hpp"
#include "relflow/spacetime.hpp"

namespace relflow {

struct ParticleState {
    Vec3 x;
    Vec3 u; ///< gamma v
    double m = 1.0;
    double e = 1.0;

    double lorentz_factor(double c = 1.0) const { return gamma_from_momentum(u, c); }
    Vec3 velocity(double c = 1.0) const { return u / lorentz_factor(c); }

    friend bool operator==(const ParticleState&, const ParticleState&) = default;
};

/// Builds a state from a coordinate velocity, |v| < c.
inline ParticleState particle_from_velocity(const Vec3& x, const Vec3& v, double m, double e, double c = 1.0) {
    return {x, gamma(v, c) * v, m, e};
}

struct ParticleSystem {
    std::vector<ParticleState> particles;
    FieldConfiguration field;
    double t = 0.0;
};

enum class PushScheme { boris, rk4 };

inline const char* to_string(PushScheme s) { return s == PushScheme::boris ? "boris" : "rk4"; }

/// d(gamma v)/dt at the particle's position.
inline Vec3 lorentz_acceleration(const ParticleState& p, const FieldConfiguration& field, double t,
                                 double c = 1.0) {
    const FieldSample f = evaluate_fields(field, p.x, t);
    return (p.e / p.m) * (f.E + cross(p.velocity(c), f.B));
}

/// Drift-kick-drift Boris step. The kick is the relativistic rotation form,
/// which preserves |u| exactly (up to rounding) when E = 0.
inline ParticleState step_boris(const ParticleState& p, const FieldConfiguration& field, double t, double dt,
                                double c = 1.0) {
    if (!(dt > 0.0)) throw DomainError("step_boris: dt must be positive");
    ParticleState out = p;
    out.x += (0.5 * dt / p.lorentz_factor(c)) * p.u;

    const FieldSample f = evaluate_fields(field, out.x, t + 0.5 * dt);
    const double q = 0.5 * dt * p.e / p.m;

    const Vec3 u_minus = p.u + q * f.E;
    const Vec3 tau = (q / gamma_from_momentum(u_minus, c)) * f.B;
    const Vec3 u_prime = u_minus + cross(u_minus, tau);
    const Vec3 s = (2.0 / (1.0 + dot(tau, tau))) * tau;
    const Vec3 u_plus = u_minus + cross(u_prime, s);
    out.u = u_plus + q * f.E;

    out.x += (0.5 * dt / out.lorentz_factor(c)) * out.u;
    return out;
}

/// Classical RK4 on (x, u).
inline ParticleState step_rk4(const ParticleState& p, const FieldConfiguration& field, double t, double dt,
                              double c = 1.0) {
    if (!(dt > 0.0)) throw DomainError("step_rk4: dt must be positive");
    struct Deriv {
        Vec3 dx;
        Vec3 du;
    };
    auto rhs = [&](const Vec3& x, const Vec3& u, double tt) {
        ParticleState s{x, u, p.m, p.e};
        return Deriv{u / gamma_from_momentum(u, c), lorentz_acceleration(s, field, tt, c)};
    };
    const Deriv k1 = rhs(p.x, p.u, t);
    const Deriv k2 = rhs(p.x + 0.5 * dt * k1.dx, p.u + 0.5 * dt * k1.du, t + 0.5 * dt);
    const Deriv k3 = rhs(p.x + 0.5 * dt * k2.dx, p.u + 0.5 * dt * k2.du, t + 0.5 * dt);
    const Deriv k4 = rhs(p.x + dt * k3.dx, p.u + dt * k3.du, t + dt);

    ParticleState out = p;
    out.x += (dt / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    out.u += (dt / 6.0) * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
    return out;
}

inline ParticleState step(PushScheme scheme, const ParticleState& p, const FieldConfiguration& field, double t,
                          double dt, double c = 1.0) {
    return scheme == PushScheme::boris ? step_boris(p, field, t, dt, c) : step_rk4(p, field, t, dt, c);
}

struct TrajectorySample {
    double t = 0.0;
    std::size_t particle_id = 0;
    Vec3 x;
    Vec3 u;
    double gamma = 1.0;
};

/// Samples ordered by time, then by particle id.
struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::size_t n_particles = 0;

    /// Time series of one particle.
    std::vector<TrajectorySample> of(std::size_t id) const {
        std::vector<TrajectorySample> out;
        for (const auto& s : samples)
            if (s.particle_id == id) out.push_back(s);
        return out;
    }
};

struct SimulationOptions {
    double dt = 1e-3;
    std::size_t n_steps = 0;
    PushScheme scheme = PushScheme::boris;
    std::size_t stride = 1; ///< record every stride-th step; the final step is always recorded
    double c = 1.0;
};

/// Advances every particle independently; the system's own state is not modified.
inline Trajectory simulate_system(const ParticleSystem& sys, const SimulationOptions& opt) {
    if (!(opt.dt > 0.0)) throw DomainError("simulate_system: dt must be positive");
    if (opt.stride == 0) throw DomainError("simulate_system: stride must be >= 1");

    const std::size_t np = sys.particles.size();
    std::vector<ParticleState> current = sys.particles;
    Trajectory traj;
    traj.n_particles = np;

    auto record = [&](double t) {
        for (std::size_t i = 0; i < np; ++i)
            traj.samples.push_back({t, i, current[i].x, current[i].u, current[i].lorentz_factor(opt.c)});
    };
    record(sys.t);

    for (std::size_t n = 0; n < opt.n_steps; ++n) {
        const double t = sys.t + static_cast<double>(n) * opt.dt;
        parallel_for(np, [&](std::size_t i) {
            ParticleState next = step(opt.scheme, current[i], sys.field, t, opt.dt, opt.c);
            const bool ok = std::isfinite(next.x.x) && std::isfinite(next.x.y) && std::isfinite(next.x.z) &&
                            std::isfinite(next.u.x) && std::isfinite(next.u.y) && std::isfinite(next.u.z);
            if (!ok) throw StepFailure(i, n + 1, "non-finite state");
            current[i] = next;
        });
        if ((n + 1) % opt.stride == 0 || n + 1 == opt.n_steps) record(sys.t + static_cast<double>(n + 1) * opt.dt);
    }
    return traj;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,particle_id,x,y,z,ux,uy,uz,gamma\n";
    for (const auto& s : traj.samples) {
        CsvRow row(os);
        row << s.t << s.particle_id << s.x.x << s.x.y << s.x.z << s.u.x << s.u.y << s.u.z << s.gamma;
    }
}

/// 2 pi gamma m / (|e| |B|).
inline double gyration_period(const ParticleState& p, const Vec3& B, double c = 1.0) {
    const double b = norm(B);
    if (!(b > 0.0) || p.e == 0.0) throw DomainError("gyration_period: needs nonzero B and charge");
    return 2.0 * std::numbers::pi * p.lorentz_factor(c) * p.m / (std::abs(p.e) * b);
}

/// Mean period from full turns of u projected onto the plane normal to `axis`.
/// The angle is unwrapped and turn crossings are located by linear
/// interpolation between samples, so the samples must resolve each turn.
inline double measure_gyration_period(std::span<const TrajectorySample> series, const Vec3& axis) {
    const double an = norm(axis);
    if (!(an > 0.0)) throw DomainError("measure_gyration_period: zero axis");
    const Vec3 n = axis / an;
    Vec3 e1 = std::abs(n.x) < 0.9 ? cross(n, Vec3{1.0, 0.0, 0.0}) : cross(n, Vec3{0.0, 1.0, 0.0});
    e1 = e1 / norm(e1);
    const Vec3 e2 = cross(n, e1);

    std::vector<double> theta(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        theta[i] = std::atan2(dot(series[i].u, e2), dot(series[i].u, e1));
        if (i > 0) {
            double d = theta[i] - theta[i - 1];
            d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
            theta[i] = theta[i - 1] + d;
        }
    }
    std::vector<double> crossings;
    for (std::size_t i = 1; i < theta.size(); ++i) {
        const double a = (theta[i - 1] - theta[0]) / (2.0 * std::numbers::pi);
        const double b = (theta[i] - theta[0]) / (2.0 * std::numbers::pi);
        const double lo = std::min(a, b), hi = std::max(a, b);
        for (double k = std::floor(lo) + 1.0; k <= hi; k += 1.0) {
            if (k == 0.0) continue;
            const double f = (k - a) / (b - a);
            crossings.push_back(series[i - 1].t + f * (series[i].t - series[i - 1].t));
        }
    }
    if (crossings.size() < 2) throw InsufficientData("measure_gyration_period: fewer than two full turns recorded");
    return (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
}

} // namespace relflow
