#pragma once

// Minkowski kinematics and a closed catalog of analytic electromagnetic
// potentials. Signature is (+,-,-,-). Following the potential convention
// A_alpha = (phi/c, A), a lower index carries the physical spatial vector and
// raising an index flips the sign of the spatial components.

#include <array>
#include <cmath>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "relflow/errors.hpp"

namespace relflow {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Four components, index 0 temporal. The type does not track variance;
/// callers state which one they hold.
struct FourVector {
    std::array<double, 4> c{};

    constexpr double operator[](std::size_t i) const { return c[i]; }
    constexpr double& operator[](std::size_t i) { return c[i]; }

    constexpr double time() const { return c[0]; }
    constexpr Vec3 space() const { return {c[1], c[2], c[3]}; }

    /// Metric diag(1,-1,-1,-1) applied once: flips spatial signs.
    constexpr FourVector lowered() const { return {{c[0], -c[1], -c[2], -c[3]}}; }
    constexpr FourVector raised() const { return lowered(); }

    static constexpr FourVector from(double t, const Vec3& s) { return {{t, s.x, s.y, s.z}}; }

    friend constexpr bool operator==(const FourVector&, const FourVector&) = default;
};

/// Speed of light in the chosen units. Natural units (c = 1) by default.
struct UnitSystem {
    static constexpr double si_speed_of_light = 299792458.0;

    double c = 1.0;

    static constexpr UnitSystem natural() { return {1.0}; }
    static constexpr UnitSystem si() { return {si_speed_of_light}; }

    friend constexpr bool operator==(const UnitSystem&, const UnitSystem&) = default;
};

/// a0 b0 - a.b ; contracting two vectors of the same variance.
constexpr double minkowski_dot(const FourVector& a, const FourVector& b) {
    return a[0] * b[0] - (a[1] * b[1] + a[2] * b[2] + a[3] * b[3]);
}

inline double gamma(const Vec3& v, double c = 1.0) {
    const double beta2 = dot(v, v) / (c * c);
    if (!(beta2 < 1.0)) {
        throw DomainError("gamma: speed must be below c (|v|/c = " + std::to_string(std::sqrt(beta2)) + ")");
    }
    return 1.0 / std::sqrt(1.0 - beta2);
}

/// u_mu = gamma (c, v) with the spatial part physical (lower index).
inline FourVector four_velocity(const Vec3& v, double c = 1.0) {
    const double g = gamma(v, c);
    return FourVector::from(g * c, g * v);
}

/// Lorentz factor from the reduced momentum u = gamma v.
inline double gamma_from_momentum(const Vec3& u, double c = 1.0) {
    return std::sqrt(1.0 + dot(u, u) / (c * c));
}

// ---------------------------------------------------------------------------
// Field configurations

enum class FieldKind { zero, uniform_e, uniform_b, crossed_eb, harmonic_wave, electrostatic };

/// Uniform E either from phi = -E.x (scalar gauge) or from A = -E t (temporal
/// gauge). The temporal gauge keeps potentials periodic on a box.
enum class ElectricGauge { scalar, temporal };

/// Uniform B from A = B x r / 2 (symmetric) or A = (-B_z y, 0, 0) (landau, B along z only).
enum class MagneticGauge { symmetric, landau };

struct ZeroField {
    friend bool operator==(const ZeroField&, const ZeroField&) = default;
};

struct UniformE {
    Vec3 E;
    ElectricGauge gauge = ElectricGauge::scalar;
    friend bool operator==(const UniformE&, const UniformE&) = default;
};

struct UniformB {
    Vec3 B;
    MagneticGauge gauge = MagneticGauge::symmetric;
    friend bool operator==(const UniformB&, const UniformB&) = default;
};

/// Superposition of a uniform E and a uniform B with E.B = 0.
struct CrossedEB {
    Vec3 E;
    Vec3 B;
    ElectricGauge e_gauge = ElectricGauge::scalar;
    MagneticGauge b_gauge = MagneticGauge::symmetric;
    friend bool operator==(const CrossedEB&, const CrossedEB&) = default;
};

/// A = A0 pol cos(k.x - omega t + phase), phi = 0. No dispersion relation is imposed.
struct HarmonicWave {
    double amplitude = 0.0;
    Vec3 polarization{1.0, 0.0, 0.0};
    Vec3 wave_vector{0.0, 0.0, 1.0};
    double omega = 0.0;
    double phase = 0.0;
    friend bool operator==(const HarmonicWave&, const HarmonicWave&) = default;
};

enum class PotentialProfile { polynomial, cosine };

/// Static phi(s), s = direction.x, A = 0.
/// polynomial: phi = sum_k coefficients[k] s^k.
/// cosine:     phi = coefficients[0] cos(wavenumber s + phase).
struct Electrostatic {
    Vec3 direction{1.0, 0.0, 0.0};
    PotentialProfile profile = PotentialProfile::polynomial;
    std::vector<double> coefficients;
    double wavenumber = 0.0;
    double phase = 0.0;
    friend bool operator==(const Electrostatic&, const Electrostatic&) = default;
};

/// Potentials and fields at one event.
struct FieldSample {
    Vec3 E;
    Vec3 B;
    double phi = 0.0;
    Vec3 A;
};

class FieldConfiguration {
public:
    using Variant = std::variant<ZeroField, UniformE, UniformB, CrossedEB, HarmonicWave, Electrostatic>;

    FieldConfiguration() = default;
    FieldConfiguration(Variant v) : v_(std::move(v)) { validate(); }

    static FieldConfiguration zero() { return {ZeroField{}}; }
    static FieldConfiguration uniform_e(const Vec3& E, ElectricGauge g = ElectricGauge::scalar) {
        return {UniformE{E, g}};
    }
    static FieldConfiguration uniform_b(const Vec3& B, MagneticGauge g = MagneticGauge::symmetric) {
        return {UniformB{B, g}};
    }
    static FieldConfiguration crossed(const Vec3& E, const Vec3& B,
                                      ElectricGauge eg = ElectricGauge::scalar,
                                      MagneticGauge bg = MagneticGauge::symmetric) {
        return {CrossedEB{E, B, eg, bg}};
    }
    static FieldConfiguration wave(double amplitude, const Vec3& pol, const Vec3& k, double omega,
                                   double phase = 0.0) {
        return {HarmonicWave{amplitude, pol, k, omega, phase}};
    }
    static FieldConfiguration polynomial_potential(const Vec3& dir, std::vector<double> coeffs) {
        return {Electrostatic{dir, PotentialProfile::polynomial, std::move(coeffs), 0.0, 0.0}};
    }
    static FieldConfiguration cosine_potential(const Vec3& dir, double phi0, double wavenumber,
                                               double phase = 0.0) {
        return {Electrostatic{dir, PotentialProfile::cosine, {phi0}, wavenumber, phase}};
    }

    FieldKind kind() const { return static_cast<FieldKind>(v_.index()); }
    const Variant& variant() const { return v_; }

    friend bool operator==(const FieldConfiguration&, const FieldConfiguration&) = default;

private:
    void validate() const;

    Variant v_{ZeroField{}};
};

namespace detail {

inline bool finite(const Vec3& a) {
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

inline void add_uniform_e(FieldSample& s, const Vec3& E, ElectricGauge g, const Vec3& x, double t) {
    s.E += E;
    if (g == ElectricGauge::scalar) {
        s.phi -= dot(E, x);
    } else {
        s.A -= E * t;
    }
}

inline void add_uniform_b(FieldSample& s, const Vec3& B, MagneticGauge g, const Vec3& x) {
    s.B += B;
    if (g == MagneticGauge::symmetric) {
        s.A += 0.5 * cross(B, x);
    } else {
        s.A.x -= B.z * x.y;
    }
}

} // namespace detail

inline void FieldConfiguration::validate() const {
    std::visit(
        [](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, UniformE>) {
                if (!detail::finite(f.E)) throw DomainError("uniform_e: non-finite E");
            } else if constexpr (std::is_same_v<T, UniformB>) {
                if (!detail::finite(f.B)) throw DomainError("uniform_b: non-finite B");
                if (f.gauge == MagneticGauge::landau && (f.B.x != 0.0 || f.B.y != 0.0))
                    throw DomainError("uniform_b: landau gauge requires B along z");
            } else if constexpr (std::is_same_v<T, CrossedEB>) {
                if (!detail::finite(f.E) || !detail::finite(f.B)) throw DomainError("crossed_eb: non-finite field");
                if (f.b_gauge == MagneticGauge::landau && (f.B.x != 0.0 || f.B.y != 0.0))
                    throw DomainError("crossed_eb: landau gauge requires B along z");
                const double scale = norm(f.E) * norm(f.B);
                if (std::abs(dot(f.E, f.B)) > 1e-12 * scale)
                    throw DomainError("crossed_eb: E and B must be orthogonal");
            } else if constexpr (std::is_same_v<T, HarmonicWave>) {
                if (!std::isfinite(f.amplitude) || !std::isfinite(f.omega) || !std::isfinite(f.phase) ||
                    !detail::finite(f.polarization) || !detail::finite(f.wave_vector))
                    throw DomainError("harmonic_wave: non-finite parameter");
            } else if constexpr (std::is_same_v<T, Electrostatic>) {
                if (!detail::finite(f.direction) || norm(f.direction) == 0.0)
                    throw DomainError("electrostatic: direction must be a finite non-zero vector");
                for (double a : f.coefficients)
                    if (!std::isfinite(a)) throw DomainError("electrostatic: non-finite coefficient");
                if (f.profile == PotentialProfile::cosine && f.coefficients.size() != 1)
                    throw DomainError("electrostatic: cosine profile takes exactly one amplitude");
                if (!std::isfinite(f.wavenumber) || !std::isfinite(f.phase))
                    throw DomainError("electrostatic: non-finite wavenumber or phase");
            }
        },
        v_);
}

/// Potentials (phi, A) and their exact derivatives E = -dA/dt - grad phi, B = curl A.
inline FieldSample evaluate_fields(const FieldConfiguration& cfg, const Vec3& x, double t) {
    FieldSample s;
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, UniformE>) {
                detail::add_uniform_e(s, f.E, f.gauge, x, t);
            } else if constexpr (std::is_same_v<T, UniformB>) {
                detail::add_uniform_b(s, f.B, f.gauge, x);
            } else if constexpr (std::is_same_v<T, CrossedEB>) {
                detail::add_uniform_e(s, f.E, f.e_gauge, x, t);
                detail::add_uniform_b(s, f.B, f.b_gauge, x);
            } else if constexpr (std::is_same_v<T, HarmonicWave>) {
                const double psi = dot(f.wave_vector, x) - f.omega * t + f.phase;
                const double cs = std::cos(psi);
                const double sn = std::sin(psi);
                s.A = (f.amplitude * cs) * f.polarization;
                s.E = (-f.amplitude * f.omega * sn) * f.polarization;
                s.B = (-f.amplitude * sn) * cross(f.wave_vector, f.polarization);
            } else if constexpr (std::is_same_v<T, Electrostatic>) {
                const Vec3 d = f.direction / norm(f.direction);
                const double sx = dot(d, x);
                double phi = 0.0;
                double dphi = 0.0;
                if (f.profile == PotentialProfile::polynomial) {
                    // Horner for phi and phi'.
                    for (auto it = f.coefficients.rbegin(); it != f.coefficients.rend(); ++it) {
                        dphi = dphi * sx + phi;
                        phi = phi * sx + *it;
                    }
                } else {
                    const double arg = f.wavenumber * sx + f.phase;
                    phi = f.coefficients[0] * std::cos(arg);
                    dphi = -f.coefficients[0] * f.wavenumber * std::sin(arg);
                }
                s.phi = phi;
                s.E = -dphi * d;
            }
        },
        cfg.variant());
    return s;
}

inline const char* to_string(FieldKind k) {
    switch (k) {
    case FieldKind::zero: return "zero";
    case FieldKind::uniform_e: return "uniform_e";
    case FieldKind::uniform_b: return "uniform_b";
    case FieldKind::crossed_eb: return "crossed_eb";
    case FieldKind::harmonic_wave: return "harmonic_wave";
    case FieldKind::electrostatic: return "electrostatic";
    }
    return "unknown";
}

} // namespace relflow
