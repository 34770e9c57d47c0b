#pragma once

// Barotropic equations of state and rest-frame / lab-frame conversions.
//
// Rest-frame specific internal energy eps0(rho0) is fundamental. Everything
// else follows from closed-form derivatives:
//     P0 = rho0^2 d eps0/d rho0,  w0 = eps0 + P0/rho0 = d(rho0 eps0)/d rho0,
//     d w0/d rho0 = (1/rho0) d P0/d rho0.
// Lab density is rho = gamma rho0.

#include <cmath>
#include <string>

#include "relflow/errors.hpp"
#include "relflow/spacetime.hpp"

namespace relflow {

enum class EosKind { dust, power_law };

/// Dust (eps0 = 0) or polytrope eps0 = K rho0^(Gamma-1) / (Gamma-1).
class BarotropicEOS {
public:
    BarotropicEOS() = default;

    static BarotropicEOS dust() { return {}; }
    static BarotropicEOS power_law(double K, double Gamma) {
        if (!(K > 0.0) || !std::isfinite(K)) throw DomainError("K must be > 0");
        if (!(Gamma > 1.0) || !std::isfinite(Gamma)) throw DomainError("Gamma must be > 1");
        BarotropicEOS e;
        e.kind_ = EosKind::power_law;
        e.K_ = K;
        e.Gamma_ = Gamma;
        return e;
    }

    EosKind kind() const { return kind_; }
    bool is_dust() const { return kind_ == EosKind::dust; }
    double K() const { return K_; }
    double Gamma() const { return Gamma_; }

    friend bool operator==(const BarotropicEOS&, const BarotropicEOS&) = default;

private:
    EosKind kind_ = EosKind::dust;
    double K_ = 0.0;
    double Gamma_ = 0.0;
};

struct EosValues {
    double eps0 = 0.0;
    double w0 = 0.0;
    double P0 = 0.0;
    double dw0_drho0 = 0.0;
};

namespace detail {

inline void require_nonnegative_density(double rho0, const char* who) {
    if (!(rho0 >= 0.0)) throw DomainError(std::string(who) + ": rest density must be >= 0");
}

} // namespace detail

/// Full closed-form evaluation. For a power law with Gamma < 2 the
/// derivative d w0/d rho0 = K Gamma rho0^(Gamma-2) diverges at rho0 = 0 and
/// the call raises DegenerateInput there.
inline EosValues eos_eval(const BarotropicEOS& eos, double rho0) {
    detail::require_nonnegative_density(rho0, "eos_eval");
    if (eos.is_dust()) return {};
    const double G = eos.Gamma();
    if (rho0 == 0.0) {
        if (G < 2.0) throw DegenerateInput("eos_eval: d w0/d rho0 diverges at rho0 = 0 for Gamma < 2");
        return {0.0, 0.0, 0.0, G == 2.0 ? 2.0 * eos.K() : 0.0};
    }
    const double base = eos.K() * std::pow(rho0, G - 1.0); // = P0 / rho0
    EosValues v;
    v.eps0 = base / (G - 1.0);
    v.P0 = base * rho0;
    v.w0 = v.eps0 + base;
    v.dw0_drho0 = G * base / rho0;
    return v;
}

/// w0(rho0), defined as 0 at rho0 = 0. Same arithmetic as eos_eval.
inline double enthalpy(const BarotropicEOS& eos, double rho0) {
    if (eos.is_dust() || rho0 <= 0.0) return 0.0;
    const double G = eos.Gamma();
    const double base = eos.K() * std::pow(rho0, G - 1.0);
    return base / (G - 1.0) + base;
}

inline double pressure(const BarotropicEOS& eos, double rho0) {
    if (eos.is_dust() || rho0 <= 0.0) return 0.0;
    return eos.K() * std::pow(rho0, eos.Gamma());
}

inline double internal_energy(const BarotropicEOS& eos, double rho0) {
    if (eos.is_dust() || rho0 <= 0.0) return 0.0;
    const double G = eos.Gamma();
    return eos.K() * std::pow(rho0, G - 1.0) / (G - 1.0);
}

/// d P0 / d rho0 = K Gamma rho0^(Gamma-1).
inline double pressure_derivative(const BarotropicEOS& eos, double rho0) {
    if (eos.is_dust() || rho0 <= 0.0) return 0.0;
    return eos.K() * eos.Gamma() * std::pow(rho0, eos.Gamma() - 1.0);
}

/// Relativistic sound speed c_s^2 = (dP0/drho0) / (1 + w0/c^2).
inline double sound_speed(const BarotropicEOS& eos, double rho0, double c = 1.0) {
    const double dp = pressure_derivative(eos, rho0);
    if (dp == 0.0) return 0.0;
    return std::sqrt(dp / (1.0 + enthalpy(eos, rho0) / (c * c)));
}

/// rho0 = rho / gamma(v).
inline double lab_to_rest(double rho, const Vec3& v, double c = 1.0) {
    if (!(rho >= 0.0)) throw DomainError("lab_to_rest: lab density must be >= 0");
    return rho / gamma(v, c);
}

struct LambdaFactor {
    double lambda = 1.0;     ///< gamma (1 + w0/c^2)
    double bar_lambda = 1.0; ///< 1 + w0/c^2
};

inline LambdaFactor lambda_factor(const Vec3& v, double rho, const BarotropicEOS& eos, double c = 1.0) {
    const double g = gamma(v, c);
    const double bar = 1.0 + enthalpy(eos, rho / g) / (c * c);
    return {g * bar, bar};
}

struct FrameQuantities {
    double rho = 0.0;
    double rho0 = 0.0;
    double gamma = 1.0;
    double w0 = 0.0;
    double eps0 = 0.0;
    double P0 = 0.0;
    double e0 = 0.0; ///< rest energy density rho0 c^2 + rho0 eps0
    double lambda = 1.0;
    double bar_lambda = 1.0;
};

inline FrameQuantities frame_quantities(double rho, const Vec3& v, const BarotropicEOS& eos, double c = 1.0) {
    FrameQuantities q;
    q.rho = rho;
    q.gamma = gamma(v, c);
    q.rho0 = lab_to_rest(rho, v, c);
    q.eps0 = internal_energy(eos, q.rho0);
    q.P0 = pressure(eos, q.rho0);
    q.w0 = enthalpy(eos, q.rho0);
    q.e0 = q.rho0 * c * c + q.rho0 * q.eps0;
    q.bar_lambda = 1.0 + q.w0 / (c * c);
    q.lambda = q.gamma * q.bar_lambda;
    return q;
}

inline const char* to_string(EosKind k) { return k == EosKind::dust ? "dust" : "power_law"; }

} // namespace relflow
