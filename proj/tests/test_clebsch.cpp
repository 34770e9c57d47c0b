#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "relflow/clebsch.hpp"
#include "relflow/presets.hpp"

using namespace relflow;

namespace {

const BarotropicEOS kPoly = BarotropicEOS::power_law(1.0, 2.0);

// Independent bisection on |lambda(v) v| = s over v in [0, c), written
// directly from the thermodynamic closed forms.
double oracle_speed(double s, double rho, double K, double G, double c) {
    auto f = [&](double v) {
        const double g = 1.0 / std::sqrt(1.0 - v * v / (c * c));
        const double rho0 = rho / g;
        const double w0 = K * G / (G - 1.0) * std::pow(rho0, G - 1.0);
        return g * (1.0 + w0 / (c * c)) * v - s;
    };
    double lo = 0.0, hi = c * (1.0 - 1e-15);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST(SpeedSolve, ZeroMomentumIsRest) {
    EXPECT_EQ(solve_clebsch_speed(0.0, 1.0, kPoly, 1.0), 0.0);
    ClebschFieldState s = ClebschFieldState::at_rest(Grid(1, 16, 1.0), 1.0, kPoly);
    for (const Vec3& v : reconstruct_velocity(s)) EXPECT_EQ(v, Vec3{});
}

TEST(SpeedSolve, DustClosedForm) {
    EXPECT_NEAR(solve_clebsch_speed(1.0, 1.0, BarotropicEOS::dust(), 1.0), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(SpeedSolve, PowerLawAgreesWithBisectionOracle) {
    EXPECT_NEAR(solve_clebsch_speed(1.0, 1.0, kPoly, 1.0), oracle_speed(1.0, 1.0, 1.0, 2.0, 1.0), 1e-12);
    for (double G : {1.2, 1.5, 5.0 / 3.0, 2.0, 2.5, 3.0}) {
        const auto eos = BarotropicEOS::power_law(0.8, G);
        for (double s : {1e-3, 0.5, 2.0, 30.0}) {
            const double c = 2.0;
            EXPECT_NEAR(solve_clebsch_speed(s, 1.3, eos, c) / c, oracle_speed(s, 1.3, 0.8, G, c) / c, 1e-12)
                << "Gamma=" << G << " s=" << s;
        }
    }
}

TEST(SpeedSolve, MonotoneClassification) {
    EXPECT_TRUE(speed_root_is_monotone(BarotropicEOS::dust()));
    EXPECT_TRUE(speed_root_is_monotone(BarotropicEOS::power_law(1, 2)));
    EXPECT_FALSE(speed_root_is_monotone(BarotropicEOS::power_law(1, 3)));
}

TEST(SpeedSolve, RoundTripRandomSamples) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> beta(0.0, 0.999), lrho(-2.0, 2.0), G(1.1, 2.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const BarotropicEOS eos = i % 2 ? BarotropicEOS::dust() : BarotropicEOS::power_law(1.0, G(rng));
        const double v = beta(rng);
        const double rho = std::pow(10.0, lrho(rng));
        const double s = clebsch_momentum_magnitude(v, rho, eos, 1.0);
        worst = std::max(worst, std::abs(solve_clebsch_speed(s, rho, eos, 1.0) - v));
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Reconstruction, FailureNamesCell) {
    ClebschFieldState s = ClebschFieldState::at_rest(Grid(1, 16, 1.0), 1.0, kPoly);
    s.nu[5] = std::numeric_limits<double>::infinity();
    try {
        compute_kinematics(s);
        FAIL() << "expected ReconstructionError";
    } catch (const ReconstructionError& e) {
        EXPECT_TRUE(e.cell() == 3 || e.cell() == 4 || e.cell() == 6 || e.cell() == 7);
    }
}

TEST(State, ValidationRejectsBadInput) {
    const Grid g(1, 16, 1.0);
    ClebschFieldState s = ClebschFieldState::at_rest(g, 1.0, kPoly);
    s.rho[2] = -1.0;
    EXPECT_THROW(s.validate(), DomainError);
    s = ClebschFieldState::at_rest(g, 1.0, kPoly);
    s.field = FieldConfiguration::uniform_b({0, 0, 1});
    EXPECT_THROW(s.validate(), DomainError);
    s.field = FieldConfiguration::uniform_e({0.1, 0, 0});
    EXPECT_THROW(s.validate(), DomainError);
    s.field = FieldConfiguration::uniform_e({0.1, 0, 0}, ElectricGauge::temporal);
    EXPECT_NO_THROW(s.validate());
    s.field = FieldConfiguration::uniform_e({0, 0.1, 0}, ElectricGauge::temporal);
    EXPECT_THROW(s.validate(), DomainError);
}

TEST(Evolve, StaticDust) {
    const double c = 2.0;
    ClebschFieldState s = ClebschFieldState::at_rest(Grid(2, 16, 1.0), 0.7, BarotropicEOS::dust(), c);
    for (double& a : s.alpha) a = 0.25;
    for (double& b : s.beta) b = -1.5;
    const ClebschFieldState out = evolve(s, 0.01, 50);
    EXPECT_DOUBLE_EQ(out.t, 0.5);
    EXPECT_EQ(out.rho, s.rho);
    EXPECT_EQ(out.alpha, s.alpha);
    EXPECT_EQ(out.beta, s.beta);
    for (double nu : out.nu) EXPECT_NEAR(nu, -c * c * 0.5, 1e-13);
}

TEST(Evolve, UniformFlowAdvectsLabelsOverOnePeriod) {
    const Grid g(1, 256, 1.0);
    PresetParams p;
    p.velocity = 0.5;
    const auto dust = BarotropicEOS::dust();
    ClebschFieldState s = uniform_flow_exact(g, dust, 1.0, p, 0.0);
    const double period = g.L / 0.5;
    const std::size_t steps = 1024;
    const ClebschFieldState out = evolve(s, period / steps, steps);
    EXPECT_LT(max_abs_diff(out.alpha, s.alpha), 1e-6);
    EXPECT_EQ(out.rho, s.rho);
    for (const Vec3& v : reconstruct_velocity(out)) EXPECT_NEAR(v.x, 0.5, 1e-14);
}

// Momentum carried by the labels alone: products of differenced fields leave
// an O(h^4) velocity ripple that pressure keeps bounded.
TEST(Evolve, LabelCarriedFlowStaysCloseWithPressure) {
    const Grid g(1, 256, 1.0);
    PresetParams p;
    p.velocity = 0.5;
    ClebschFieldState s = label_flow_exact(g, kPoly, 1.0, p, 0.0);
    const double period = g.L / 0.5;
    const ClebschFieldState out = evolve(s, period / 2048, 2048);
    const ClebschFieldState exact = label_flow_exact(g, kPoly, 1.0, p, period);
    EXPECT_LT(max_abs_diff(out.alpha, exact.alpha), 1e-6);
    EXPECT_LT(max_abs_diff(out.beta, exact.beta), 1e-6);
    EXPECT_LT(max_abs_diff(out.rho, exact.rho), 1e-6);
    for (const Vec3& v : reconstruct_velocity(out)) EXPECT_NEAR(v.x, 0.5, 1e-6);
}

TEST(Evolve, LabelAdvectionErrorConverges) {
    PresetParams p;
    p.velocity = 0.4;
    std::vector<double> errs;
    for (std::size_t n : {32u, 64u, 128u}) {
        const Grid g(1, n, 1.0);
        ClebschFieldState s = uniform_flow_exact(g, kPoly, 1.0, p, 0.0);
        const double T = 1.0 / 0.4;
        const std::size_t steps = 10 * n;
        const ClebschFieldState out = evolve(s, T / steps, steps);
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i) e += (out.alpha[i] - s.alpha[i]) * (out.alpha[i] - s.alpha[i]);
        errs.push_back(std::sqrt(e / n));
    }
    EXPECT_GE(std::log2(errs[0] / errs[1]), 2.0);
    EXPECT_GE(std::log2(errs[1] / errs[2]), 2.0);
}

TEST(Evolve, MassConservedOverThousandSteps) {
    const Grid g(2, 16, 1.0);
    PresetParams p;
    p.amplitude = 0.05;
    ClebschFieldState s = make_acoustic(g, kPoly, 1.0, p);
    const double m0 = total_mass(s);
    const ClebschFieldState out = evolve(s, 2e-3, 1000);
    EXPECT_LT(std::abs(total_mass(out) - m0) / m0, 1e-12);
}

TEST(Evolve, ChargedEquilibriumStaysPut) {
    const Grid g(1, 64, 1.0);
    PresetParams p;
    p.phi0 = 0.2;
    ClebschFieldState s = charged_equilibrium_exact(g, kPoly, 1.5, 1.0, p);
    const ClebschFieldState out = evolve(s, 5e-3, 200);
    const ClebschFieldState exact = charged_equilibrium_exact(g, kPoly, 1.5, 1.0, p, out.t);
    EXPECT_LT(max_abs_diff(out.rho, exact.rho), 1e-10);
    for (const Vec3& v : reconstruct_velocity(out)) EXPECT_LT(norm(v), 1e-10);
}

TEST(Evolve, CflViolationRaised) {
    const Grid g(1, 64, 1.0);
    PresetParams p;
    ClebschFieldState s = uniform_flow_exact(g, kPoly, 1.0, p, 0.0);
    EXPECT_THROW(evolve_step(s, 0.5), CflViolation);
    EXPECT_LT(0.0, stable_dt(s));
    EXPECT_NO_THROW(evolve_step(s, stable_dt(s)));
}

TEST(FourVectors, StaticDustConsistency) {
    ClebschFieldState s = ClebschFieldState::at_rest(Grid(1, 16, 1.0), 1.0, BarotropicEOS::dust());
    const ClebschFourVectors fv = clebsch_four_vectors(s);
    const Kinematics kin = compute_kinematics(s);
    for (std::size_t i = 0; i < fv.vE.size(); ++i) {
        EXPECT_EQ(fv.vE[i].space(), Vec3{});
        EXPECT_DOUBLE_EQ(fv.vE[i][0], -1.0);
    }
    for (double r : four_velocity_consistency(s, fv, kin)) EXPECT_EQ(r, 0.0);
}

TEST(FourVectors, NormIdentityOnShell) {
    PresetParams p;
    p.velocity = 0.6;
    const Grid g(1, 64, 1.0);
    const double c = 1.0;
    ClebschFieldState s = uniform_flow_exact(g, kPoly, c, p, 0.3);
    const ClebschFourVectors fv = clebsch_four_vectors(s);
    const Kinematics kin = compute_kinematics(s);
    for (std::size_t i = 0; i < g.cells(); ++i)
        EXPECT_NEAR(c * std::sqrt(minkowski_dot(fv.vE[i], fv.vE[i])), c * c + kin.w0[i], 1e-12);
    for (double r : four_velocity_consistency(s, fv, kin)) EXPECT_LT(r, 1e-12);
}

// History-based four-vectors on exact states: central time differences plus
// fourth-order gradients; dt ~ h^2 keeps the time error at the spatial order.
TEST(FourVectors, ConsistencyResidualConvergesUnderRefinement) {
    PresetParams p;
    p.velocity = 0.5;
    std::vector<double> errs;
    for (std::size_t n : {32u, 64u, 128u}) {
        const Grid g(1, n, 1.0);
        const double dt = 0.5 * g.h() * g.h();
        const double t = 0.2;
        const auto prev = label_flow_exact(g, kPoly, 1.0, p, t - dt);
        const auto mid = label_flow_exact(g, kPoly, 1.0, p, t);
        const auto next = label_flow_exact(g, kPoly, 1.0, p, t + dt);
        const ScalarField r = four_velocity_consistency(mid, clebsch_four_vectors(prev, mid, next, dt), compute_kinematics(mid));
        errs.push_back(*std::max_element(r.begin(), r.end()));
    }
    EXPECT_GE(std::log2(errs[0] / errs[1]), 2.0);
    EXPECT_GE(std::log2(errs[1] / errs[2]), 2.0);
}

TEST(ReducedLagrangian, DustOnShellIsZero) {
    PresetParams p;
    p.velocity = 0.7;
    ClebschFieldState s = uniform_flow_exact(Grid(1, 64, 1.0), BarotropicEOS::dust(), 1.0, p, 0.1);
    for (double L : reduced_lagrangian_density(s)) EXPECT_LT(std::abs(L), 1e-10);
}

TEST(ReducedLagrangian, StaticPolytropeEqualsPressure) {
    ClebschFieldState s = ClebschFieldState::at_rest(Grid(1, 16, 1.0), 1.0, kPoly);
    for (double L : reduced_lagrangian_density(s)) EXPECT_NEAR(L, 1.0, 1e-14);
}

TEST(ReducedLagrangian, NegativeNormRejected) {
    ClebschFieldState s = ClebschFieldState::at_rest(Grid(1, 16, 1.0), 1.0, kPoly);
    ClebschFourVectors fv = clebsch_four_vectors(s);
    fv.vE[3] = FourVector{{0.1, 1.0, 0, 0}};
    EXPECT_THROW(reduced_lagrangian_density(s, fv, compute_kinematics(s)), DomainError);
}

TEST(ReducedLagrangian, MatterTermNonRelativisticLimit) {
    // -rho c^2 / gamma versus rho (v^2/2 - c^2): difference ~ rho v^4 / (8 c^2).
    std::vector<double> x, y;
    const double c = 1.0;
    for (double v : {0.01, 0.02, 0.04}) {
        const double rel = matter_lagrangian_density(1.0, {v, 0, 0}, BarotropicEOS::dust(), c);
        const double nonrel = 1.0 * (0.5 * v * v - c * c);
        x.push_back(std::log(v));
        y.push_back(std::log(std::abs(rel - nonrel)));
    }
    EXPECT_NEAR((y[2] - y[0]) / (x[2] - x[0]), 4.0, 0.1);
}
