#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "relflow/particles.hpp"

using namespace relflow;

namespace {

ParticleSystem single(ParticleState p, FieldConfiguration f) {
    ParticleSystem s;
    s.particles = {p};
    s.field = std::move(f);
    return s;
}

// Closed form for a particle starting at rest in E x-hat with c = e = m = 1.
double ux_exact(double E0, double t) { return E0 * t; }
double x_exact(double E0, double t) { return (std::sqrt(1.0 + E0 * E0 * t * t) - 1.0) / E0; }

} // namespace

TEST(LorentzAcceleration, FreeParticle) {
    const ParticleState p{{1, 2, 3}, {0.3, 0.1, 0}, 1, 1};
    EXPECT_EQ(lorentz_acceleration(p, FieldConfiguration::zero(), 0.0), Vec3{});
}

TEST(LorentzAcceleration, AtRestInElectricField) {
    const ParticleState p{{}, {}, 2.0, 3.0};
    const Vec3 a = lorentz_acceleration(p, FieldConfiguration::uniform_e({0.5, 0, 0}), 0.0);
    EXPECT_DOUBLE_EQ(a.x, 3.0 * 0.5 / 2.0);
    EXPECT_EQ(a.y, 0.0);
    EXPECT_EQ(a.z, 0.0);
}

TEST(LorentzAcceleration, ParallelToMagneticField) {
    const ParticleState p{{}, {0, 0, 0.7}, 1, 1};
    EXPECT_EQ(lorentz_acceleration(p, FieldConfiguration::uniform_b({0, 0, 2}), 0.0), Vec3{});
}

TEST(Boris, FreeDrift) {
    const ParticleState p{{0, 0, 0}, {0.75, 0, 0}, 1, 1};
    const ParticleState q = step_boris(p, FieldConfiguration::zero(), 0.0, 0.1);
    EXPECT_EQ(q.u, p.u);
    EXPECT_NEAR(q.x.x, 0.1 * p.velocity().x, 1e-16);
}

TEST(Boris, SpeedConservedInPureMagneticField) {
    const auto f = FieldConfiguration::uniform_b({0.3, -0.2, 1.0});
    ParticleState p = particle_from_velocity({}, {0.5, 0.3, 0.1}, 1.0, 1.0);
    const double u0 = norm(p.u);
    for (int i = 0; i < 10000; ++i) p = step_boris(p, f, i * 1e-2, 1e-2);
    EXPECT_LT(std::abs(norm(p.u) - u0) / u0, 1e-12);
}

TEST(Boris, ConstantElectricFieldSecondOrder) {
    const auto f = FieldConfiguration::uniform_e({1, 0, 0});
    ParticleSystem sys = single({}, f);
    SimulationOptions opt;
    opt.dt = 1e-2;
    opt.n_steps = 100;
    const auto traj = simulate_system(sys, opt);
    EXPECT_NEAR(traj.samples.back().u.x, ux_exact(1, 1), 1e-12);
    EXPECT_NEAR(traj.samples.back().x.x, x_exact(1, 1), 1e-4);
}

TEST(Rk4, FreeStraightLine) {
    const ParticleState p{{1, 0, 0}, {0.2, -0.1, 0.4}, 1, 1};
    const ParticleState q = step_rk4(p, FieldConfiguration::zero(), 0.0, 0.5);
    EXPECT_EQ(q.u, p.u);
    EXPECT_NEAR(norm(q.x - (p.x + 0.5 * p.velocity())), 0.0, 1e-15);
}

TEST(Rk4, ConstantElectricFieldClosedForm) {
    ParticleSystem sys = single({}, FieldConfiguration::uniform_e({1, 0, 0}));
    SimulationOptions opt;
    opt.dt = 1e-3;
    opt.n_steps = 1000;
    opt.scheme = PushScheme::rk4;
    const auto last = simulate_system(sys, opt).samples.back();
    EXPECT_DOUBLE_EQ(last.t, 1.0);
    EXPECT_NEAR(last.u.x, 1.0, 1e-10);
    EXPECT_NEAR(last.x.x, std::sqrt(2.0) - 1.0, 1e-10);
}

TEST(Rk4, FourthOrderConvergence) {
    // The trajectory error is dominated by the position; the momentum is exact
    // for a uniform E, so compare x.
    const auto f = FieldConfiguration::wave(1.0, {1, 0, 0}, {0, 0, 0}, 3.0);
    ParticleSystem sys = single({}, f);
    double errs[3];
    const double dts[] = {1e-2, 5e-3, 2.5e-3};
    // Reference from a much finer run.
    SimulationOptions ref;
    ref.dt = 1e-4;
    ref.n_steps = 10000;
    ref.scheme = PushScheme::rk4;
    const auto target = simulate_system(sys, ref).samples.back();
    for (int i = 0; i < 3; ++i) {
        SimulationOptions opt = ref;
        opt.dt = dts[i];
        opt.n_steps = static_cast<std::size_t>(std::llround(1.0 / dts[i]));
        const auto last = simulate_system(sys, opt).samples.back();
        errs[i] = norm(last.x - target.x) + norm(last.u - target.u);
    }
    EXPECT_GE(std::log2(errs[0] / errs[1]), 3.7);
    EXPECT_GE(std::log2(errs[1] / errs[2]), 3.7);
}

TEST(Rk4, ConstantElectricFieldOrderAgainstClosedForm) {
    ParticleSystem sys = single({}, FieldConfiguration::uniform_e({1, 0, 0}));
    const double dts[] = {1e-2, 5e-3, 2.5e-3};
    double errs[3];
    for (int i = 0; i < 3; ++i) {
        SimulationOptions opt;
        opt.dt = dts[i];
        opt.n_steps = static_cast<std::size_t>(std::llround(4.0 / dts[i]));
        opt.scheme = PushScheme::rk4;
        const auto last = simulate_system(sys, opt).samples.back();
        errs[i] = std::abs(last.x.x - x_exact(1, 4.0));
    }
    EXPECT_GE(std::log2(errs[0] / errs[1]), 3.7);
    EXPECT_GE(std::log2(errs[1] / errs[2]), 3.7);
}

TEST(Simulate, ZeroStepsEchoesInitialState) {
    const ParticleState p{{1, 2, 3}, {0.1, 0.2, 0.3}, 2, -1};
    ParticleSystem sys = single(p, FieldConfiguration::uniform_b({0, 0, 1}));
    SimulationOptions opt;
    opt.n_steps = 0;
    const auto traj = simulate_system(sys, opt);
    ASSERT_EQ(traj.samples.size(), 1u);
    EXPECT_EQ(traj.samples[0].x, p.x);
    EXPECT_EQ(traj.samples[0].u, p.u);
}

TEST(Simulate, TwoFreeParticlesMoveOnStraightLines) {
    ParticleSystem sys;
    sys.field = FieldConfiguration::zero();
    sys.particles = {particle_from_velocity({}, {0.5, 0, 0}, 1, 1), particle_from_velocity({1, 1, 0}, {0, -0.25, 0.1}, 3, 2)};
    SimulationOptions opt;
    opt.dt = 0.01;
    opt.n_steps = 200;
    opt.stride = 50;
    const auto traj = simulate_system(sys, opt);
    EXPECT_EQ(traj.samples.size(), 2u * 5u);
    for (std::size_t id = 0; id < 2; ++id) {
        for (const auto& s : traj.of(id)) {
            const Vec3 expected = sys.particles[id].x + s.t * sys.particles[id].velocity();
            EXPECT_NEAR(norm(s.x - expected), 0.0, 1e-13);
        }
    }
}

TEST(Simulate, EmittedStatesStayNormalized) {
    ParticleSystem sys = single(particle_from_velocity({}, {0.9, 0, 0}, 1, 1), FieldConfiguration::crossed({0, 0.5, 0}, {0, 0, 1}));
    SimulationOptions opt;
    opt.dt = 1e-2;
    opt.n_steps = 500;
    opt.scheme = PushScheme::rk4;
    for (const auto& s : simulate_system(sys, opt).samples) {
        const double v2 = dot(s.u, s.u) / (s.gamma * s.gamma);
        ASSERT_LT(v2, 1.0);
        EXPECT_NEAR(s.gamma * s.gamma * (1.0 - v2), 1.0, 1e-10);
    }
}

TEST(Simulate, NonFiniteStateRaisesStepFailure) {
    ParticleSystem sys = single({}, FieldConfiguration::uniform_e({1e308, 0, 0}));
    SimulationOptions opt;
    opt.dt = 1e10;
    opt.n_steps = 3;
    EXPECT_THROW(simulate_system(sys, opt), StepFailure);
}

TEST(Simulate, RejectsBadOptions) {
    ParticleSystem sys = single({}, FieldConfiguration::zero());
    SimulationOptions opt;
    opt.dt = 0.0;
    EXPECT_THROW(simulate_system(sys, opt), DomainError);
    opt.dt = 1e-3;
    opt.stride = 0;
    EXPECT_THROW(simulate_system(sys, opt), DomainError);
}

TEST(Gyration, PeriodMatchesRelativisticCyclotron) {
    const double B0 = 2.0;
    const auto f = FieldConfiguration::uniform_b({0, 0, B0});
    const ParticleState p = particle_from_velocity({}, {0.8, 0, 0}, 1.5, 0.5);
    const double expected = 2.0 * std::numbers::pi * (5.0 / 3.0) * 1.5 / (0.5 * B0);
    EXPECT_NEAR(gyration_period(p, {0, 0, B0}), expected, 1e-12);

    SimulationOptions opt;
    opt.dt = 1e-3;
    opt.n_steps = static_cast<std::size_t>(5.5 * expected / opt.dt);
    opt.scheme = PushScheme::rk4;
    const auto traj = simulate_system(single(p, f), opt);
    const double measured = measure_gyration_period(traj.of(0), {0, 0, B0});
    EXPECT_LT(std::abs(measured - expected) / expected, 1e-6);
}

TEST(Gyration, TooShortRecordIsInsufficient) {
    const auto f = FieldConfiguration::uniform_b({0, 0, 1});
    SimulationOptions opt;
    opt.n_steps = 100;
    const auto traj = simulate_system(single(particle_from_velocity({}, {0.5, 0, 0}, 1, 1), f), opt);
    EXPECT_THROW(measure_gyration_period(traj.of(0), {0, 0, 1}), InsufficientData);
}

TEST(CrossedFields, ExBDrift) {
    const double E0 = 0.3, B0 = 1.0;
    const auto f = FieldConfiguration::crossed({0, E0, 0}, {0, 0, B0});
    const ParticleState p{{}, {}, 1, 1};
    // Lab-frame period of the drifting orbit: 2 pi gamma_d^2 m / (e B0) per
    // proper gyration, times gamma_d for time dilation.
    const double gd = 1.0 / std::sqrt(1.0 - (E0 / B0) * (E0 / B0));
    const double period = 2.0 * std::numbers::pi * gd * gd * gd / B0;
    SimulationOptions opt;
    opt.dt = 1e-3;
    opt.n_steps = static_cast<std::size_t>(std::llround(10.0 * period / opt.dt));
    opt.scheme = PushScheme::rk4;
    const auto last = simulate_system(single(p, f), opt).samples.back();
    const double drift = last.x.x / last.t;
    EXPECT_NEAR(drift, E0 / B0, 1e-4);
    EXPECT_NEAR(last.x.y / last.t, 0.0, 1e-4);
}

TEST(TrajectoryCsv, HeaderAndRows) {
    ParticleSystem sys = single({{1, 0, 0}, {0.5, 0, 0}, 1, 1}, FieldConfiguration::zero());
    SimulationOptions opt;
    opt.dt = 0.5;
    opt.n_steps = 1;
    std::ostringstream os;
    write_trajectory_csv(os, simulate_system(sys, opt));
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,particle_id,x,y,z,ux,uy,uz,gamma");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 6), "0,0,1,");
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 2);
}
