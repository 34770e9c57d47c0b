#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "relflow/grid.hpp"

using namespace relflow;

TEST(Grid, Validation) {
    EXPECT_THROW(Grid(3, 64, 1.0), DomainError);
    EXPECT_THROW(Grid(1, 7, 1.0), DomainError);
    EXPECT_THROW(Grid(1, 64, 0.0), DomainError);
    EXPECT_NO_THROW(Grid(2, 8, 2.0));
}

TEST(Grid, IndexingAndWrap) {
    const Grid g(2, 8, 4.0);
    EXPECT_EQ(g.cells(), 64u);
    EXPECT_DOUBLE_EQ(g.h(), 0.5);
    const std::size_t c = g.index(7, 3);
    EXPECT_EQ(g.ix(c), 7u);
    EXPECT_EQ(g.jy(c), 3u);
    EXPECT_EQ(g.neighbor(c, 0, 1), g.index(0, 3));
    EXPECT_EQ(g.neighbor(c, 1, -4), g.index(7, 7));
    EXPECT_EQ(g.neighbor(c, 0, -17), g.index(6, 3));
    const Vec3 x = g.position(c);
    EXPECT_DOUBLE_EQ(x.x, 3.5);
    EXPECT_DOUBLE_EQ(x.y, 1.5);
}

TEST(Stencil, ExactForLowDegreeTrigOnCoarseGrid) {
    const Grid g(1, 16, 2 * std::numbers::pi);
    const ScalarField f = sample(g, [](const Vec3& x) { return std::sin(x.x); });
    double err = 0.0;
    for (std::size_t i = 0; i < g.cells(); ++i) err = std::max(err, std::abs(ddx(g, f, i, 0) - std::cos(g.position(i).x)));
    EXPECT_LT(err, 2e-3);
}

TEST(Stencil, FourthOrder) {
    std::vector<double> errs;
    for (std::size_t n : {16u, 32u, 64u}) {
        const Grid g(2, n, 1.0);
        const double q = 2 * std::numbers::pi;
        const ScalarField f = sample(g, [&](const Vec3& x) { return std::sin(q * x.x) * std::cos(2 * q * x.y); });
        const VectorField grad = gradient(g, f);
        double e = 0.0;
        for (std::size_t c = 0; c < g.cells(); ++c) {
            const Vec3 x = g.position(c);
            e = std::max(e, std::abs(grad[c].x - q * std::cos(q * x.x) * std::cos(2 * q * x.y)));
            e = std::max(e, std::abs(grad[c].y + 2 * q * std::sin(q * x.x) * std::sin(2 * q * x.y)));
            EXPECT_EQ(grad[c].z, 0.0);
        }
        errs.push_back(e);
    }
    EXPECT_GT(std::log2(errs[0] / errs[1]), 3.8);
    EXPECT_GT(std::log2(errs[1] / errs[2]), 3.9);
}

TEST(Divergence, SumsToZeroOnPeriodicGrid) {
    const Grid g(2, 32, 1.0);
    VectorField flux(g.cells());
    for (std::size_t c = 0; c < g.cells(); ++c) {
        const double a = static_cast<double>((c * 7919) % 101) / 101.0;
        flux[c] = {a, 1.0 - a * a, 3.0};
    }
    const ScalarField d = divergence(g, flux);
    double s = 0.0, mag = 0.0;
    for (double v : d) {
        s += v;
        mag += std::abs(v);
    }
    EXPECT_LT(std::abs(s), 1e-12 * mag);
}

TEST(Integrate, Constant) {
    const Grid g(2, 16, 3.0);
    EXPECT_DOUBLE_EQ(integrate(g, ScalarField(g.cells(), 2.0)), 18.0);
}
