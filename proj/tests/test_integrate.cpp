#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fluxcalc;
using fluxcalc::testing::form;
using fluxcalc::testing::pt;
using fluxcalc::testing::subdiv;

TEST(Integrate, LinearOnUnitInterval) {
    const auto v = integrate_over_singular_block(form("x1*dx1", 1, 1), SingularBlock::inclusion(Block{{0, 1}}),
                                                 subdiv(1000));
    EXPECT_NEAR(v, 0.5, 1e-6);
}

TEST(Integrate, ZeroField) {
    const auto sb = SingularBlock::from_map(Block{{0, 1}, {0, 2}}, 3, [](const Point& t) {
        return pt({t[0], t[1], std::sin(t[0] * t[1])});
    });
    EXPECT_EQ(integrate_over_singular_block(FormField::zero(3, 2), sb), 0.0);
}

TEST(Integrate, ScaledMapDensity) {
    const auto sb = SingularBlock::from_map(Block{{0, 1}}, 1, [](const Point& t) { return pt({2 * t[0]}); });
    const auto one = form("1*dx1", 1, 1);
    for (double t : {0.0, 0.3, 1.0}) EXPECT_NEAR(pullback_density(sb, one, pt({t})), 2.0, 1e-8);
    EXPECT_NEAR(integrate_over_singular_block(one, sb), 2.0, 1e-8);
}

TEST(Integrate, InclusionDensityIsTopComponent) {
    const auto f = form("sin(x1)*x2*dx1^dx2 + 7*dx1^dx3", 3, 2);
    const auto sb = SingularBlock::inclusion(Block{{0, 1}, {0, 1}}, 3);
    EXPECT_EQ(pullback_density(sb, f, pt({0.3, 0.4})), std::sin(0.3) * 0.4);
}

TEST(Integrate, StencilFaceDensity) {
    // face c_11 of the eps-cube around (1,2,3) for x1 dx2^dx3
    const double eps = 0.01;
    const auto cube = SingularBlock::inclusion(Block::cube(pt({1, 2, 3}), eps));
    const auto f11 = face(cube, 1, 1);
    const auto w = form("x1*dx2^dx3", 3, 2);
    for (const Point& t : {pt({1.995, 2.995}), pt({2.005, 3.0})}) EXPECT_EQ(pullback_density(f11, w, t), 1 + eps);
}

TEST(Integrate, PointChainIsSignedSum) {
    const auto f = form("x1^2", 1, 0);
    EXPECT_EQ(integrate_over_chain(f, boundary(SingularBlock::inclusion(Block{{1, 2}}))), 3.0);
    EXPECT_EQ(boundary_integral(f, SingularBlock::inclusion(Block{{1, 2}})), 3.0);
}

TEST(Integrate, OppositeTermsCancel) {
    const auto sb = SingularBlock::inclusion(Block{{0, 1}, {0, 1}});
    Chain c(sb, 1);
    c.add(-1, sb);
    EXPECT_EQ(integrate_over_chain(form("exp(x1)*dx1^dx2", 2, 2), c), 0.0);
    EXPECT_EQ(integrate_over_chain(form("x1*dx1", 2, 1), Chain(2, 1)), 0.0);
}

TEST(Integrate, GreenLeftHandSide) {
    const auto w = form("-x2*dx1 + x1*dx2", 2, 1);
    EXPECT_NEAR(integrate_over_chain(w, load_chain("unit-square-boundary")), 2.0, 1e-6);
}

TEST(Integrate, VerticalCoordinateFaces) {
    EXPECT_NEAR(boundary_integral(form("x1*dx2", 2, 1), SingularBlock::inclusion(Block{{0, 1}, {0, 1}})), 1.0, 1e-9);
}

TEST(Integrate, ConstantFormCancelsOnBlocks) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const Point lo = fluxcalc::testing::uniform_point(rng, 3, -2, 2);
        const Point sides = fluxcalc::testing::uniform_point(rng, 3, 0.1, 1);
        const auto sb = SingularBlock::inclusion(Block::from_corner(lo, sides));
        EXPECT_NEAR(boundary_integral(form("1.5*dx1^dx2 - 2*dx2^dx3 + 0.25*dx1^dx3", 3, 2), sb), 0.0, 1e-14);
    }
}

TEST(Integrate, RadialFormOnEpsCube) {
    const auto sb = SingularBlock::inclusion(Block::cube(pt({1, 1, 1}), 0.01));
    const auto w = form("x1*dx1 + x2*dx2 + x3*dx3", 3, 1);
    for (int i = 1; i <= 3; ++i)
        for (int j = i + 1; j <= 3; ++j) {
            // restrict to the (i,j)-plane through (1,1,1)
            Matrix a = Matrix::Zero(3, 2);
            a(i - 1, 0) = 1;
            a(j - 1, 1) = 1;
            Point off = pt({1, 1, 1});
            off[i - 1] = 0;
            off[j - 1] = 0;
            const auto plane = SingularBlock::affine(Block{{0.99, 1.01}, {0.99, 1.01}}, a, off);
            EXPECT_NEAR(boundary_integral(w, plane), 0.0, 1e-12);
        }
    (void)sb;
}

TEST(Integrate, HeavisideFluxClosedForm) {
    const auto w = form("(sin(x1) + step(x2))*dx2", 2, 1);
    const Point x = pt({0.2, -0.3});
    const double h1 = 0.4, h2 = 0.5;
    const auto sb = SingularBlock::inclusion(Block::from_corner(x, pt({h1, h2})));
    EXPECT_NEAR(boundary_integral(w, sb, subdiv(64)), h2 * (std::sin(x[0] + h1) - std::sin(x[0])), 1e-8);
}

TEST(Integrate, Linearity) {
    const auto sb = SingularBlock::from_map(Block{{0, 1}, {0, 1}}, 3, [](const Point& t) {
        return pt({t[0], t[1] * t[1], t[0] + std::cos(t[1])});
    });
    const auto w = form("x1*x3*dx1^dx2 + dx2^dx3", 3, 2);
    const auto e = form("sin(x2)*dx1^dx3", 3, 2);
    const auto both = form("2*(x1*x3*dx1^dx2 + dx2^dx3) - 3*sin(x2)*dx1^dx3", 3, 2);
    const auto q = subdiv(40);
    const double lhs = integrate_over_singular_block(both, sb, q);
    const double rhs = 2 * integrate_over_singular_block(w, sb, q) - 3 * integrate_over_singular_block(e, sb, q);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
}

TEST(Integrate, AxisSwapFlipsSign) {
    const auto w = form("exp(x1)*x2^2*dx1^dx2", 2, 2);
    const Block dom{{0, 1}, {0, 2}};
    const auto plain = SingularBlock::affine(dom, Matrix::Identity(2, 2), Point::Zero(2));
    Matrix swap(2, 2);
    swap << 0, 1, 1, 0;
    const auto swapped = SingularBlock::affine(Block{{0, 2}, {0, 1}}, swap, Point::Zero(2));
    const double a = integrate_over_singular_block(w, plain, subdiv(50));
    const double b = integrate_over_singular_block(w, swapped, subdiv(50));
    EXPECT_NEAR(a, -b, 1e-12 * std::abs(a));
}

TEST(Integrate, NaturalityUnderAffineMaps) {
    // boundary integral of psi* omega over B versus omega over psi o dB
    std::mt19937_64 rng(21);
    const auto w = form("sin(x1)*x2*dx2 + x3^2*dx1 - x1*x2*dx3", 3, 1);
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix A = fluxcalc::testing::uniform_matrix(rng, 3, 2, -1, 1);
        const Point b = fluxcalc::testing::uniform_point(rng, 3, -1, 1);
        const Block B{{0, 1}, {0, 0.5}};
        const auto psi = SingularBlock::affine(B, A, b);
        // pullback psi* omega as a form on R^2
        FormField pulled(2, 1, [&](const Point& t) {
            const auto v = w.sample(A * t + b);
            AlternatingTensor r(2, 1);
            for (int c = 0; c < 2; ++c) {
                double s = 0;
                for (int i = 1; i <= 3; ++i) s += v.get(MultiIndex(3, {i})) * A(i - 1, c);
                r.set(MultiIndex(2, {c + 1}), s);
            }
            return r;
        });
        const double via_pullback = boundary_integral(pulled, SingularBlock::inclusion(B), subdiv(64));
        const double direct = boundary_integral(w, psi, subdiv(64));
        EXPECT_NEAR(via_pullback, direct, 1e-12);
    }
}

TEST(Integrate, MidpointOrderTwo) {
    const auto w = form("exp(x1)*x2^2*dx1^dx2", 2, 2);
    const auto sb = SingularBlock::inclusion(Block{{0, 1}, {0, 1}});
    const double exact = (std::exp(1.0) - 1) / 3;
    std::vector<double> err;
    for (int m : {4, 8, 16, 32}) err.push_back(std::abs(integrate_over_singular_block(w, sb, subdiv(m)) - exact));
    for (std::size_t i = 0; i + 1 < err.size(); ++i) EXPECT_NEAR(std::log2(err[i] / err[i + 1]), 2.0, 0.3);
}

TEST(Integrate, DoublingLoopConverges) {
    QuadratureSpec q;
    q.subdivisions = 4;
    q.rtol = 1e-8;
    const auto r = integrate_over_chain_report(form("exp(x1)*dx1", 1, 1), Chain(SingularBlock::inclusion(Block{{0, 1}})), q);
    EXPECT_TRUE(r.converged);
    EXPECT_GT(r.subdivisions, 4);
    EXPECT_NEAR(r.value, std::exp(1.0) - 1, 1e-7);
}

TEST(Integrate, SamplingErrorCarriesNode) {
    FormField partial(1, 1, [](const Point& x) -> AlternatingTensor {
        if (x[0] > 0.5) throw SamplingError("no data", x);
        AlternatingTensor t(1, 1);
        t.set(MultiIndex(1, {1}), 1);
        return t;
    });
    try {
        integrate_over_singular_block(partial, SingularBlock::inclusion(Block{{0, 1}}), subdiv(4));
        FAIL();
    } catch (const SamplingError& e) {
        EXPECT_EQ(e.point(), pt({0.625}));
    }
}

TEST(Integrate, DegreeMismatch) {
    EXPECT_THROW(integrate_over_singular_block(form("x1*dx1", 2, 1), SingularBlock::inclusion(Block{{0, 1}, {0, 1}})),
                 DegreeError);
}
