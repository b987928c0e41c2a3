#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace prde;
using namespace prde::testing;

TEST(PVariation, MatchesExhaustiveEnumeration) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> len(2, 12);
    for (int s = 0; s < 60; ++s) {
        auto w = random_walk(rng, len(rng), 1 + s % 3);
        for (double p : {1.0, 1.5, 2.0, 3.0}) EXPECT_EQ(p_variation(w, p), enumerate_p_variation(w, p));
    }
}

TEST(PVariation, MonotoneScalarPathEqualsTotalIncrement) {
    Grid g = Grid::uniform(9);
    std::vector<double> xs{0, 0.1, 0.5, 0.55, 1.2, 1.3, 2.0, 2.1, 2.5, 3.0};
    auto w = scalar_path(g, xs);
    for (double p : {1.0, 2.0, 3.5}) EXPECT_NEAR(p_variation(w, p), 3.0, 1e-14);
}

TEST(PVariation, OneVariationIsTotalVariation) {
    std::mt19937_64 rng(3);
    auto w = random_walk(rng, 40, 2);
    double tv = 0.0;
    for (std::size_t k = 0; k + 1 < w.size(); ++k) tv += (w[k + 1] - w[k]).norm();
    EXPECT_NEAR(p_variation(w, 1.0), tv, 1e-12 * tv);
}

TEST(PVariation, ZigZagClosedForm) {
    // Alternating +-1 increments: for p >= 1 keeping every point is optimal.
    Grid g = Grid::uniform(6);
    std::vector<double> xs{0, 1, 0, 1, 0, 1, 0};
    auto w = scalar_path(g, xs);
    EXPECT_NEAR(p_variation(w, 2.0), std::sqrt(6.0), 1e-14);
}

TEST(PVariation, SubintervalAndErrors) {
    std::mt19937_64 rng(5);
    auto w = random_walk(rng, 20, 1);
    EXPECT_LE(p_variation(w, 2.0, w.time(3), w.time(9)), p_variation(w, 2.0) + 1e-14);
    EXPECT_EQ(p_variation(w, 2.0, w.time(4), w.time(4)), 0.0);
    EXPECT_THROW(p_variation(w, 0.5), ParameterError);
    EXPECT_THROW(p_variation(w, 2.0, w.time(9), w.time(3)), InvalidQuery);
    EXPECT_THROW(p_variation(w, 2.0, 0.123456, 0.5), InvalidQuery);
}

TEST(HolderNorm, LinearPathClosedForm) {
    Grid g = Grid::uniform(50);
    auto w = sample(g, [](double t) { return Vec::Constant(1, 2.0 * t); });
    auto omega = ControlFunction::interval_length(g);
    EXPECT_NEAR(holder_norm(w, omega, 0.4), 2.0, 1e-12);
    EXPECT_NEAR(holder_norm(w, omega, 1.0), 2.0, 1e-12);
}

TEST(HolderNorm, ZeroControlWithMovement) {
    Grid g = Grid::uniform(2);
    Mat table = Mat::Zero(3, 3);
    table(0, 2) = 1.0;
    table(1, 2) = 1.0;
    auto omega = ControlFunction::tabulated(g, table);
    auto w = scalar_path(g, std::vector<double>{0.0, 1.0, 1.0});
    EXPECT_EQ(holder_norm(w, omega, 0.5), infinite_norm);
}

TEST(MixedNorm, DominatesHolderAndEqualsItForMonotone) {
    std::mt19937_64 rng(21);
    for (int s = 0; s < 20; ++s) {
        auto w = random_walk(rng, 30, 2);
        auto omega = ControlFunction::interval_length(w.grid());
        EXPECT_GE(mixed_norm(w, omega, 2.0, 0.4) + 1e-14, holder_norm(w, omega, 0.4));
    }
    Grid g = Grid::uniform(30);
    auto mono = sample(g, [](double t) { return Vec::Constant(1, t * t); });
    auto omega = ControlFunction::interval_length(g);
    EXPECT_NEAR(mixed_norm(mono, omega, 1.5, 0.6), holder_norm(mono, omega, 0.6), 1e-13);
}

TEST(Interpolation, ChainHoldsOnRandomPaths) {
    std::mt19937_64 rng(8);
    for (int s = 0; s < 100; ++s) {
        auto w = random_walk(rng, 50, 1 + s % 2);
        for (auto [ql, q] : {std::pair{1.0, 2.0}, std::pair{1.5, 3.0}, std::pair{2.0, 4.0}})
            EXPECT_TRUE(check_interpolation(w, ql, q).holds());
    }
    auto w = random_walk(rng, 10, 1);
    EXPECT_THROW(check_interpolation(w, 2.0, 2.0), ParameterError);
    EXPECT_THROW(check_interpolation(w, 0.5, 2.0), ParameterError);
}

TEST(Majorant, ConstantFunctionInfimumIsTheConstant) {
    auto F = MajorantFunction::constant(3.0, 0.4);
    EXPECT_NEAR(polynomial_majorant(F, 2.0), 3.0, 1e-9);
    EXPECT_NEAR(polynomial_majorant(F, 0.0), 3.0, 1e-9);
}

TEST(Majorant, LinearFunctionClosedForm) {
    // inf eps ((x/eps)^r + 1) = x ((r-1)^{(1-r)/r} + (r-1)^{1/r}) with r = 1/beta.
    const double beta = 0.4, r = 1.0 / beta;
    MajorantFunction F{[](double e) { return e; }, beta};
    for (double x : {0.1, 1.0, 7.5}) {
        const double expected = x * (std::pow(r - 1.0, (1.0 - r) / r) + std::pow(r - 1.0, 1.0 / r));
        EXPECT_NEAR(polynomial_majorant(F, x), expected, 1e-7 * expected);
    }
    EXPECT_THROW(polynomial_majorant(F, -1.0), ParameterError);
}

TEST(Control, InterpolationAndSuperadditivity) {
    Grid g = Grid::uniform(4);
    auto omega = ControlFunction::interval_length(g);
    EXPECT_NEAR(omega(0.1, 0.6), 0.5, 1e-15);
    EXPECT_LE(omega.superadditivity_defect(), 1e-15);
}
