#include <gtest/gtest.h>

#include "support.hpp"

using namespace prde;
using namespace prde::testing;

namespace {

SolverConfig config(const Vec& xi) {
    SolverConfig c;
    c.xi = xi;
    return c;
}

SpatialField reflected_field(Eigen::Index d) {
    Mat base = Mat::Constant(d, 2, 0.5);
    base(0, 0) = 1.0;
    return SpatialField::trigonometric(base, 0.3, 1.5);
}

double sup_gap(const GridPath& a, const GridPath& b, std::size_t stride_b = 1) {
    double e = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, (a[k] - b[k * stride_b]).norm());
    return e;
}

}  // namespace

TEST(Config, FixingRuleDefaults) {
    auto e = SolverConfig{}.resolve();
    const double beta = 0.4, p = 2.75;
    const double alpha = (1.0 + (beta * p - 1.0) / 2.0) / p;
    EXPECT_NEAR(e.alpha, alpha, 1e-15);
    const double s = (beta - alpha) / 4.0;
    EXPECT_NEAR(e.alpha_under, alpha + s, 1e-15);
    EXPECT_NEAR(e.alpha_tilde, alpha + 2 * s, 1e-15);
    EXPECT_NEAR(e.alpha_bar, alpha + 3 * s, 1e-15);
    EXPECT_GT(e.alpha * p, 1.0);
    const double qhi = std::min(p / (p - 1.0), beta / e.alpha_tilde);
    EXPECT_NEAR(e.q, 0.5 * (1.0 + qhi), 1e-15);
    // beta - alpha_under = 3s is the smallest gap here, so kappa0 = 1 / min(3s, s, 2s - ..., ...).
    const double m = std::min({3 * s, 2 * alpha - e.alpha_tilde, s, e.alpha_tilde + beta - 2 * e.alpha_under,
                               3.0 * alpha + beta - alpha - 2 * e.alpha_under});
    EXPECT_NEAR(e.kappa0, 1.0 / m, 1e-9);
}

TEST(Config, ViolationsNameTheCondition) {
    SolverConfig c;
    c.alpha = 0.38;
    c.alpha_tilde = 0.41;
    try {
        c.resolve();
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("alpha~ < beta"), std::string::npos);
    }
    SolverConfig p;
    p.p = 2.4;
    EXPECT_THROW(p.resolve(), ConfigError);
    SolverConfig g;
    g.gamma = 3.5;
    EXPECT_THROW(g.resolve(), ConfigError);
    SolverConfig t;
    t.alpha_tilde = 0.39;
    EXPECT_THROW(t.resolve(), ConfigError);
    SolverConfig q;
    q.q = 1.5;
    EXPECT_THROW(q.resolve(), ConfigError);
    SolverConfig b;
    b.beta_prime = 0.3;
    EXPECT_THROW(b.resolve(), ConfigError);
}

TEST(PathDependent, ConstantSigmaWithRunningMaxIsExplicit) {
    auto x = lift_piecewise_linear(brownian_polygonal(3, 9, 1.0, 2), 0.4);
    Mat s(2, 2);
    s << 1.0, 0.3, -0.2, 0.7;
    auto c = path_dependent(SpatialField::constant(s), 1.0);
    Vec xi(2);
    xi << 0.1, -0.2;
    auto rep = solve_path_dependent(c, PathFunctional::running_max_identity(2), x, config(xi));
    ASSERT_TRUE(rep.converged);
    Vec m = xi;
    for (std::size_t k = 0; k < x.grid().size(); ++k) {
        Vec z = xi + s * x.first(0, k);
        m = m.cwiseMax(z);
        EXPECT_LE((rep.z.z[k] - z).norm(), 1e-12);
        EXPECT_LE((rep.phi[k] - m).norm(), 1e-12);
    }
}

TEST(PathDependent, DriftOnlyIsLinearInTime) {
    auto x = lift_piecewise_linear(brownian_polygonal(3, 8, 2.0, 1), 0.4);
    auto c = with_linear_drift(path_dependent(SpatialField::constant(Mat::Zero(1, 1)), 1.0), Vec::Constant(1, 0.7), 0.0,
                               Vec::Zero(1));
    auto rep = solve_path_dependent(c, PathFunctional::running_max_identity(1), x, config(Vec::Constant(1, 0.2)));
    for (std::size_t k = 0; k < x.grid().size(); ++k) EXPECT_NEAR(rep.z.z[k](0), 0.2 + 0.7 * x.grid()[k], 1e-12);
}

TEST(PathDependent, RunningMaxMatchesEulerOracle) {
    // z' = sigma(z + phi) h', phi = running max of z; Euler with 256 sub-steps per solver step.
    const std::size_t steps = 1 << 10, refine = 256;
    auto s = reflected_field(1);
    auto c = path_dependent(s, 1.0);
    auto h = lipschitz_sample(steps, smooth_curve);
    auto rep = solve_path_dependent(c, PathFunctional::running_max_identity(1), lift_piecewise_linear(h, 0.4),
                                    config(Vec::Constant(1, 0.1)));
    ASSERT_TRUE(rep.converged);
    auto fine = h.resample(Grid::uniform(steps * refine)).path();
    Vec z = Vec::Constant(1, 0.1), phi = z;
    double e = 0.0;
    for (std::size_t k = 0; k + 1 < fine.size(); ++k) {
        if (k % refine == 0) e = std::max(e, (z - rep.z.z[k / refine]).norm());
        z += s.value(z + phi) * fine.increment(k, k + 1);
        phi = phi.cwiseMax(z);
    }
    e = std::max(e, (z - rep.z.z[steps]).norm());
    EXPECT_LE(e, 1e-4);
}

TEST(Reflected, ConstantSigmaEqualsSkorohodOfDriver) {
    auto x = lift_piecewise_linear(brownian_polygonal(5, 10, 1.0, 2), 0.4);
    Mat s(1, 2);
    s << 0.8, -0.4;
    auto rep = solve_reflected_rde(SpatialField::constant(s), Domain::half_line(), x, config(Vec::Constant(1, 0.3)));
    ASSERT_TRUE(rep.converged);
    std::vector<Vec> w;
    for (std::size_t k = 0; k < x.grid().size(); ++k) w.push_back(Vec::Constant(1, 0.3) + s * x.first(0, k));
    auto sol = skorohod_solve(Domain::half_line(), GridPath(x.grid(), w));
    EXPECT_LE(sup_gap(rep.y, sol.y), 1e-12);
    EXPECT_TRUE(rep.confined);
    EXPECT_TRUE(rep.complementary);
}

TEST(Reflected, SmoothDriverMatchesReflectedOde) {
    const std::size_t steps = 1 << 12, refine = 64;
    auto h = lipschitz_sample(steps, reflecting_curve);
    auto x = lift_piecewise_linear(h, 0.4);
    struct Case {
        Domain d;
        Vec xi;
    };
    for (const auto& cs : {Case{Domain::half_line(), Vec::Constant(1, 0.2)}, Case{Domain::unit_box(2), Vec::Constant(2, 0.4)}}) {
        auto s = reflected_field(cs.d.dim());
        auto rep = solve_reflected_rde(s, cs.d, x, config(cs.xi));
        ASSERT_TRUE(rep.converged) << cs.d.kind_name();
        EXPECT_LE(rep.max_iterations_used(), 50);
        auto ode = solve_reflected_ode(s, cs.d, h, cs.xi, refine);
        EXPECT_LE(sup_gap(rep.y, ode.y, refine), 1e-4) << cs.d.kind_name();
        EXPECT_GT(rep.phi.one_variation(), 0.0) << cs.d.kind_name();
    }
}

TEST(Reflected, DriftOnlyClosedForm) {
    // y' = -1 on [0, inf) from 0.5: y = max(0.5 - t, 0), Phi = max(t - 0.5, 0).
    auto x = lift_piecewise_linear(lipschitz_sample(64, [](double) { return Vec(Vec::Zero(1)); }), 0.4);
    auto rep = solve_reflected_rde(SpatialField::constant(Mat::Zero(1, 1)), Domain::half_line(), x,
                                   config(Vec::Constant(1, 0.5)), [](const Vec& y) { return Vec(Vec::Constant(y.size(), -1.0)); });
    for (std::size_t k = 0; k < x.grid().size(); ++k) {
        const double t = x.grid()[k];
        EXPECT_NEAR(rep.y[k](0), std::max(0.5 - t, 0.0), 1e-12);
        EXPECT_NEAR(rep.phi[k](0), std::max(t - 0.5, 0.0), 1e-12);
    }
}

TEST(Reflected, PicardSeedsAgree) {
    auto x = lift_piecewise_linear(lipschitz_sample(1 << 10, reflecting_curve), 0.4);
    auto s = reflected_field(2);
    auto a = config(Vec::Constant(2, 0.4));
    auto b = a;
    b.seed = SolverConfig::Seed::frozen;
    auto ra = solve_reflected_rde(s, Domain::unit_box(2), x, a);
    auto rb = solve_reflected_rde(s, Domain::unit_box(2), x, b);
    ASSERT_TRUE(ra.converged && rb.converged);
    EXPECT_LE(sup_gap(ra.y, rb.y), 1e-9);
}

TEST(Reflected, BoundsAndInvariantsOnBrownianDriver) {
    for (std::uint64_t seed : {1, 2, 3}) {
        auto x = lift_piecewise_linear(brownian_polygonal(seed, 9, 1.0, 2), 0.4);
        auto rep = solve_reflected_rde(reflected_field(1), Domain::half_line(), x, config(Vec::Constant(1, 0.2)));
        ASSERT_TRUE(rep.converged);
        EXPECT_TRUE(rep.confined);
        EXPECT_TRUE(rep.complementary);
        EXPECT_TRUE(rep.bound_reflected.holds());
        EXPECT_TRUE(rep.bound_z.holds());
        EXPECT_TRUE(rep.bound_phi.holds());
        EXPECT_TRUE(rep.bound_remainder.holds());
        EXPECT_LE(std::max(rep.residual_z, rep.residual_phi), 1e-8);
    }
}

TEST(Reflected, NonConvergenceIsReported) {
    auto x = lift_piecewise_linear(brownian_polygonal(1, 8, 1.0, 2), 0.4);
    auto cfg = config(Vec::Constant(1, 0.2));
    cfg.max_iterations = 1;
    cfg.max_halvings = 0;
    auto rep = solve_reflected_rde(reflected_field(1), Domain::half_line(), x, cfg);
    EXPECT_FALSE(rep.converged);
    EXPECT_FALSE(rep.subintervals.front().converged);
}

TEST(Reflected, InputValidation) {
    auto x = lift_piecewise_linear(brownian_polygonal(1, 6, 1.0, 2), 0.4);
    EXPECT_THROW(solve_reflected_rde(reflected_field(1), Domain::half_line(), x, config(Vec::Constant(1, -0.1))), DomainError);
    EXPECT_THROW(solve_reflected_rde(reflected_field(1), Domain::half_line(), x, config(Vec::Constant(2, 0.1))), DomainError);
    auto c = config(Vec::Constant(1, 0.1));
    c.eta = Vec::Constant(1, 0.5);
    EXPECT_THROW(solve_reflected_rde(reflected_field(1), Domain::half_line(), x, c), ConfigError);
    auto wrong_beta = lift_piecewise_linear(brownian_polygonal(1, 6, 1.0, 2), 0.45);
    EXPECT_THROW(solve_reflected_rde(reflected_field(1), Domain::half_line(), wrong_beta, config(Vec::Constant(1, 0.1))),
                 ConfigError);
}

TEST(WongZakai, ErrorsDecreaseWithLevel) {
    auto cfg = config(Vec::Constant(1, 0.5));
    cfg.compute_norms = false;
    auto t = wong_zakai_experiment(reflected_field(1), Domain::half_line(), 7, {4, 6, 8, 10}, 1.0, cfg);
    ASSERT_EQ(t.errors.size(), 4u);
    EXPECT_EQ(t.errors.back(), 0.0);
    EXPECT_LE(t.errors[1], 1.1 * t.errors[0]);
    EXPECT_LE(t.errors[2], 1.1 * t.errors[1]);
    EXPECT_THROW(wong_zakai_experiment(reflected_field(1), Domain::half_line(), 7, {6, 4}, 1.0, cfg), ParameterError);
}

TEST(Implicit, ZeroCouplingReducesToSkorohod) {
    auto d = Domain::half_line();
    Grid g = Grid::uniform(1 << 10);
    auto eta = sample(g, [](double t) { return Vec::Constant(1, std::sin(7.0 * t) - t); });
    auto x = sample(g, [](double t) { return Vec::Constant(1, std::cos(3.0 * t)); });
    Vec y0 = Vec::Constant(1, 0.1);
    auto rep = implicit_skorohod(d, eta, x, Mat::Zero(1, 1), y0, {2, 6, 10});
    std::vector<Vec> w;
    for (std::size_t k = 0; k < g.size(); ++k) w.push_back(y0 + eta[k] + Mat::Zero(1, 1) * Vec::Zero(1));
    auto sol = skorohod_solve(d, GridPath(g, w));
    for (const auto& y : rep.y)
        for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(y[k], sol.y[k]);
}

TEST(Implicit, LadderSelfConverges) {
    auto d = Domain::half_line();
    Grid g = Grid::uniform(1 << 12);
    auto eta = sample(g, [](double t) { return Vec::Constant(1, 0.3 * std::sin(6.0 * t) - 0.5 * t); });
    auto x = sample(g, [](double t) { return Vec::Constant(1, 0.4 * std::sin(4.0 * t) + 0.2 * t); });
    auto rep = implicit_skorohod(d, eta, x, Mat::Constant(1, 1, 0.1), Vec::Constant(1, 0.05), {4, 6, 8, 10, 12});
    ASSERT_EQ(rep.gaps.size(), 4u);
    EXPECT_LE(rep.gaps.back(), 1e-3);
    EXPECT_TRUE(rep.cauchy);
    EXPECT_TRUE(rep.regular);
    for (const auto& y : rep.y)
        for (std::size_t k = 0; k < y.size(); ++k) EXPECT_TRUE(d.contains(y[k]));
    EXPECT_THROW(implicit_skorohod(d, eta, x, Mat::Zero(2, 1), Vec::Zero(1), {4}), ParameterError);
    EXPECT_THROW(implicit_skorohod(d, eta, x, Mat::Zero(1, 1), Vec::Zero(1), {13}), ParameterError);
}

TEST(Translation, ConstantSigmaIsExact) {
    auto x = lift_piecewise_linear(brownian_polygonal(2, 10, 1.0, 2), 0.4);
    Mat s(2, 2);
    s << 1.0, -0.5, 0.25, 2.0;
    auto c = path_dependent(SpatialField::constant(s), 1.0);
    Integrand y{composed_path(x, 2), BVPath(sample(x.grid(), [](double t) { return smooth_phi(t, 2); }))};
    auto h = lipschitz_sample(1 << 10, [](double t) { return Vec(Vec::Constant(2, std::sin(3.0 * t))); });
    EXPECT_LE(translation_identity_check(c, y, x, h), 1e-12);
}

TEST(Translation, SmoothResidualDecaysWithMesh) {
    auto c = shipped_fields(2)[2];
    auto hf = [](double t) { return Vec(0.05 * Vec::Constant(2, std::sin(2.0 * t))); };
    std::vector<double> r;
    for (int level : {10, 11, 12}) {
        auto x = lift_piecewise_linear(lipschitz_sample(std::size_t{1} << level, smooth_curve), 0.4);
        Integrand y{composed_path(x, 2), BVPath(sample(x.grid(), [](double t) { return smooth_phi(t, 2); }))};
        r.push_back(translation_identity_check(c, y, x, lipschitz_sample(std::size_t{1} << level, hf)));
    }
    EXPECT_NEAR(r[0] / r[1], 2.0, 0.2);
    EXPECT_NEAR(r[1] / r[2], 2.0, 0.2);
}

TEST(LocalExpansion, SlopeExceedsOne) {
    auto x = lift_piecewise_linear(lipschitz_sample(1 << 11, reflecting_curve), 0.4);
    auto s = reflected_field(1);
    auto rep = solve_reflected_rde(s, Domain::half_line(), x, config(Vec::Constant(1, 0.2)));
    ASSERT_TRUE(rep.converged);
    auto fit = local_expansion_fit(reflected_coefficients(s), rep, x, 1, 7);
    EXPECT_GE(fit.slope, 1.05);
}

TEST(ReflectedOde, ConvergesUnderRefinement) {
    auto h = lipschitz_sample(256, reflecting_curve);
    auto s = reflected_field(1);
    auto a = solve_reflected_ode(s, Domain::half_line(), h, Vec::Constant(1, 0.2), 16);
    auto b = solve_reflected_ode(s, Domain::half_line(), h, Vec::Constant(1, 0.2), 64);
    auto c = solve_reflected_ode(s, Domain::half_line(), h, Vec::Constant(1, 0.2), 256);
    const double e1 = std::abs(a.y.back()(0) - c.y.back()(0)), e2 = std::abs(b.y.back()(0) - c.y.back()(0));
    EXPECT_LT(e2, e1);
    EXPECT_THROW(solve_reflected_ode(s, Domain::half_line(), h, Vec::Constant(1, 0.2), 0), ParameterError);
}
