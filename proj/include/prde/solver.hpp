#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "prde/coefficients.hpp"
#include "prde/integrate.hpp"
#include "prde/norms.hpp"
#include "prde/roughpath.hpp"
#include "prde/skorohod.hpp"

namespace prde {

/// Working exponents after validation and the fixing rule.
struct Exponents {
    double beta = 0.4;
    double beta_prime = 0.35;
    double p = 2.75;
    double gamma = 3.0;
    double alpha = 0.0;
    double alpha_under = 0.0;
    double alpha_tilde = 0.0;
    double alpha_bar = 0.0;
    double q = 0.0;
    double kappa0 = 0.0;
};

struct SolverConfig {
    double beta = 0.4;
    double beta_prime = 0.35;
    double p = 2.75;
    double gamma = 3.0;
    /// Overrides of the fixing rule. alpha_tilde without alpha is rejected.
    std::optional<double> alpha;
    std::optional<double> alpha_tilde;
    std::optional<double> q;

    double tolerance = 1e-10;           ///< sup-norm gap between Picard iterates
    double residual_tolerance = 1e-8;   ///< accepted residual of the defining equations
    int max_iterations = 50;
    double budget_c0 = 1.0;
    double budget_kappa = 1.0;
    int max_halvings = 8;

    /// Constants of the logged solution bounds.
    double bound_K = 1.0;
    double bound_kappa = 1.0;
    double reflected_C1 = 4.0;
    double reflected_C2 = 1.0;

    enum class Seed { ball_center, frozen };
    Seed seed = Seed::ball_center;

    bool compute_norms = true;

    Vec xi;
    std::optional<Vec> eta;

    /// Validates the exponent chain and applies the fixing rule.
    Exponents resolve() const {
        Exponents e;
        e.beta = beta;
        e.beta_prime = beta_prime;
        e.p = p;
        e.gamma = gamma;
        auto fail = [](const std::string& what) {
            throw ConfigError("exponent condition violated: " + what +
                              " (required chain: 1/3 < beta' <= alpha < alpha~ < beta, alpha p > 1, "
                              "1 < q < min(p/(p-1), beta/alpha~), 1/beta < p < gamma <= 3)");
        };
        if (!(beta > 1.0 / 3.0 && beta <= 0.5)) fail("beta must lie in (1/3, 1/2]");
        if (!(gamma > 1.0 / beta && gamma <= 3.0)) fail("gamma must lie in (1/beta, 3]");
        if (!(p > 1.0 / beta && p < gamma)) fail("p must lie in (1/beta, gamma)");
        if (!(beta_prime > 1.0 / 3.0 && beta_prime < beta)) fail("beta' must lie in (1/3, beta)");
        if (alpha_tilde && !alpha) fail("alpha~ given without alpha");
        e.alpha = alpha ? *alpha : std::max(beta_prime, (1.0 + (beta * p - 1.0) / 2.0) / p);
        const double s = (beta - e.alpha) / 4.0;
        e.alpha_under = e.alpha + s;
        e.alpha_tilde = alpha_tilde ? *alpha_tilde : e.alpha + 2.0 * s;
        e.alpha_bar = e.alpha + 3.0 * s;
        if (!(beta_prime <= e.alpha)) fail("beta' <= alpha");
        if (!(e.alpha < e.alpha_tilde)) fail("alpha < alpha~");
        if (!(e.alpha_tilde < beta)) fail("alpha~ < beta");
        if (!(e.alpha * p > 1.0)) fail("alpha p > 1");
        const double q_hi = std::min(p / (p - 1.0), beta / e.alpha_tilde);
        e.q = q ? *q : 0.5 * (1.0 + q_hi);
        if (!(e.q > 1.0 && e.q < q_hi)) fail("1 < q < min(p/(p-1), beta/alpha~)");
        if (alpha_tilde) {
            // An explicit alpha~ breaks the equal spacing; keep the ordering alpha < under < tilde < bar < beta.
            e.alpha_under = 0.5 * (e.alpha + e.alpha_tilde);
            e.alpha_bar = 0.5 * (e.alpha_tilde + beta);
        }
        const double m = std::min({beta - e.alpha_under, 2.0 * e.alpha - e.alpha_tilde, e.alpha_tilde - e.alpha_under,
                                   e.alpha_tilde + beta - 2.0 * e.alpha_under,
                                   gamma * e.alpha + beta - e.alpha - 2.0 * e.alpha_under});
        e.kappa0 = m > 0.0 ? 1.0 / m : std::numeric_limits<double>::infinity();
        if (!(tolerance > 0.0) || !(residual_tolerance > 0.0)) throw ConfigError("tolerances must be positive");
        if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
        if (!(budget_c0 > 0.0) || !(budget_kappa >= 0.0)) throw ConfigError("budget needs c0 > 0 and kappa >= 0");
        return e;
    }
};

struct SubintervalLog {
    std::size_t begin = 0;
    std::size_t end = 0;
    int iterations = 0;
    int halvings = 0;
    bool converged = false;
    double gap = 0.0;
};

struct SolveReport {
    ControlledPath z;
    BVPath phi;
    GridPath y;  ///< Z + Phi for reflected problems, Z otherwise
    Exponents exponents;
    std::vector<SubintervalLog> subintervals;
    bool converged = false;
    double residual_z = 0.0;
    double residual_phi = 0.0;
    double budget = 0.0;
    double x_tilde = 0.0;

    // Norms of the solution (zero when compute_norms is off).
    double z_holder = 0.0;
    double remainder_holder = 0.0;
    double phi_variation_holder = 0.0;

    // Logged solution bounds.
    Inequality bound_z;
    Inequality bound_phi;
    Inequality bound_remainder;
    Inequality bound_reflected;

    // Reflected problems only.
    bool confined = true;
    bool complementary = true;

    int max_iterations_used() const {
        int m = 0;
        for (const auto& s : subintervals) m = std::max(m, s.iterations);
        return m;
    }

    Integrand integrand() const { return {z, phi}; }
};

/// ||Phi||_{1-var,theta} via prefix sums, O(N^2).
inline double one_variation_holder(const BVPath& phi, const ControlFunction& omega, double theta) {
    double m = 0.0;
    for (std::size_t u = 0; u < phi.size(); ++u)
        for (std::size_t v = u + 1; v < phi.size(); ++v)
            m = std::max(m, detail::ratio(phi.one_variation(u, v), std::pow(omega.at_index(u, v), theta)));
    return m;
}

/// Picard iteration of ((Z,Z'),Phi) -> ((xi + I(Z,Phi), sigma(Y)), L(xi + I(Z,Phi)))
/// on omega-budgeted subintervals, concatenated through the stored state of L.
inline SolveReport solve_path_dependent(const CoefficientField& c, const PathFunctional& l, const RoughPath& x,
                                        const SolverConfig& cfg) {
    SolveReport rep;
    rep.exponents = cfg.resolve();
    if (x.dim() != c.n) throw ParameterError("rough path dimension does not match the coefficient field");
    if (cfg.xi.size() != c.d) throw ParameterError("initial value has the wrong dimension");
    if (!(std::abs(x.beta() - cfg.beta) < 1e-12)) throw ConfigError("rough path exponent differs from the configured beta");

    const Grid& g = x.grid();
    const std::size_t n = g.size();
    const Eigen::Index d = c.d;

    auto st0 = l.start(cfg.xi);
    if (st0.phi.size() != d) throw ParameterError("functional output dimension does not match the state");
    if (cfg.eta && (*cfg.eta - st0.phi).norm() > 0.0)
        throw ConfigError("eta must equal the functional's value at the initial point");

    rep.x_tilde = x.triple_norm_sum();
    {
        auto F = l.majorant(cfg.beta);
        double f = F.f(rep.x_tilde);
        double base = 1.0 + rep.x_tilde + f * rep.x_tilde;
        rep.budget = std::isfinite(base) ? cfg.budget_c0 * std::pow(base, -cfg.budget_kappa) : 0.0;
    }

    std::vector<Vec> z(n, Vec::Zero(d)), phi(n, Vec::Zero(d));
    std::vector<Mat> zp(n);
    z[0] = cfg.xi;
    phi[0] = st0.phi;
    auto state = st0;
    rep.converged = true;

    // Iterates live in buffers local to the subinterval; entry m is grid index i + m.
    auto germ_step = [&](std::size_t i, std::size_t m, const std::vector<Vec>& zz, const std::vector<Mat>& zzp,
                         const std::vector<Vec>& ph) {
        const std::size_t k = i + m;
        const Vec& xk = x.step_first(k);
        Mat jk = 0.5 * (ph[m + 1] - ph[m]) * xk.transpose();
        return detail::germ(c, zz[m], zzp[m], ph[m], xk, x.step_second(k), jk, g[k + 1] - g[k]);
    };

    std::size_t i = 0;
    while (i + 1 < n) {
        double budget = rep.budget;
        SubintervalLog log;
        log.begin = i;
        std::vector<Vec> cz, cphi;
        std::vector<Mat> czp;
        PathFunctional::State st;
        for (int h = 0; h <= cfg.max_halvings; ++h) {
            std::size_t j = i + 1;
            while (j + 1 < n && x.omega().at_index(i, j + 1) <= budget) ++j;
            log.end = j;
            log.halvings = h;
            const std::size_t len = j - i + 1;

            const Mat s0 = c.sigma(z[i], phi[i]);
            cz.assign(len, z[i]);
            cphi.assign(len, phi[i]);
            czp.assign(len, s0);
            for (std::size_t m = 0; m < len; ++m) {
                if (cfg.seed == SolverConfig::Seed::ball_center)
                    cz[m] = z[i] + s0 * x.first(i, i + m);
                else
                    czp[m] = Mat::Zero(d, c.n);
            }
            czp[0] = s0;

            bool ok = false;
            int it = 0;
            double gap = infinite_norm;
            std::vector<Vec> nz(len), nphi(len);
            std::vector<Mat> nzp(len);
            for (it = 1; it <= cfg.max_iterations; ++it) {
                nz[0] = z[i];
                nphi[0] = phi[i];
                for (std::size_t m = 0; m < len; ++m) nzp[m] = c.sigma(cz[m], cphi[m]);
                for (std::size_t m = 0; m + 1 < len; ++m) nz[m + 1] = nz[m] + germ_step(i, m, cz, czp, cphi);
                st = state;
                for (std::size_t m = 0; m + 1 < len; ++m) {
                    l.advance(st, nz[m + 1]);
                    nphi[m + 1] = st.phi;
                }
                gap = 0.0;
                for (std::size_t m = 0; m < len; ++m) {
                    gap = std::max({gap, (nz[m] - cz[m]).lpNorm<Eigen::Infinity>(),
                                    (nphi[m] - cphi[m]).lpNorm<Eigen::Infinity>(),
                                    (nzp[m] - czp[m]).lpNorm<Eigen::Infinity>()});
                }
                std::swap(cz, nz);
                std::swap(cphi, nphi);
                std::swap(czp, nzp);
                if (!std::isfinite(gap)) break;
                if (gap <= cfg.tolerance) {
                    ok = true;
                    break;
                }
            }
            log.iterations = std::min(it, cfg.max_iterations);
            log.gap = gap;
            if (ok) {
                log.converged = true;
                break;
            }
            if (j == i + 1) break;  // a single step cannot be shortened further
            budget *= 0.5;
        }
        if (!log.converged) rep.converged = false;
        for (std::size_t m = 0; m + i <= log.end; ++m) {
            z[i + m] = cz[m];
            phi[i + m] = cphi[m];
            zp[i + m] = czp[m];
        }
        state = st;
        rep.subintervals.push_back(log);
        i = log.end;
    }
    for (std::size_t k = 0; k < n; ++k) zp[k] = c.sigma(z[k], phi[k]);

    rep.z = ControlledPath(GridPath(g, z), MatrixPath(g, zp));
    rep.phi = BVPath(GridPath(g, phi));
    rep.y = rep.z.z;

    // Residuals of the defining equations, evaluated once on the whole grid.
    auto check = integral_as_controlled(c, rep.integrand(), x, cfg.xi);
    auto phi_check = l.apply(check.z);
    for (std::size_t k = 0; k < n; ++k) {
        rep.residual_z = std::max(rep.residual_z, (check.z[k] - z[k]).norm());
        rep.residual_phi = std::max(rep.residual_phi, (phi_check[k] - phi[k]).norm());
    }
    if (!std::isfinite(rep.residual_z) || !std::isfinite(rep.residual_phi) ||
        std::max(rep.residual_z, rep.residual_phi) > cfg.residual_tolerance)
        rep.converged = false;

    if (cfg.compute_norms) {
        rep.z_holder = holder_norm(rep.z.z, x.omega(), cfg.beta);
        rep.remainder_holder = remainder_holder(rep.z, x, cfg.beta);
        rep.phi_variation_holder = one_variation_holder(rep.phi, x.omega(), cfg.beta);
        const double xt = rep.x_tilde, K = cfg.bound_K;
        const double fk = l.majorant(cfg.beta).f(K * xt);
        const double G = K * (1.0 + std::pow(1.0 + xt + fk * xt, cfg.bound_kappa) * x.omega().at_index(0, n - 1));
        rep.bound_z = {rep.z_holder, G * xt};
        rep.bound_phi = {rep.phi_variation_holder, G * fk * K * xt};
        rep.bound_remainder = {rep.remainder_holder, G * xt};
    }
    return rep;
}

/// sigma(Y) dX with Y = Z + Phi and Phi the Skorohod term of Z.
inline CoefficientField reflected_coefficients(const SpatialField& s, std::function<Vec(const Vec&)> drift = {},
                                               double drift_lipschitz = 0.0) {
    auto c = path_dependent(s, 1.0);
    if (drift)
        c = with_drift(c, [drift](const Vec& z, const Vec& phi) { return drift(z + phi); }, drift_lipschitz);
    return c;
}

/// Reflected rough differential equation Y = xi + int sigma(Y) dX + Phi in the domain.
inline SolveReport solve_reflected_rde(const SpatialField& s, const Domain& dom, const RoughPath& x,
                                       const SolverConfig& cfg, std::function<Vec(const Vec&)> drift = {},
                                       double drift_lipschitz = 0.0) {
    if (!dom.contains(cfg.xi)) throw DomainError("initial value lies outside the closed domain");
    auto c = reflected_coefficients(s, std::move(drift), drift_lipschitz);
    auto rep = solve_path_dependent(c, PathFunctional::skorohod(dom, cfg.beta_prime), x, cfg);
    std::vector<Vec> y(rep.z.z.size());
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = rep.z.z[k] + rep.phi[k];
    rep.y = GridPath(x.grid(), std::move(y));
    for (std::size_t k = 0; k < rep.y.size(); ++k) {
        if (!dom.contains(rep.y[k], 1e-10)) rep.confined = false;
        if (k > 0 && dom.margin(rep.y[k]) > boundary_tolerance && dom.margin(rep.y[k - 1]) > boundary_tolerance &&
            rep.phi.one_variation(k - 1, k) > 1e-14)
            rep.complementary = false;
    }
    if (cfg.compute_norms) {
        const double xt = rep.x_tilde;
        const double rhs = cfg.reflected_C1 * std::pow(1.0 + std::pow(xt, 1.0 / cfg.beta), cfg.reflected_C2) *
                           (1.0 + x.omega().at_index(0, x.grid().size() - 1)) * xt;
        rep.bound_reflected = {rep.z_holder + rep.remainder_holder + rep.phi_variation_holder, rhs};
    }
    return rep;
}

/// Reflected ODE dY = sigma(Y) dh + b(Y) dt + dPhi by Euler steps followed by projection.
struct ReflectedOde {
    GridPath y;
    BVPath phi;
};

inline ReflectedOde solve_reflected_ode(const SpatialField& s, const Domain& dom, const LipschitzPath& h,
                                        const Vec& xi, std::size_t refine = 1,
                                        std::function<Vec(const Vec&)> drift = {}) {
    if (refine < 1) throw ParameterError("refinement factor must be >= 1");
    if (!dom.contains(xi)) throw DomainError("initial value lies outside the closed domain");
    if (h.dim() != s.n || xi.size() != s.d) throw ParameterError("dimension mismatch");
    const Grid& hg = h.grid();
    std::vector<double> t;
    t.reserve(hg.steps() * refine + 1);
    for (std::size_t i = 0; i < hg.steps(); ++i)
        for (std::size_t r = 0; r < refine; ++r)
            t.push_back(hg[i] + (hg[i + 1] - hg[i]) * static_cast<double>(r) / static_cast<double>(refine));
    t.push_back(hg.back());
    Grid g(std::move(t));
    GridPath hp = refine == 1 ? h.path() : h.path().resample(g);
    std::vector<Vec> y(g.size()), phi(g.size());
    y[0] = xi;
    phi[0] = Vec::Zero(s.d);
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        Vec cand = y[k] + s.value(y[k]) * hp.increment(k, k + 1);
        if (drift) cand += drift(y[k]) * (g[k + 1] - g[k]);
        y[k + 1] = dom.project(cand);
        phi[k + 1] = phi[k] + (y[k + 1] - cand);
    }
    return {GridPath(g, std::move(y)), BVPath(GridPath(g, std::move(phi)))};
}

/// e_N = max_t |Y^N_t - Y^{ref}_t| for Brownian polygonal drivers sharing one path.
struct WongZakaiTable {
    std::vector<int> levels;
    std::vector<double> errors;
    int reference_level = 0;
    std::vector<bool> converged;
};

inline WongZakaiTable wong_zakai_experiment(const SpatialField& s, const Domain& dom, std::uint64_t seed,
                                            std::vector<int> levels, double horizon, const SolverConfig& cfg,
                                            std::function<Vec(const Vec&)> drift = {}) {
    if (levels.empty()) throw ParameterError("no levels given");
    for (std::size_t k = 1; k < levels.size(); ++k)
        if (!(levels[k] > levels[k - 1])) throw ParameterError("levels must be increasing");
    WongZakaiTable out;
    out.levels = levels;
    out.reference_level = levels.back();
    const Grid fine = Grid::uniform(std::size_t{1} << out.reference_level, horizon);
    std::vector<GridPath> ys;
    for (int lev : levels) {
        auto b = brownian_polygonal(seed, lev, horizon, s.n).resample(fine);
        auto x = lift_piecewise_linear(b, cfg.beta);
        auto rep = solve_reflected_rde(s, dom, x, cfg, drift);
        out.converged.push_back(rep.converged);
        ys.push_back(rep.y);
    }
    for (const auto& y : ys) {
        double e = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) e = std::max(e, (y[k] - ys.back()[k]).norm());
        out.errors.push_back(e);
    }
    return out;
}

/// Euler scheme for y = y0 + eta + F(int Phi (x) dx) + Phi with Phi the
/// Skorohod term, Phi frozen at the nodes of dyadic partitions of the grid.
struct ImplicitReport {
    std::vector<int> levels;
    std::vector<GridPath> y;
    std::vector<BVPath> phi;
    std::vector<double> gaps;              ///< sup |y^{l} - y^{l-1}|, one entry per level after the first
    std::vector<double> phi_variation;     ///< total 1-variation of Phi per level
    std::vector<double> max_window_variation;
    double regularity_ratio = 0.0;         ///< 1/q-Hoelder constant of (eta, x)
    bool regular = true;
    bool cauchy = true;
};

inline std::vector<std::size_t> dyadic_nodes(std::size_t steps, int level) {
    const std::size_t parts = std::size_t{1} << level;
    if (parts > steps) throw ParameterError("partition level finer than the grid");
    std::vector<std::size_t> nodes(parts + 1);
    for (std::size_t m = 0; m <= parts; ++m)
        nodes[m] = static_cast<std::size_t>(std::llround(static_cast<double>(m) * static_cast<double>(steps) /
                                                         static_cast<double>(parts)));
    return nodes;
}

/// vec(Phi (x) dx) in column-major order.
inline Vec vec_outer(const Vec& phi, const Vec& dx) {
    Mat m = phi * dx.transpose();
    return Eigen::Map<const Vec>(m.data(), m.size());
}

inline std::pair<GridPath, BVPath> implicit_skorohod_level(const Domain& dom, const GridPath& eta, const GridPath& x,
                                                           const Mat& f, const Vec& y0, int level) {
    const std::size_t n = eta.size();
    const Eigen::Index d = dom.dim();
    auto nodes = dyadic_nodes(n - 1, level);
    std::vector<Vec> y(n), phi(n);
    Vec acc = Vec::Zero(f.cols());
    Vec w0 = y0 + eta[0] + f * acc;
    if (!dom.contains(w0)) throw DomainError("starting point lies outside the closed domain");
    y[0] = w0;
    phi[0] = Vec::Zero(d);
    Vec frozen = phi[0];
    std::size_t next_node = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (k == nodes[next_node - 1]) frozen = phi[k];
        if (k + 1 == nodes[next_node]) ++next_node;
        acc += vec_outer(frozen, x.increment(k, k + 1));
        Vec w = y0 + eta[k + 1] + f * acc;
        Vec yk;
        phi[k + 1] = skorohod_step(dom, w, phi[k], &yk);
        y[k + 1] = std::move(yk);
    }
    return {GridPath(eta.grid(), std::move(y)), BVPath(GridPath(eta.grid(), std::move(phi)))};
}

inline ImplicitReport implicit_skorohod(const Domain& dom, const GridPath& eta, const GridPath& x, const Mat& f,
                                        const Vec& y0, std::vector<int> levels, double q = 2.0,
                                        double cauchy_slack = 0.1) {
    if (!(eta.grid() == x.grid())) throw DomainError("eta and x must share a grid");
    if (f.rows() != dom.dim() || f.cols() != dom.dim() * static_cast<Eigen::Index>(dimension(x)))
        throw ParameterError("F must be a d x (d n) matrix");
    if (levels.empty()) throw ParameterError("no levels given");
    for (std::size_t k = 1; k < levels.size(); ++k)
        if (!(levels[k] > levels[k - 1])) throw ParameterError("levels must be increasing");
    ImplicitReport rep;
    rep.levels = levels;
    {
        const auto omega = ControlFunction::interval_length(eta.grid());
        for (std::size_t u = 0; u < eta.size(); ++u)
            for (std::size_t v = u + 1; v < eta.size(); ++v)
                rep.regularity_ratio =
                    std::max(rep.regularity_ratio, (eta.increment(u, v).norm() + x.increment(u, v).norm()) /
                                                       std::pow(omega.at_index(u, v), 1.0 / q));
        rep.regular = std::isfinite(rep.regularity_ratio);
    }
    for (int lev : levels) {
        auto [y, phi] = implicit_skorohod_level(dom, eta, x, f, y0, lev);
        auto nodes = dyadic_nodes(eta.size() - 1, lev);
        double wmax = 0.0;
        for (std::size_t m = 0; m + 1 < nodes.size(); ++m) wmax = std::max(wmax, phi.one_variation(nodes[m], nodes[m + 1]));
        rep.max_window_variation.push_back(wmax);
        rep.phi_variation.push_back(phi.one_variation());
        if (!rep.y.empty()) {
            double g = 0.0;
            for (std::size_t k = 0; k < y.size(); ++k) g = std::max(g, (y[k] - rep.y.back()[k]).norm());
            rep.gaps.push_back(g);
        }
        rep.y.push_back(std::move(y));
        rep.phi.push_back(std::move(phi));
    }
    for (std::size_t k = 1; k < rep.gaps.size(); ++k)
        if (rep.gaps[k] > rep.gaps[k - 1] * (1.0 + cauchy_slack)) rep.cauchy = false;
    return rep;
}

/// Riemann-Stieltjes integral t -> int_0^t sigma(Y) dh with the second-order
/// germ sigma(Y_s) h_{s,t} + D1 sigma Z'_s int X_{s,r} (x) dh_r + D2 sigma int Phi_{s,r} (x) dh_r.
inline GridPath classical_integral_path(const CoefficientField& c, const Integrand& y, const RoughPath& x,
                                        const GridPath& h) {
    detail::check_integrand(c, y, x);
    std::vector<Vec> out(x.grid().size(), Vec::Zero(c.d));
    for (std::size_t k = 0; k < x.steps(); ++k) {
        const Vec& a = x.step_first(k);
        Vec b = h.increment(k, k + 1);
        Mat cross = 0.5 * a * b.transpose();
        Mat jk = 0.5 * y.phi.path().increment(k, k + 1) * b.transpose();
        out[k + 1] = out[k] + detail::germ(c, y.zc.z[k], y.zc.zp[k], y.phi[k], b, cross, jk, 0.0);
    }
    return GridPath(x.grid(), std::move(out));
}

/// max_t |int sigma(Y) dX^{-h} - (int sigma(Y) dX - int sigma(Y) dh)|.
inline double translation_identity_check(const CoefficientField& c, const Integrand& y, const RoughPath& x,
                                         const LipschitzPath& h) {
    auto xh = translate(x, h);
    GridPath hr = h.grid() == x.grid() ? h.path() : h.path().resample(x.grid());
    auto lhs = rough_integral_path(c, y, xh);
    auto base = rough_integral_path(c, y, x);
    auto cl = classical_integral_path(c, y, x, hr);
    double r = 0.0;
    for (std::size_t k = 0; k < lhs.size(); ++k) r = std::max(r, (lhs[k] - (base[k] - cl[k])).norm());
    return r;
}

/// Log-log regression of max |Z_{s,t} - Xi_{s,t}| against omega(s,t) over
/// dyadic spans of levels [min_level, max_level].
struct ExpansionFit {
    std::vector<double> log_omega;
    std::vector<double> log_residual;
    double slope = 0.0;
};

inline ExpansionFit local_expansion_fit(const CoefficientField& c, const SolveReport& rep, const RoughPath& x,
                                        int min_level, int max_level) {
    ExpansionFit fit;
    const auto y = rep.integrand();
    for (int lev = min_level; lev <= max_level; ++lev) {
        auto nodes = dyadic_nodes(x.steps(), lev);
        double res = 0.0, om = 0.0;
        for (std::size_t m = 0; m + 1 < nodes.size(); ++m) {
            Vec r = rep.z.z.increment(nodes[m], nodes[m + 1]) - xi_increment(c, y, x, nodes[m], nodes[m + 1]);
            res = std::max(res, r.norm());
            om = std::max(om, x.omega().at_index(nodes[m], nodes[m + 1]));
        }
        if (res > 0.0 && om > 0.0) {
            fit.log_omega.push_back(std::log(om));
            fit.log_residual.push_back(std::log(res));
        }
    }
    const std::size_t m = fit.log_omega.size();
    if (m < 2) throw NumericalFailure("not enough nonzero residuals for a regression");
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < m; ++k) mx += fit.log_omega[k], my += fit.log_residual[k];
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        sxy += (fit.log_omega[k] - mx) * (fit.log_residual[k] - my);
        sxx += (fit.log_omega[k] - mx) * (fit.log_omega[k] - mx);
    }
    fit.slope = sxy / sxx;
    return fit;
}

}  // namespace prde
