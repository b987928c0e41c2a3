#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "prde/grid.hpp"
#include "prde/integrate.hpp"
#include "prde/norms.hpp"

namespace prde {

/// Band deciding interior versus boundary points.
inline constexpr double boundary_tolerance = 1e-8;

/// {x : (n, x) >= offset} with unit inward normal n.
struct HalfSpace {
    Vec normal;
    double offset = 0.0;
};

/// Product of intervals [lower_i, upper_i]; infinite bounds allowed.
struct Box {
    Vec lower;
    Vec upper;
};

/// {x : a_i . x >= c_i for every row i}.
struct Polyhedron {
    Mat a;
    Vec c;
};

struct Ball {
    Vec center;
    double radius = 1.0;
};

/// Constants of the uniform exterior sphere condition (r0) and the uniform
/// cone condition (delta, delta').
struct DomainConstants {
    double r0 = 1e6;
    double delta = 1.0;
    double delta_prime = 1.0;
};

/// Witness (f, k) of the boundary condition
/// (y - x, n) + (Df(x), n) |y - x|^2 / k >= 0. Only Df enters.
struct ConditionCWitness {
    std::function<Vec(const Vec&)> grad_f;
    double k = 1.0;
    std::string name;

    /// f = 0, k = 1; valid for every convex domain.
    static ConditionCWitness convex(Eigen::Index d) {
        return {[d](const Vec&) { return Vec(Vec::Zero(d)); }, 1.0, "convex"};
    }

    /// f(x) = |x - c|^2 / 2 with k = 2 R^2 for the ball B(c, R).
    static ConditionCWitness ball_quadratic(const Vec& center, double radius) {
        return {[center](const Vec& x) { return Vec(x - center); }, 2.0 * radius * radius, "ball-quadratic"};
    }
};

/// Closed convex reflection domain.
class Domain {
public:
    using Shape = std::variant<HalfSpace, Box, Polyhedron, Ball>;

    static Domain half_space(Vec normal, double offset) {
        const double len = normal.norm();
        if (!(len > 0.0) || !normal.allFinite()) throw ParameterError("half-space normal must be nonzero");
        return Domain(HalfSpace{normal / len, offset / len}, DomainConstants{1e6, 1.0, 1.0});
    }

    /// [0, inf) in one dimension.
    static Domain half_line() { return half_space(Vec::Ones(1), 0.0); }

    static Domain box(Vec lower, Vec upper) {
        if (lower.size() != upper.size() || lower.size() == 0) throw ParameterError("box bounds must match in size");
        double width = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < lower.size(); ++i) {
            if (!(lower(i) < upper(i)) || std::isnan(lower(i)) || std::isnan(upper(i)))
                throw ParameterError("box needs lower < upper on every axis");
            width = std::min(width, upper(i) - lower(i));
        }
        const double d = static_cast<double>(lower.size());
        return Domain(Box{std::move(lower), std::move(upper)},
                      DomainConstants{1e6, std::min(1.0, 0.25 * width), 1.0 / std::sqrt(d)});
    }

    static Domain unit_box(Eigen::Index d) { return box(Vec::Zero(d), Vec::Ones(d)); }

    /// R^d as an unbounded box; the boundary is empty.
    static Domain whole_space(Eigen::Index d) {
        const double inf = std::numeric_limits<double>::infinity();
        return box(Vec::Constant(d, -inf), Vec::Constant(d, inf));
    }

    static Domain polyhedron(Mat a, Vec c) {
        if (a.rows() != c.size() || a.rows() == 0) throw ParameterError("polyhedron needs one offset per inequality");
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double len = a.row(i).norm();
            if (!(len > 0.0)) throw ParameterError("polyhedron inequality has a zero normal");
            a.row(i) /= len;
            c(i) /= len;
        }
        const double m = static_cast<double>(a.rows());
        return Domain(Polyhedron{std::move(a), std::move(c)}, DomainConstants{1e6, 1.0, 1.0 / std::sqrt(m)});
    }

    static Domain ball(Vec center, double radius) {
        if (!(radius > 0.0)) throw ParameterError("ball radius must be positive");
        return Domain(Ball{std::move(center), radius}, DomainConstants{radius, 0.5 * radius, 0.875});
    }

    const Shape& shape() const noexcept { return shape_; }
    const DomainConstants& constants() const noexcept { return constants_; }
    const std::optional<ConditionCWitness>& witness() const noexcept { return witness_; }
    Eigen::Index dim() const { return dim_; }

    Domain with_constants(DomainConstants c) const {
        if (!(c.r0 > 0.0 && c.delta > 0.0 && c.delta_prime > 0.0 && c.delta_prime <= 1.0))
            throw ParameterError("domain constants need r0 > 0, delta > 0, 0 < delta' <= 1");
        Domain d = *this;
        d.constants_ = c;
        return d;
    }

    Domain with_witness(std::optional<ConditionCWitness> w) const {
        Domain d = *this;
        d.witness_ = std::move(w);
        return d;
    }

    std::string kind_name() const {
        return std::visit(
            [](const auto& s) -> std::string {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, HalfSpace>) return "half-space";
                else if constexpr (std::is_same_v<S, Box>) return "box";
                else if constexpr (std::is_same_v<S, Polyhedron>) return "polyhedron";
                else return "ball";
            },
            shape_);
    }

    /// Signed distance-like margin: >= 0 inside, 0 on the boundary, < 0 outside.
    /// Infinite for unbounded boxes.
    double margin(const Vec& x) const {
        check_dim(x);
        return std::visit(
            [&](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, HalfSpace>) {
                    return s.normal.dot(x) - s.offset;
                } else if constexpr (std::is_same_v<S, Box>) {
                    double m = std::numeric_limits<double>::infinity();
                    for (Eigen::Index i = 0; i < x.size(); ++i)
                        m = std::min({m, x(i) - s.lower(i), s.upper(i) - x(i)});
                    return m;
                } else if constexpr (std::is_same_v<S, Polyhedron>) {
                    return (s.a * x - s.c).minCoeff();
                } else {
                    return s.radius - (x - s.center).norm();
                }
            },
            shape_);
    }

    bool contains(const Vec& x, double tol = 1e-12) const { return margin(x) >= -tol; }

    bool on_boundary(const Vec& x, double tol = boundary_tolerance) const { return std::abs(margin(x)) <= tol; }

    /// Euclidean projection onto the closed domain. Points inside are returned unchanged.
    Vec project(const Vec& x) const {
        check_dim(x);
        if (margin(x) >= 0.0) return x;
        return std::visit(
            [&](const auto& s) -> Vec {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, HalfSpace>) {
                    return x + (s.offset - s.normal.dot(x)) * s.normal;
                } else if constexpr (std::is_same_v<S, Box>) {
                    return x.cwiseMax(s.lower).cwiseMin(s.upper);
                } else if constexpr (std::is_same_v<S, Polyhedron>) {
                    return dykstra(s, x);
                } else {
                    Vec r = x - s.center;
                    return s.center + (s.radius / r.norm()) * r;
                }
            },
            shape_);
    }

    /// Whether the unit vector n is an inward normal at y: the projection of
    /// y - n onto the domain is y itself.
    bool in_normal_cone(const Vec& y, const Vec& n, double tol = 1e-9) const {
        if (std::abs(n.norm() - 1.0) > 1e-9) return false;
        if (!on_boundary(y)) return false;
        return (project(y - n) - y).norm() <= tol;
    }

    /// r0 - dist(x - r0 n, D); non-positive when the exterior ball B(x - r0 n, r0)
    /// misses the domain.
    double exterior_ball_defect(const Vec& x, const Vec& n) const {
        const double r0 = constants_.r0;
        Vec centre = x - r0 * n;
        return r0 - (centre - project(centre)).norm();
    }

private:
    Domain(Shape s, DomainConstants c) : shape_(std::move(s)), constants_(c) {
        dim_ = std::visit(
            [](const auto& sh) -> Eigen::Index {
                using S = std::decay_t<decltype(sh)>;
                if constexpr (std::is_same_v<S, HalfSpace>) return sh.normal.size();
                else if constexpr (std::is_same_v<S, Box>) return sh.lower.size();
                else if constexpr (std::is_same_v<S, Polyhedron>) return sh.a.cols();
                else return sh.center.size();
            },
            shape_);
        witness_ = ConditionCWitness::convex(dim_);
    }

    void check_dim(const Vec& x) const {
        if (x.size() != dim_) throw DomainError("point dimension does not match the domain");
    }

    /// Dykstra's alternating projections onto the half-spaces a_i . x >= c_i.
    static Vec dykstra(const Polyhedron& p, const Vec& x0) {
        const Eigen::Index m = p.a.rows();
        Mat corr = Mat::Zero(x0.size(), m);
        Vec x = x0;
        for (int sweep = 0; sweep < 10000; ++sweep) {
            Vec start = x;
            for (Eigen::Index i = 0; i < m; ++i) {
                Vec v = x + corr.col(i);
                Vec a = p.a.row(i).transpose();
                double gap = p.c(i) - a.dot(v);
                Vec y = gap > 0.0 ? Vec(v + gap * a) : v;
                corr.col(i) = v - y;
                x = std::move(y);
            }
            if ((x - start).norm() <= 1e-12 * std::max(1.0, x.norm()) && (p.a * x - p.c).minCoeff() >= -1e-12)
                return x;
        }
        throw NumericalFailure("polyhedron projection did not converge in 10000 sweeps");
    }

    Shape shape_;
    DomainConstants constants_;
    std::optional<ConditionCWitness> witness_;
    Eigen::Index dim_ = 0;
};

/// Boundary record at one grid time.
struct NormalRecord {
    bool on_boundary = false;
    bool pushed = false;
    Vec normal;  ///< unit direction of the Phi increment into this time; zero if none
};

/// y = w + Phi confined to the closed domain.
struct SkorohodSolution {
    GridPath y;
    BVPath phi;
    std::vector<NormalRecord> records;
};

/// One step of the projection scheme. Returns the new Phi.
inline Vec skorohod_step(const Domain& d, const Vec& w_next, const Vec& phi, Vec* y_out = nullptr) {
    Vec cand = w_next + phi;
    Vec y = d.project(cand);
    Vec out = phi + (y - cand);
    if (y_out) *y_out = std::move(y);
    return out;
}

/// Discrete Skorohod map: y_{i+1} = Pi(w_{i+1} + Phi_i), Phi_{i+1} = Phi_i + y_{i+1} - (w_{i+1} + Phi_i).
inline SkorohodSolution skorohod_solve(const Domain& d, const GridPath& w) {
    if (dimension(w) != static_cast<std::size_t>(d.dim())) throw DomainError("path dimension does not match the domain");
    if (!d.contains(w[0])) throw DomainError("starting point lies outside the closed domain");
    const std::size_t n = w.size();
    std::vector<Vec> y(n), phi(n);
    std::vector<NormalRecord> rec(n);
    y[0] = w[0];
    phi[0] = Vec::Zero(d.dim());
    rec[0] = {d.on_boundary(y[0]), false, Vec::Zero(d.dim())};
    for (std::size_t i = 0; i + 1 < n; ++i) {
        Vec yi;
        phi[i + 1] = skorohod_step(d, w[i + 1], phi[i], &yi);
        y[i + 1] = std::move(yi);
        Vec dphi = phi[i + 1] - phi[i];
        const double len = dphi.norm();
        rec[i + 1] = {d.on_boundary(y[i + 1]), len > 0.0, len > 0.0 ? Vec(dphi / len) : Vec(Vec::Zero(d.dim()))};
    }
    return {GridPath(w.grid(), std::move(y)), BVPath(GridPath(w.grid(), std::move(phi))), std::move(rec)};
}

/// Two sides of an inequality lhs <= rhs.
struct Inequality {
    double lhs = 0.0;
    double rhs = 0.0;

    bool holds(double tol = 0.0) const { return lhs <= rhs + tol; }
};

/// G(x) = 4{1 + e/delta'} e with e = exp((2 delta + x) / (2 r0 delta')).
inline double bv_growth(const DomainConstants& c, double x) {
    const double e = std::exp((2.0 * c.delta + x) / (2.0 * c.r0 * c.delta_prime));
    return 4.0 * (1.0 + e / c.delta_prime) * e;
}

/// Right side of the 1-variation estimate for the Skorohod term, with
/// x_inf = ||w||_{inf-var} and v_q = ||w||_{q-var}.
inline double bv_bound(const DomainConstants& c, double q, double v_q, double x_inf) {
    const double g = bv_growth(c, x_inf);
    return (std::pow(g / c.delta + 1.0, q) * std::pow(v_q, q) + 1.0) * (g + 2.0) * x_inf / c.delta_prime;
}

/// ||Phi||_{1-var,[t_i,t_j]} against the explicit bound.
inline Inequality bv_bound_check(const Domain& d, const GridPath& w, double q, std::size_t i, std::size_t j) {
    detail::require_p(q);
    if (i > j || j >= w.size()) throw InvalidQuery("invalid index range");
    auto sol = skorohod_solve(d, w);
    auto f = increment_magnitude(w);
    return {sol.phi.one_variation(i, j),
            bv_bound(d.constants(), q, p_variation_indexed(f, q, i, j), sup_increment_indexed(f, i, j))};
}

inline Inequality bv_bound_check(const Domain& d, const GridPath& w, double q, double s, double t) {
    auto [i, j] = w.grid().range(s, t);
    return bv_bound_check(d, w, q, i, j);
}

/// max_t |y_t - y'_t|^2 against
/// {max|w - w'|^2 + 4 (|Phi| + |Phi'|) max|w - w'|} exp((|Phi| + |Phi'|) / r0).
inline Inequality holder_stability_check(const Domain& d, const GridPath& w, const GridPath& w2) {
    if (!(w.grid() == w2.grid())) throw DomainError("paths must share a grid");
    auto a = skorohod_solve(d, w);
    auto b = skorohod_solve(d, w2);
    double lhs = 0.0, gap = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        lhs = std::max(lhs, (a.y[i] - b.y[i]).squaredNorm());
        gap = std::max(gap, (w[i] - w2[i]).norm());
    }
    const double var = a.phi.one_variation() + b.phi.one_variation();
    return {lhs, (gap * gap + 4.0 * var * gap) * std::exp(var / d.constants().r0)};
}

/// max over tau of |L(w)_{s+tau} - L(w)_s - L(y_s + theta_s w)_tau| for s = t_k.
inline double flow_check(const Domain& d, const GridPath& w, std::size_t k) {
    if (k >= w.size()) throw InvalidQuery("split index out of range");
    auto full = skorohod_solve(d, w);
    if (k + 1 == w.size()) return 0.0;
    std::vector<double> t;
    std::vector<Vec> shifted;
    for (std::size_t i = k; i < w.size(); ++i) {
        t.push_back(w.time(i) - w.time(k));
        shifted.push_back(full.y[k] + (w[i] - w[k]));
    }
    auto tail = skorohod_solve(d, GridPath(Grid(std::move(t)), std::move(shifted)));
    double r = 0.0;
    for (std::size_t i = k; i < w.size(); ++i) r = std::max(r, (full.phi[i] - full.phi[k] - tail.phi[i - k]).norm());
    return r;
}

inline double flow_check(const Domain& d, const GridPath& w, double s) { return flow_check(d, w, w.grid().index_of(s)); }

/// Left side of the condition (C) inequality at boundary point x, y in the
/// closed domain and inward normal n.
inline double condition_C_check(const Domain& d, const Vec& x, const Vec& y, const Vec& n) {
    if (!d.witness()) throw UnsupportedDomain("domain carries no condition (C) witness");
    if (!d.on_boundary(x)) throw DomainError("condition (C) needs a boundary point");
    if (!d.contains(y)) throw DomainError("condition (C) needs y in the closed domain");
    const auto& w = *d.witness();
    return (y - x).dot(n) + w.grad_f(x).dot(n) * (y - x).squaredNorm() / w.k;
}

/// Running maximum of f(w_s) per output coordinate.
struct RunningMax {
    std::function<Vec(const Vec&)> f;
    double lipschitz = 1.0;
    Eigen::Index out_dim = 1;
};

struct SkorohodMap {
    Domain domain;
};

/// Adapted bounded-variation functional L of the path-dependent equation.
///
/// Evaluation is incremental: start() fixes the state at the first grid time
/// and advance() consumes one more sample. Resuming from a stored state is the
/// shifted functional used to concatenate solutions on consecutive subintervals.
class PathFunctional {
public:
    struct State {
        Vec y;    ///< reflected position (Skorohod) or unused
        Vec phi;  ///< current value of L(w)
    };

    static PathFunctional skorohod(Domain d, double beta_prime = 0.35) {
        return PathFunctional(SkorohodMap{std::move(d)}, beta_prime);
    }

    static PathFunctional running_max(std::function<Vec(const Vec&)> f, double lipschitz, Eigen::Index out_dim,
                                      double beta_prime = 0.35) {
        if (!(lipschitz >= 0.0)) throw ParameterError("Lipschitz constant must be non-negative");
        return PathFunctional(RunningMax{std::move(f), lipschitz, out_dim}, beta_prime);
    }

    /// Componentwise running maximum of the path itself.
    static PathFunctional running_max_identity(Eigen::Index d, double beta_prime = 0.35) {
        return running_max([](const Vec& x) { return x; }, 1.0, d, beta_prime);
    }

    double beta_prime() const noexcept { return beta_prime_; }
    bool is_skorohod() const noexcept { return std::holds_alternative<SkorohodMap>(kind_); }
    const Domain* domain() const noexcept {
        auto* s = std::get_if<SkorohodMap>(&kind_);
        return s ? &s->domain : nullptr;
    }

    std::string kind_name() const { return is_skorohod() ? "skorohod" : "running-max"; }

    State start(const Vec& w0) const {
        if (auto* s = std::get_if<SkorohodMap>(&kind_)) {
            if (!s->domain.contains(w0)) throw DomainError("starting point lies outside the closed domain");
            return {w0, Vec::Zero(w0.size())};
        }
        const auto& r = std::get<RunningMax>(kind_);
        Vec v = r.f(w0);
        if (v.size() != r.out_dim) throw ParameterError("running-max function has the wrong output dimension");
        return {w0, v};
    }

    void advance(State& st, const Vec& w_next) const {
        if (auto* s = std::get_if<SkorohodMap>(&kind_)) {
            st.phi = skorohod_step(s->domain, w_next, st.phi, &st.y);
            return;
        }
        const auto& r = std::get<RunningMax>(kind_);
        st.y = w_next;
        st.phi = st.phi.cwiseMax(r.f(w_next));
    }

    /// L(w) on the grid of w.
    BVPath apply(const GridPath& w) const {
        std::vector<Vec> out;
        out.reserve(w.size());
        State st = start(w[0]);
        out.push_back(st.phi);
        for (std::size_t i = 1; i < w.size(); ++i) {
            advance(st, w[i]);
            out.push_back(st.phi);
        }
        return BVPath(GridPath(w.grid(), std::move(out)));
    }

    /// F with ||L(w)||_{1-var,[s,t]} <= F(||w||_{1/beta-var,[s,t]}) ||w||_{inf-var,[s,t]}.
    MajorantFunction majorant(double beta) const {
        if (auto* s = std::get_if<SkorohodMap>(&kind_)) {
            const DomainConstants c = s->domain.constants();
            const double q = 1.0 / beta;
            // G is evaluated at the 1/beta-variation, which dominates the sup-increment norm.
            return {[c, q](double x) {
                        const double g = bv_growth(c, x);
                        return (std::pow(g / c.delta + 1.0, q) * std::pow(x, q) + 1.0) * (g + 2.0) / c.delta_prime;
                    },
                    beta};
        }
        const auto& r = std::get<RunningMax>(kind_);
        return MajorantFunction::constant(std::max(r.lipschitz * static_cast<double>(r.out_dim), 1e-300), beta);
    }

private:
    PathFunctional(std::variant<SkorohodMap, RunningMax> k, double beta_prime)
        : kind_(std::move(k)), beta_prime_(beta_prime) {}

    std::variant<SkorohodMap, RunningMax> kind_;
    double beta_prime_;
};

inline BVPath functional_apply(const PathFunctional& l, const GridPath& w) { return l.apply(w); }

/// ||L(w)||_{1-var,[t_i,t_j]} against F~(||w||_{1/beta-var}) ||w||_{inf-var}.
inline Inequality functional_bound_check(const PathFunctional& l, const GridPath& w, double beta, std::size_t i,
                                         std::size_t j) {
    auto phi = l.apply(w);
    auto f = increment_magnitude(w);
    const double x = p_variation_indexed(f, 1.0 / beta, i, j);
    return {phi.one_variation(i, j), polynomial_majorant(l.majorant(beta), x) * sup_increment_indexed(f, i, j)};
}

}  // namespace prde
