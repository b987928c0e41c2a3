#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "prde/coefficients.hpp"
#include "prde/control.hpp"
#include "prde/grid.hpp"
#include "prde/norms.hpp"
#include "prde/roughpath.hpp"

namespace prde {

/// Pair (Z, Z') on the grid of a reference rough path.
struct ControlledPath {
    GridPath z;
    MatrixPath zp;

    ControlledPath() = default;
    ControlledPath(GridPath z_, MatrixPath zp_) : z(std::move(z_)), zp(std::move(zp_)) {
        if (!(z.grid() == zp.grid())) throw DomainError("Z and Z' must share a grid");
        for (std::size_t i = 0; i < z.size(); ++i)
            if (zp[i].rows() != z[i].size()) throw ParameterError("Gubinelli derivative has the wrong row count");
    }

    const Grid& grid() const noexcept { return z.grid(); }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw DomainError(std::string(what) + " is not on the rough path's grid");
}

/// Bounded-variation path with prefix sums of |Phi_{t_k,t_{k+1}}|, so that
/// ||Phi||_{1-var,[t_i,t_j]} is a difference of two prefix values.
class BVPath {
public:
    BVPath() = default;

    explicit BVPath(GridPath phi) : path_(std::move(phi)), prefix_(path_.size(), 0.0) {
        for (std::size_t k = 0; k + 1 < path_.size(); ++k)
            prefix_[k + 1] = prefix_[k] + path_.increment(k, k + 1).norm();
    }

    /// Phi = 0 on the grid, in R^d.
    static BVPath zero(const Grid& g, Eigen::Index d) {
        return BVPath(GridPath(g, std::vector<Vec>(g.size(), Vec::Zero(d))));
    }

    const GridPath& path() const noexcept { return path_; }
    const Grid& grid() const noexcept { return path_.grid(); }
    const Vec& operator[](std::size_t i) const { return path_[i]; }
    std::size_t size() const noexcept { return path_.size(); }

    double one_variation(std::size_t i, std::size_t j) const {
        if (i > j || j >= prefix_.size()) throw InvalidQuery("invalid index range");
        return prefix_[j] - prefix_[i];
    }

    double one_variation() const { return prefix_.back(); }

private:
    GridPath path_;
    std::vector<double> prefix_;
};

/// R^Z_{t_i,t_j} = Z_{t_i,t_j} - Z'_{t_i} X_{t_i,t_j}.
inline Vec remainder(const ControlledPath& c, const RoughPath& x, std::size_t i, std::size_t j) {
    require_same_grid(c.grid(), x.grid(), "controlled path");
    if (i > j || j >= c.z.size()) throw InvalidQuery("invalid index range");
    return c.z.increment(i, j) - c.zp[i] * x.first(i, j);
}

inline Vec remainder_at(const ControlledPath& c, const RoughPath& x, double s, double t) {
    auto [i, j] = c.grid().range(s, t);
    return remainder(c, x, i, j);
}

/// ||R^Z||_{2 theta} with respect to the rough path's control.
inline double remainder_holder(const ControlledPath& c, const RoughPath& x, double theta) {
    require_same_grid(c.grid(), x.grid(), "controlled path");
    auto f = [&](std::size_t i, std::size_t j) { return (c.z[j] - c.z[i] - c.zp[i] * x.first(i, j)).norm(); };
    return holder_norm_indexed(f, x.omega(), 2.0 * theta, 0, c.z.size() - 1);
}

/// Exponents of the Young estimate: theta p > 1 and 1/p + 1/q >= 1.
inline void validate_young_exponents(double theta, double p, double q) {
    if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("Young estimate: Hoelder exponent must lie in (0,1]");
    if (!(p >= 1.0 && q >= 1.0)) throw ConfigError("Young estimate: variation exponents must be >= 1");
    if (!(theta * p > 1.0)) throw ConfigError("Young estimate: needs theta * p > 1");
    if (!(1.0 / p + 1.0 / q >= 1.0)) throw ConfigError("Young estimate: needs 1/p + 1/q >= 1");
}

/// Young integral int_{t_i}^{t_j} Phi_{t_i,r} (x) dw_r of the piecewise-linear
/// interpolants, as a d x n matrix.
///
/// On each grid step both paths are linear, so the integral is the left-point
/// term Phi_{t_i,t_k} (x) w_k plus the exact correction dPhi_k (x) w_k / 2.
inline Mat young_integral(const GridPath& phi, const GridPath& w, std::size_t i, std::size_t j) {
    require_same_grid(phi.grid(), w.grid(), "integrand");
    if (i > j || j >= phi.size()) throw InvalidQuery("invalid index range");
    Mat out = Mat::Zero(phi[0].size(), w[0].size());
    for (std::size_t k = i; k < j; ++k) {
        Vec left = phi[k] - phi[i];
        Vec dphi = phi.increment(k, k + 1);
        out.noalias() += (left + 0.5 * dphi) * w.increment(k, k + 1).transpose();
    }
    return out;
}

inline Mat young_integral(const BVPath& phi, const GridPath& w, double s, double t) {
    auto [i, j] = w.grid().range(s, t);
    return young_integral(phi.path(), w, i, j);
}

/// Interior point m of [u, v] (grid indices, v - u >= 2) with
/// omega(m, v) closest to omega(u, v) / 2; the midpoint when omega(u, v) = 0.
/// Ties go to the index nearest the midpoint.
inline std::size_t adapted_split(const ControlFunction& omega, std::size_t u, std::size_t v) {
    const std::size_t mid = u + (v - u) / 2;
    const double total = omega.at_index(u, v);
    if (!(total > 0.0)) return mid;
    const double half = 0.5 * total;
    // omega(m, v) is non-increasing in m; find the first m with omega(m, v) <= half.
    std::size_t lo = u + 1, hi = v - 1;
    while (lo < hi) {
        std::size_t m = lo + (hi - lo) / 2;
        if (omega.at_index(m, v) <= half) hi = m;
        else lo = m + 1;
    }
    std::size_t best = lo;
    auto err = [&](std::size_t m) { return std::abs(omega.at_index(m, v) - half); };
    auto dist = [&](std::size_t m) { return m > mid ? m - mid : mid - m; };
    if (lo > u + 1) {
        std::size_t c = lo - 1;
        if (err(c) < err(best) || (err(c) == err(best) && dist(c) < dist(best))) best = c;
    }
    return best;
}

/// omega-adapted dyadic partition of [t_i, t_j] after `level` bisections.
/// Intervals that are a single grid step are not split further.
inline std::vector<std::size_t> adapted_dyadic_partition(const ControlFunction& omega, std::size_t i, std::size_t j,
                                                         int level) {
    std::vector<std::size_t> pts{i, j};
    for (int l = 0; l < level; ++l) {
        std::vector<std::size_t> next{pts.front()};
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            if (pts[k + 1] - pts[k] >= 2) next.push_back(adapted_split(omega, pts[k], pts[k + 1]));
            next.push_back(pts[k + 1]);
        }
        if (next.size() == pts.size()) break;
        pts = std::move(next);
    }
    return pts;
}

/// Left-point Riemann sum I(P) = sum Phi_{t_i,t_{k-1}} (x) w_{t_{k-1},t_k} over a partition.
inline Mat young_riemann_sum(const GridPath& phi, const GridPath& w, const std::vector<std::size_t>& partition) {
    Mat out = Mat::Zero(phi[0].size(), w[0].size());
    const std::size_t i = partition.front();
    for (std::size_t k = 0; k + 1 < partition.size(); ++k)
        out.noalias() += (phi[partition[k]] - phi[i]) * w.increment(partition[k], partition[k + 1]).transpose();
    return out;
}

/// Both sides of the Young estimate on [t_i, t_j]:
/// |int Phi (x) dw| <= ||Phi||_{q-var,theta'} ||w||_theta omega^{theta+theta'} / (2^theta - 2^{1/p}).
struct YoungEstimate {
    double lhs;
    double rhs;
    double phi_norm;
    double w_norm;
};

inline YoungEstimate young_estimate(const GridPath& phi, const GridPath& w, const ControlFunction& omega, double theta,
                                    double theta_phi, double p, double q, std::size_t i, std::size_t j) {
    validate_young_exponents(theta, p, q);
    detail::require_theta(theta_phi);
    double phi_norm = mixed_norm_indexed(increment_magnitude(phi), omega, q, theta_phi, i, j);
    double w_norm = holder_norm_indexed(increment_magnitude(w), omega, theta, i, j);
    double factor = 1.0 / (std::pow(2.0, theta) - std::pow(2.0, 1.0 / p));
    double rhs = phi_norm * w_norm * factor * std::pow(omega.at_index(i, j), theta + theta_phi);
    return {young_integral(phi, w, i, j).norm(), rhs, phi_norm, w_norm};
}

/// Integrand data Y = ((Z, Z'), Phi) of the rough integral.
struct Integrand {
    ControlledPath zc;
    BVPath phi;
};

namespace detail {

/// Germ with all inputs supplied explicitly.
/// sigma(y) x + D1 sigma(y) z' xx + D2 sigma(y) j + b(y) dt.
inline Vec germ(const CoefficientField& c, const Vec& z, const Mat& zp, const Vec& phi, const Vec& x, const Mat& xx,
                const Mat& j, double dt) {
    Vec out = c.sigma(z, phi) * x;
    out += contract(c.d1sigma(z, phi), zp * xx);
    if (j.squaredNorm() > 0.0) out += contract(c.d2sigma(z, phi), j);
    if (c.has_drift()) out += c.drift(z, phi) * dt;
    return out;
}

inline void check_integrand(const CoefficientField& c, const Integrand& y, const RoughPath& x) {
    require_same_grid(y.zc.grid(), x.grid(), "controlled path");
    require_same_grid(y.phi.grid(), x.grid(), "bounded-variation path");
    if (y.zc.z[0].size() != c.d || y.phi[0].size() != c.d) throw ParameterError("integrand has the wrong dimension");
    if (x.dim() != c.n) throw ParameterError("rough path dimension does not match the coefficient field");
}

}  // namespace detail

/// int_{t_i}^{t_j} Phi_{t_i,r} (x) dX_r against the level-1 steps of X.
inline Mat young_against(const GridPath& phi, const RoughPath& x, std::size_t i, std::size_t j) {
    Mat out = Mat::Zero(phi[0].size(), x.dim());
    for (std::size_t k = i; k < j; ++k)
        out.noalias() += (phi[k] - phi[i] + 0.5 * phi.increment(k, k + 1)) * x.step_first(k).transpose();
    return out;
}

/// Local expansion Xi_{t_i,t_j}.
inline Vec xi_increment(const CoefficientField& c, const Integrand& y, const RoughPath& x, std::size_t i,
                        std::size_t j) {
    detail::check_integrand(c, y, x);
    Signature sig = x.increment(i, j);
    Mat jint = young_against(y.phi.path(), x, i, j);
    return detail::germ(c, y.zc.z[i], y.zc.zp[i], y.phi[i], sig.first, sig.second, jint,
                        x.grid()[j] - x.grid()[i]);
}

/// delta Xi_{s,u,t} = Xi_{s,t} - Xi_{s,u} - Xi_{u,t}.
inline Vec delta_xi(const CoefficientField& c, const Integrand& y, const RoughPath& x, std::size_t i, std::size_t k,
                    std::size_t j) {
    return xi_increment(c, y, x, i, j) - xi_increment(c, y, x, i, k) - xi_increment(c, y, x, k, j);
}

/// Per-step germs Xi_{t_k,t_{k+1}}. On a single step the Young term is
/// dPhi_k (x) X_k / 2.
inline std::vector<Vec> step_germs(const CoefficientField& c, const Integrand& y, const RoughPath& x) {
    detail::check_integrand(c, y, x);
    std::vector<Vec> out;
    out.reserve(x.steps());
    for (std::size_t k = 0; k < x.steps(); ++k) {
        const Vec& xk = x.step_first(k);
        Mat jk = 0.5 * y.phi.path().increment(k, k + 1) * xk.transpose();
        out.push_back(detail::germ(c, y.zc.z[k], y.zc.zp[k], y.phi[k], xk, x.step_second(k), jk,
                                   x.grid()[k + 1] - x.grid()[k]));
    }
    return out;
}

/// Compensated sum of Xi over the grid steps of [t_i, t_j].
inline Vec rough_integral(const CoefficientField& c, const Integrand& y, const RoughPath& x, std::size_t i,
                          std::size_t j) {
    if (i > j || j >= x.grid().size()) throw InvalidQuery("invalid index range");
    auto g = step_germs(c, y, x);
    Vec out = Vec::Zero(c.d);
    for (std::size_t k = i; k < j; ++k) out += g[k];
    return out;
}

inline Vec rough_integral_at(const CoefficientField& c, const Integrand& y, const RoughPath& x, double s, double t) {
    auto [i, j] = x.grid().range(s, t);
    return rough_integral(c, y, x, i, j);
}

/// The path t -> I_{0,t}.
inline GridPath rough_integral_path(const CoefficientField& c, const Integrand& y, const RoughPath& x) {
    auto g = step_germs(c, y, x);
    std::vector<Vec> v(x.grid().size(), Vec::Zero(c.d));
    for (std::size_t k = 0; k < g.size(); ++k) v[k + 1] = v[k] + g[k];
    return GridPath(x.grid(), std::move(v));
}

/// Compensated sums over the omega-adapted dyadic partitions of [t_i, t_j]
/// and the successive differences between levels.
struct IntegralLadder {
    std::vector<Vec> sums;
    std::vector<double> increments;
    Vec value;
};

/// Refines until the partition reaches grid resolution. Throws
/// NumericalFailure when the increments grow over the last three levels and
/// the final increment exceeds rel_tol relative to the value.
inline IntegralLadder rough_integral_ladder(const CoefficientField& c, const Integrand& y, const RoughPath& x,
                                            std::size_t i, std::size_t j, double rel_tol = 1e-6) {
    IntegralLadder out;
    for (int level = 0;; ++level) {
        auto part = adapted_dyadic_partition(x.omega(), i, j, level);
        Vec s = Vec::Zero(c.d);
        for (std::size_t k = 0; k + 1 < part.size(); ++k) s += xi_increment(c, y, x, part[k], part[k + 1]);
        if (!out.sums.empty()) out.increments.push_back((s - out.sums.back()).norm());
        out.sums.push_back(std::move(s));
        if (part.size() == j - i + 1) break;
    }
    out.value = out.sums.back();
    const auto& inc = out.increments;
    if (inc.size() >= 3) {
        const std::size_t m = inc.size();
        bool growing = inc[m - 1] > inc[m - 2] && inc[m - 2] > inc[m - 3];
        if (growing && inc[m - 1] > rel_tol * std::max(1.0, out.value.norm()))
            throw NumericalFailure("compensated sums do not settle: last increment " + std::to_string(inc[m - 1]));
    }
    return out;
}

/// (xi + I_{0,.}, sigma(Z, Phi)) as a controlled path of X.
inline ControlledPath integral_as_controlled(const CoefficientField& c, const Integrand& y, const RoughPath& x,
                                             const Vec& xi) {
    auto ip = rough_integral_path(c, y, x);
    std::vector<Vec> z;
    std::vector<Mat> zp;
    z.reserve(ip.size());
    zp.reserve(ip.size());
    for (std::size_t k = 0; k < ip.size(); ++k) {
        z.push_back(xi + ip[k]);
        zp.push_back(c.sigma(y.zc.z[k], y.phi[k]));
    }
    return ControlledPath(GridPath(x.grid(), std::move(z)), MatrixPath(x.grid(), std::move(zp)));
}

}  // namespace prde
