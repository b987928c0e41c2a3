#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <type_traits>
#include <vector>

#include "prde/control.hpp"
#include "prde/grid.hpp"

namespace prde {

/// Returned by ratio norms when a positive increment meets a zero budget.
inline constexpr double infinite_norm = std::numeric_limits<double>::infinity();

namespace detail {

inline void require_p(double p) {
    if (!(p >= 1.0)) throw ParameterError("variation exponent must be >= 1");
}

inline void require_theta(double theta) {
    if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("Hoelder exponent must lie in (0,1]");
}

/// 0/0 = 0 and x/0 = +inf.
inline double ratio(double num, double den) {
    if (den > 0.0) return num / den;
    return num > 0.0 ? infinite_norm : 0.0;
}

}  // namespace detail

/// Magnitude of the increment between grid indices i <= j of a one- or
/// two-parameter object.
template <class F>
concept IncrementMagnitude = std::invocable<F, std::size_t, std::size_t> &&
                             std::convertible_to<std::invoke_result_t<F, std::size_t, std::size_t>, double>;

/// Accumulated p-th power sums best[j] = sup over partitions of [i0, j] of
/// sum |f(t_{k-1}, t_k)|^p, for every j in [i0, j1].
///
/// Dynamic program best[j] = max_{i<j} best[i] + |f(i,j)|^p. Every candidate is
/// a left-to-right accumulation of a partition sum, so the result agrees bit for
/// bit with exhaustive enumeration performed in the same order.
template <IncrementMagnitude F>
std::vector<double> variation_sums(F&& f, double p, std::size_t i0, std::size_t j1) {
    detail::require_p(p);
    std::vector<double> best(j1 - i0 + 1, 0.0);
    for (std::size_t j = i0 + 1; j <= j1; ++j) {
        double b = -1.0;
        for (std::size_t i = i0; i < j; ++i) b = std::max(b, best[i - i0] + std::pow(f(i, j), p));
        best[j - i0] = b;
    }
    return best;
}

/// p-variation of a generic increment functor over grid indices [i0, j1].
template <IncrementMagnitude F>
double p_variation_indexed(F&& f, double p, std::size_t i0, std::size_t j1) {
    if (i0 > j1) throw InvalidQuery("query range has s > t");
    if (i0 == j1) {
        detail::require_p(p);
        return 0.0;
    }
    return std::pow(variation_sums(f, p, i0, j1).back(), 1.0 / p);
}

template <class V>
auto increment_magnitude(const Path<V>& w) {
    return [&w](std::size_t i, std::size_t j) {
        if constexpr (std::is_same_v<V, double>)
            return std::abs(w[j] - w[i]);
        else
            return (w[j] - w[i]).norm();
    };
}

/// ||w||_{p-var,[s,t]} over partitions made of grid points.
template <class V>
double p_variation(const Path<V>& w, double p, double s, double t) {
    detail::require_p(p);
    auto [i, j] = w.grid().range(s, t);
    return p_variation_indexed(increment_magnitude(w), p, i, j);
}

template <class V>
double p_variation(const Path<V>& w, double p) {
    return p_variation_indexed(increment_magnitude(w), p, 0, w.size() - 1);
}

/// max over grid pairs u <= v in [i0, j1] of f(u,v).
template <IncrementMagnitude F>
double sup_increment_indexed(F&& f, std::size_t i0, std::size_t j1) {
    if (i0 > j1) throw InvalidQuery("query range has s > t");
    double m = 0.0;
    for (std::size_t u = i0; u <= j1; ++u)
        for (std::size_t v = u + 1; v <= j1; ++v) m = std::max(m, static_cast<double>(f(u, v)));
    return m;
}

/// ||w||_{infinity-var,[s,t]} = max |w_{u,v}| over grid pairs.
template <class V>
double sup_increment_norm(const Path<V>& w, double s, double t) {
    auto [i, j] = w.grid().range(s, t);
    return sup_increment_indexed(increment_magnitude(w), i, j);
}

template <class V>
double sup_increment_norm(const Path<V>& w) {
    return sup_increment_indexed(increment_magnitude(w), 0, w.size() - 1);
}

/// Smallest C with f(u,v) <= C omega(u,v)^theta on grid pairs in [i0, j1].
template <IncrementMagnitude F>
double holder_norm_indexed(F&& f, const ControlFunction& omega, double theta, std::size_t i0, std::size_t j1) {
    detail::require_theta(theta);
    if (i0 > j1) throw InvalidQuery("query range has s > t");
    double m = 0.0;
    for (std::size_t u = i0; u <= j1; ++u)
        for (std::size_t v = u + 1; v <= j1; ++v)
            m = std::max(m, detail::ratio(f(u, v), std::pow(omega.at_index(u, v), theta)));
    return m;
}

/// omega-Hoelder norm ||w||_{theta,[s,t]}.
template <class V>
double holder_norm(const Path<V>& w, const ControlFunction& omega, double theta, double s, double t) {
    auto [i, j] = w.grid().range(s, t);
    return holder_norm_indexed(increment_magnitude(w), omega, theta, i, j);
}

template <class V>
double holder_norm(const Path<V>& w, const ControlFunction& omega, double theta) {
    return holder_norm_indexed(increment_magnitude(w), omega, theta, 0, w.size() - 1);
}

/// Smallest C with ||f||_{q-var,[u,v]} <= C omega(u,v)^theta on grid pairs.
template <IncrementMagnitude F>
double mixed_norm_indexed(F&& f, const ControlFunction& omega, double q, double theta, std::size_t i0,
                          std::size_t j1) {
    detail::require_p(q);
    detail::require_theta(theta);
    if (i0 > j1) throw InvalidQuery("query range has s > t");
    double m = 0.0;
    for (std::size_t u = i0; u < j1; ++u) {
        auto sums = variation_sums(f, q, u, j1);
        for (std::size_t v = u + 1; v <= j1; ++v)
            m = std::max(m, detail::ratio(std::pow(sums[v - u], 1.0 / q), std::pow(omega.at_index(u, v), theta)));
    }
    return m;
}

/// ||w||_{q-var,theta,[s,t]}.
template <class V>
double mixed_norm(const Path<V>& w, const ControlFunction& omega, double q, double theta, double s, double t) {
    auto [i, j] = w.grid().range(s, t);
    return mixed_norm_indexed(increment_magnitude(w), omega, q, theta, i, j);
}

template <class V>
double mixed_norm(const Path<V>& w, const ControlFunction& omega, double q, double theta) {
    return mixed_norm_indexed(increment_magnitude(w), omega, q, theta, 0, w.size() - 1);
}

/// The three sides of the interpolation inequality between variation norms:
/// lhs = ||w||_{q-var}, middle = ||w||_{q'-var}^{q'/q} ||w||_{inf-var}^{(q-q')/q},
/// rhs = ||w||_{q'-var}. Expected ordering lhs <= middle <= rhs.
struct InterpolationChain {
    double lhs;
    double middle;
    double rhs;

    bool holds(double rel_slack = 1e-12) const {
        auto le = [rel_slack](double a, double b) { return a <= b + rel_slack * std::max(1.0, std::abs(b)); };
        return le(lhs, middle) && le(middle, rhs);
    }
};

template <class V>
InterpolationChain check_interpolation(const Path<V>& w, double q_low, double q, double s, double t) {
    if (!(q_low >= 1.0)) throw ParameterError("lower variation exponent must be >= 1");
    if (!(q_low < q)) throw ParameterError("interpolation needs q' < q");
    double vq = p_variation(w, q, s, t);
    double vlow = p_variation(w, q_low, s, t);
    double vinf = sup_increment_norm(w, s, t);
    return {vq, std::pow(vlow, q_low / q) * std::pow(vinf, (q - q_low) / q), vlow};
}

template <class V>
InterpolationChain check_interpolation(const Path<V>& w, double q_low, double q) {
    return check_interpolation(w, q_low, q, w.grid().front(), w.grid().back());
}

/// Non-decreasing positive continuous F on [0, inf), tagged with the exponent
/// beta of the path space it is evaluated on.
struct MajorantFunction {
    std::function<double(double)> f;
    double beta = 0.5;

    double operator()(double x) const {
        double v = f(x);
        if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError("majorant must be positive and finite");
        return v;
    }

    static MajorantFunction constant(double c, double beta) {
        return {[c](double) { return c; }, beta};
    }
};

/// inf over eps > 0 of F(eps) ((x/eps)^{1/beta} + 1).
///
/// 64 log-spaced candidates in [x 1e-6 + 1e-9, max(1e7 x, 10)] plus eps = x,
/// then golden-section search on the bracket around the best candidate until
/// the bracket is below rel_tol in log-space.
inline double polynomial_majorant(const MajorantFunction& F, double x, double rel_tol = 1e-8) {
    if (!(x >= 0.0)) throw ParameterError("majorant argument must be >= 0");
    if (!(F.beta > 0.0 && F.beta <= 1.0)) throw ParameterError("majorant exponent must lie in (0,1]");
    const double inv_beta = 1.0 / F.beta;
    auto objective = [&](double log_eps) {
        double eps = std::exp(log_eps);
        return F(eps) * (std::pow(x / eps, inv_beta) + 1.0);
    };

    constexpr int n = 64;
    const double lo = std::log(x * 1e-6 + 1e-9);
    const double hi = std::log(std::max(1e7 * x, 10.0));
    std::vector<double> nodes(n);
    for (int k = 0; k < n; ++k) nodes[k] = lo + (hi - lo) * k / (n - 1);

    int best_k = 0;
    double best = infinite_norm;
    for (int k = 0; k < n; ++k) {
        double v = objective(nodes[k]);
        if (v < best) best = v, best_k = k;
    }
    if (x > 0.0) best = std::min(best, objective(std::log(x)));

    double a = nodes[std::max(best_k - 1, 0)];
    double b = nodes[std::min(best_k + 1, n - 1)];
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = objective(c), fd = objective(d);
    while (b - a > rel_tol) {
        if (fc < fd) {
            b = d, d = c, fd = fc;
            c = b - ratio * (b - a);
            fc = objective(c);
        } else {
            a = c, c = d, fc = fd;
            d = a + ratio * (b - a);
            fd = objective(d);
        }
    }
    return std::min({best, fc, fd});
}

}  // namespace prde
