#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "prde/control.hpp"
#include "prde/grid.hpp"
#include "prde/norms.hpp"

namespace prde {

/// Level-1 increment and level-2 tensor of a rough path over one interval.
/// Tensor convention: second(k,j) = integral of X^k_{s,r} dX^j_r.
struct Signature {
    Vec first;
    Mat second;

    static Signature zero(Eigen::Index n) { return {Vec::Zero(n), Mat::Zero(n, n)}; }
};

/// Chen product: signature over [s,t] from those over [s,u] and [u,t].
inline Signature chen(const Signature& a, const Signature& b) {
    return {a.first + b.first, a.second + b.second + a.first * b.first.transpose()};
}

/// Grid-indexed rough path with per-step storage.
///
/// Besides the per-step pairs (X_i, XX_i) the path keeps the anchored values
/// (X_{0,t_i}, XX_{0,t_i}). Constructors derive the anchored values through
/// Chen's relation; files may carry inconsistent ones, which chen_check reports.
class RoughPath {
public:
    RoughPath() = default;

    RoughPath(Grid grid, std::vector<Vec> step1, std::vector<Mat> step2, double beta,
              std::optional<ControlFunction> omega = std::nullopt)
        : grid_(std::move(grid)), step1_(std::move(step1)), step2_(std::move(step2)), beta_(beta) {
        validate();
        const auto n = dim();
        anchored1_.assign(grid_.size(), Vec::Zero(n));
        anchored2_.assign(grid_.size(), Mat::Zero(n, n));
        for (std::size_t i = 0; i < grid_.steps(); ++i) {
            anchored1_[i + 1] = anchored1_[i] + step1_[i];
            anchored2_[i + 1] = anchored2_[i] + step2_[i] + anchored1_[i] * step1_[i].transpose();
        }
        omega_ = omega ? std::move(*omega) : ControlFunction::interval_length(grid_);
    }

    /// Full state including possibly inconsistent anchored values, as read from disk.
    static RoughPath from_parts(Grid grid, std::vector<Vec> step1, std::vector<Mat> step2, std::vector<Vec> anchored1,
                                std::vector<Mat> anchored2, double beta, std::optional<ControlFunction> omega) {
        RoughPath x(std::move(grid), std::move(step1), std::move(step2), beta, std::move(omega));
        if (anchored1.size() != x.grid_.size() || anchored2.size() != x.grid_.size())
            throw ParameterError("anchored values must have one entry per grid point");
        x.anchored1_ = std::move(anchored1);
        x.anchored2_ = std::move(anchored2);
        return x;
    }

    const Grid& grid() const noexcept { return grid_; }
    Eigen::Index dim() const { return step1_.empty() ? 0 : step1_.front().size(); }
    double beta() const noexcept { return beta_; }
    const ControlFunction& omega() const noexcept { return omega_; }
    std::size_t steps() const noexcept { return step1_.size(); }

    const Vec& step_first(std::size_t i) const { return step1_[i]; }
    const Mat& step_second(std::size_t i) const { return step2_[i]; }
    Signature step(std::size_t i) const { return {step1_[i], step2_[i]}; }
    const std::vector<Vec>& anchored_first() const noexcept { return anchored1_; }
    const std::vector<Mat>& anchored_second() const noexcept { return anchored2_; }

    /// Signature over grid indices [i, j], composed from steps (O(j-i)).
    Signature increment(std::size_t i, std::size_t j) const {
        if (i > j || j >= grid_.size()) throw InvalidQuery("invalid rough path index range");
        Signature s = Signature::zero(dim());
        for (std::size_t k = i; k < j; ++k) {
            s.second += step2_[k] + s.first * step1_[k].transpose();
            s.first += step1_[k];
        }
        return s;
    }

    Signature increment_at(double s, double t) const {
        auto [i, j] = grid_.range(s, t);
        return increment(i, j);
    }

    /// X_{t_i,t_j} from the anchored level-1 path.
    Vec first(std::size_t i, std::size_t j) const { return anchored1_[j] - anchored1_[i]; }

    /// The level-1 path t -> X_{0,t}.
    GridPath level1_path() const { return GridPath(grid_, anchored1_); }

    RoughPath with_omega(ControlFunction omega) const {
        RoughPath r = *this;
        r.omega_ = std::move(omega);
        return r;
    }

    RoughPath with_step_second(std::size_t i, Mat value) const {
        RoughPath r = *this;
        r.step2_.at(i) = std::move(value);
        return r;
    }

    /// ||X||_beta with respect to omega.
    double level1_holder() const {
        auto x = level1_path();
        return holder_norm(x, omega_, beta_);
    }

    /// ||XX||_{2 beta}; rows accumulated with Chen, O(N^2).
    double level2_holder() const {
        double m = 0.0;
        const double theta = 2.0 * beta_;
        for (std::size_t u = 0; u < grid_.size(); ++u) {
            Signature acc = Signature::zero(dim());
            for (std::size_t v = u + 1; v < grid_.size(); ++v) {
                acc.second += step2_[v - 1];
                acc.second.noalias() += acc.first * step1_[v - 1].transpose();
                acc.first += step1_[v - 1];
                double w = omega_.at_index(u, v);
                double r = w > 0.0 ? acc.second.norm() / std::pow(w, theta)
                                   : (acc.second.norm() > 0.0 ? infinite_norm : 0.0);
                m = std::max(m, r);
            }
        }
        return m;
    }

    /// ||X||_beta + sqrt(||XX||_{2 beta}).
    double triple_norm() const { return level1_holder() + std::sqrt(level2_holder()); }

    /// Sum of the first three powers of the triple norm.
    double triple_norm_sum() const {
        double x = triple_norm();
        return x + x * x + x * x * x;
    }

private:
    void validate() const {
        if (step1_.size() != grid_.steps() || step2_.size() != grid_.steps())
            throw ParameterError("rough path needs one level-1 and one level-2 entry per grid step");
        if (!(beta_ > 1.0 / 3.0 && beta_ <= 0.5)) throw ParameterError("rough path exponent must lie in (1/3, 1/2]");
        const auto n = step1_.front().size();
        for (std::size_t i = 0; i < step1_.size(); ++i) {
            if (step1_[i].size() != n || step2_[i].rows() != n || step2_[i].cols() != n)
                throw ParameterError("inconsistent rough path dimensions");
            if (!step1_[i].allFinite() || !step2_[i].allFinite()) throw ParameterError("rough path entry not finite");
        }
    }

    Grid grid_;
    std::vector<Vec> step1_;
    std::vector<Mat> step2_;
    std::vector<Vec> anchored1_;
    std::vector<Mat> anchored2_;
    double beta_ = 0.5;
    ControlFunction omega_ = ControlFunction::interval_length(Grid::uniform(1));
};

/// Signature of the composition over grid times s <= u <= t.
inline Signature chen_compose(const RoughPath& x, double s, double u, double t) {
    if (!(s <= u && u <= t)) throw InvalidQuery("chen_compose needs s <= u <= t");
    auto i = x.grid().index_of(s), k = x.grid().index_of(u), j = x.grid().index_of(t);
    return chen(x.increment(i, k), x.increment(k, j));
}

/// Largest Chen-relation residual between the per-step data and the anchored
/// values, over single steps and adjacent step pairs.
inline double chen_check(const RoughPath& x) {
    const auto& a1 = x.anchored_first();
    const auto& a2 = x.anchored_second();
    auto anchored_span = [&](std::size_t i, std::size_t j) {
        Vec first = a1[j] - a1[i];
        Mat second = a2[j] - a2[i] - a1[i] * first.transpose();
        return Signature{std::move(first), std::move(second)};
    };
    auto residual = [](const Signature& a, const Signature& b) {
        return std::max((a.first - b.first).norm(), (a.second - b.second).norm());
    };
    double r = 0.0;
    for (std::size_t i = 0; i < x.steps(); ++i) r = std::max(r, residual(x.step(i), anchored_span(i, i + 1)));
    for (std::size_t i = 0; i + 2 <= x.steps(); ++i)
        r = std::max(r, residual(chen(x.step(i), x.step(i + 1)), anchored_span(i, i + 2)));
    return r;
}

/// Piecewise-linear driver with cached Lipschitz constant ||h||_1 = max |h'|.
class LipschitzPath {
public:
    LipschitzPath() = default;

    explicit LipschitzPath(GridPath h) : path_(std::move(h)) {
        for (std::size_t i = 0; i + 1 < path_.size(); ++i)
            lipschitz_ = std::max(lipschitz_, path_.increment(i, i + 1).norm() / (path_.time(i + 1) - path_.time(i)));
    }

    const GridPath& path() const noexcept { return path_; }
    const Grid& grid() const noexcept { return path_.grid(); }
    double lipschitz() const noexcept { return lipschitz_; }
    Eigen::Index dim() const { return path_[0].size(); }

    LipschitzPath operator-() const {
        std::vector<Vec> v;
        v.reserve(path_.size());
        for (const auto& x : path_.values()) v.push_back(-x);
        return LipschitzPath(GridPath(path_.grid(), std::move(v)));
    }

    LipschitzPath resample(const Grid& g) const { return LipschitzPath(path_.resample(g)); }

private:
    GridPath path_;
    double lipschitz_ = 0.0;
};

/// Smooth rough path of a piecewise-linear path: XX_i = X_i (x) X_i / 2 per segment.
inline RoughPath lift_piecewise_linear(const LipschitzPath& h, double beta,
                                       std::optional<ControlFunction> omega = std::nullopt) {
    const auto& p = h.path();
    std::vector<Vec> s1;
    std::vector<Mat> s2;
    s1.reserve(p.size() - 1);
    s2.reserve(p.size() - 1);
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        Vec d = p.increment(i, i + 1);
        s2.push_back(0.5 * d * d.transpose());
        s1.push_back(std::move(d));
    }
    return RoughPath(p.grid(), std::move(s1), std::move(s2), beta, std::move(omega));
}

namespace detail {

/// splitmix64 finaliser; used to derive independent streams from integer keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform random bit generator seeded from a hashed key.
struct KeyedEngine {
    using result_type = std::uint64_t;
    std::uint64_t state;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return mix64(state += 0x9e3779b97f4a7c15ULL); }
};

/// Standard normal sample keyed by (seed, level, index, coordinate).
inline double keyed_normal(std::uint64_t seed, std::uint64_t level, std::uint64_t index, std::uint64_t coord) {
    std::uint64_t k = mix64(seed);
    k = mix64(k ^ (level + 0x632be59bd9b4e019ULL));
    k = mix64(k ^ (index * 0x8cb92ba72f3d8dd7ULL));
    k = mix64(k ^ (coord + 0x2545f4914f6cdd1dULL));
    KeyedEngine eng{k};
    std::normal_distribution<double> normal(0.0, 1.0);
    return normal(eng);
}

}  // namespace detail

/// Dyadic polygonal approximation B^N of an n-dimensional Brownian motion on [0,T].
///
/// The endpoint is drawn first and dyadic midpoints are inserted by Brownian
/// bridge sampling keyed by (seed, level, index); B^N restricted to the level-M
/// dyadics equals B^M for every M < N.
inline LipschitzPath brownian_polygonal(std::uint64_t seed, int level, double horizon, Eigen::Index n) {
    if (level < 0 || level > 20) throw ParameterError("dyadic level must lie in [0, 20]");
    if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
    const std::size_t m = std::size_t{1} << level;
    std::vector<Vec> b(m + 1, Vec::Zero(n));
    for (Eigen::Index c = 0; c < n; ++c) b[m](c) = std::sqrt(horizon) * detail::keyed_normal(seed, 0, 0, c);
    for (int k = 1; k <= level; ++k) {
        const std::size_t stride = m >> k;
        const double sd = std::sqrt(horizon / static_cast<double>(std::size_t{1} << (k + 1)));
        for (std::size_t j = 1; j < (std::size_t{1} << k); j += 2) {
            const std::size_t at = j * stride;
            for (Eigen::Index c = 0; c < n; ++c)
                b[at](c) = 0.5 * (b[at - stride](c) + b[at + stride](c)) + sd * detail::keyed_normal(seed, k, j, c);
        }
    }
    return LipschitzPath(GridPath(Grid::uniform(m, horizon), std::move(b)));
}

/// Translated rough path X^{-h}.
///
/// h is resampled onto the grid of X. Per step, with a = X_i, b = h_i and
/// c = a - b, the cross integrals are evaluated for linear interpolants:
/// XX^{-h}_i = XX_i - b(x)b/2 - c(x)b/2 - b(x)c/2. Composite spans follow from
/// Chen, which reproduces the left-point Young sums plus the closed-form
/// sub-step correction.
inline RoughPath translate(const RoughPath& x, const LipschitzPath& h) {
    if (h.dim() != x.dim()) throw DomainError("translation path has the wrong dimension");
    const Grid& g = x.grid();
    if (h.grid().front() > g.front() || h.grid().back() < g.back())
        throw DomainError("translation path does not cover the rough path's time span");
    GridPath hr = h.grid() == g ? h.path() : h.path().resample(g);
    std::vector<Vec> s1;
    std::vector<Mat> s2;
    s1.reserve(x.steps());
    s2.reserve(x.steps());
    for (std::size_t i = 0; i < x.steps(); ++i) {
        Vec b = hr.increment(i, i + 1);
        Vec c = x.step_first(i) - b;
        s2.push_back(x.step_second(i) - 0.5 * (b * b.transpose() + c * b.transpose() + b * c.transpose()));
        s1.push_back(std::move(c));
    }
    return RoughPath(g, std::move(s1), std::move(s2), x.beta(), x.omega());
}

/// omega(s,t) = ||X||_{1/beta-var,[s,t]}^{1/beta} + ||XX||_{1/(2beta)-var,[s,t]}^{1/(2beta)}
/// tabulated on all grid pairs. O(N^3) time, capped at N = 4096.
inline ControlFunction variation_derived_control(const RoughPath& x) {
    const std::size_t n = x.grid().size();
    if (n > 4097) throw ParameterError("variation-derived control is limited to 4096 steps");
    const double p1 = 1.0 / x.beta();
    const double p2 = 1.0 / (2.0 * x.beta());
    // Level-2 magnitudes on all pairs, accumulated row by row.
    Mat level2(n, n);
    level2.setZero();
    for (std::size_t u = 0; u < n; ++u) {
        Signature acc = Signature::zero(x.dim());
        for (std::size_t v = u + 1; v < n; ++v) {
            acc.second += x.step_second(v - 1) + acc.first * x.step_first(v - 1).transpose();
            acc.first += x.step_first(v - 1);
            level2(u, v) = acc.second.norm();
        }
    }
    auto path = x.level1_path();
    auto f1 = increment_magnitude(path);
    auto f2 = [&level2](std::size_t i, std::size_t j) { return level2(i, j); };
    Mat table = Mat::Zero(n, n);
    for (std::size_t u = 0; u + 1 < n; ++u) {
        auto s1 = variation_sums(f1, p1, u, n - 1);
        auto s2 = variation_sums(f2, p2, u, n - 1);
        for (std::size_t v = u + 1; v < n; ++v) table(u, v) = s1[v - u] + s2[v - u];
    }
    return ControlFunction::tabulated(x.grid(), std::move(table), ControlFunction::Kind::variation_derived);
}

}  // namespace prde
