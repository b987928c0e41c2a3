#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "prde/prde.hpp"

namespace prde::testing {

/// Gaussian random walk with N points on [0, 1] (uniform grid).
inline GridPath random_walk(std::mt19937_64& rng, std::size_t points, Eigen::Index dim, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Grid g = Grid::uniform(points - 1, 1.0);
    std::vector<Vec> v(points, Vec::Zero(dim));
    for (std::size_t k = 1; k < points; ++k) {
        v[k] = v[k - 1];
        for (Eigen::Index c = 0; c < dim; ++c) v[k](c) += normal(rng);
    }
    return GridPath(g, std::move(v));
}

/// Random walk on a non-uniform grid with the same number of points.
inline GridPath random_walk_irregular(std::mt19937_64& rng, std::size_t points, Eigen::Index dim) {
    std::uniform_real_distribution<double> u(0.2, 1.0);
    std::vector<double> t{0.0};
    for (std::size_t k = 1; k < points; ++k) t.push_back(t.back() + u(rng));
    for (auto& s : t) s /= t.back();
    auto w = random_walk(rng, points, dim);
    return GridPath(Grid(std::move(t)), w.values());
}

/// Samples t -> f(t) on a grid.
inline GridPath sample(const Grid& g, const std::function<Vec(double)>& f) {
    std::vector<Vec> v;
    v.reserve(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) v.push_back(f(g[k]));
    return GridPath(g, std::move(v));
}

/// Smooth two-dimensional test curve used for rough-integral and solver checks.
inline Vec smooth_curve(double t) {
    Vec v(2);
    v << 0.7 * std::sin(2.0 * M_PI * t) + 0.3 * t, 0.5 * std::cos(3.0 * t) - 0.5 + 0.2 * t * t;
    return v;
}

inline Vec smooth_curve_derivative(double t) {
    Vec v(2);
    v << 1.4 * M_PI * std::cos(2.0 * M_PI * t) + 0.3, -1.5 * std::sin(3.0 * t) + 0.4 * t;
    return v;
}

/// Smooth driver for reflected problems: pushes towards the boundary of the
/// half-line or the unit box.
inline Vec reflecting_curve(double t) {
    Vec v(2);
    v << -0.8 * std::sin(2.0 * M_PI * t) - 0.6 * t, 0.5 * std::cos(3.0 * t) - 0.5;
    return v;
}

inline LipschitzPath lipschitz_sample(std::size_t steps, const std::function<Vec(double)>& f, double horizon = 1.0) {
    return LipschitzPath(sample(Grid::uniform(steps, horizon), f));
}

/// The three shipped test fields, d x 2.
inline std::vector<CoefficientField> shipped_fields(Eigen::Index d) {
    Mat base = Mat::Constant(d, 2, 0.5);
    base(0, 0) = 1.0;
    std::vector<Mat> slopes(static_cast<std::size_t>(d), Mat::Constant(d, 2, 0.1));
    slopes[0](0, 1) = -0.3;
    std::vector<CoefficientField> out;
    out.push_back(path_dependent(SpatialField::trigonometric(base, 0.3, 1.5), 0.0));
    out.push_back(path_dependent(SpatialField::linear(base, slopes), 0.5));
    out.push_back(path_dependent(SpatialField::trigonometric(base, 0.4, 2.0), 1.0));
    return out;
}

/// Exhaustive p-th power sums over all partitions of the index set
/// {0..N-1} containing both endpoints, accumulated left to right.
inline double enumerate_p_variation(const GridPath& w, double p) {
    const std::size_t n = w.size();
    const std::size_t interior = n - 2;
    double best = -1.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << interior); ++mask) {
        double s = 0.0;
        std::size_t prev = 0;
        for (std::size_t k = 1; k < n; ++k) {
            if (k < n - 1 && !((mask >> (k - 1)) & 1u)) continue;
            s = s + std::pow((w[k] - w[prev]).norm(), p);
            prev = k;
        }
        best = std::max(best, s);
    }
    return std::pow(best, 1.0 / p);
}

/// Brownian polygonal path on the 2^level grid.
inline GridPath brownian(std::uint64_t seed, int level, Eigen::Index dim, double horizon = 1.0) {
    return brownian_polygonal(seed, level, horizon, dim).path();
}

/// Brownian sample started inside the domain: w = start + scale B.
inline GridPath brownian_from(std::uint64_t seed, int level, const Vec& start, double scale) {
    auto b = brownian(seed, level, start.size());
    std::vector<Vec> v;
    for (const auto& x : b.values()) v.push_back(start + scale * x);
    return GridPath(b.grid(), std::move(v));
}

/// Integral of a smooth function on [a, b] by composite Gauss-Legendre (5 nodes).
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels = 64) {
    static const double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
    static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                                0.2369268850561891};
    double h = (b - a) / panels, s = 0.0;
    for (int p = 0; p < panels; ++p) {
        double m = a + (p + 0.5) * h;
        for (int k = 0; k < 5; ++k) s += w[k] * f(m + 0.5 * h * x[k]);
    }
    return 0.5 * h * s;
}

/// Z = f(X) with f(x) = (sin x1 + 0.3 x2 x2, ...) restricted to d rows, Z' = Df(X).
inline ControlledPath composed_path(const RoughPath& x, Eigen::Index d) {
    auto xp = x.level1_path();
    std::vector<Vec> z;
    std::vector<Mat> zp;
    for (std::size_t k = 0; k < xp.size(); ++k) {
        const Vec& v = xp[k];
        Vec zz(d);
        Mat j(d, 2);
        for (Eigen::Index r = 0; r < d; ++r) {
            const double a = 1.0 + 0.5 * static_cast<double>(r);
            zz(r) = std::sin(a * v(0)) + 0.3 * v(1) * v(1) + 0.1 * static_cast<double>(r);
            j(r, 0) = a * std::cos(a * v(0));
            j(r, 1) = 0.6 * v(1);
        }
        z.push_back(zz);
        zp.push_back(j);
    }
    return ControlledPath(GridPath(x.grid(), z), MatrixPath(x.grid(), zp));
}

inline Vec composed_value(const Vec& v, Eigen::Index d) {
    Vec zz(d);
    for (Eigen::Index r = 0; r < d; ++r)
        zz(r) = std::sin((1.0 + 0.5 * static_cast<double>(r)) * v(0)) + 0.3 * v(1) * v(1) + 0.1 * static_cast<double>(r);
    return zz;
}

inline Vec smooth_phi(double t, Eigen::Index d) {
    Vec p(d);
    for (Eigen::Index r = 0; r < d; ++r) p(r) = 0.2 * t * t + 0.05 * static_cast<double>(r) * t;
    return p;
}

}  // namespace prde::testing
