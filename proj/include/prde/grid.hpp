#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prde/errors.hpp"

namespace prde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Euclidean norm for vectors, Hilbert-Schmidt norm for matrices.
inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const Vec& v) { return v.norm(); }
inline double magnitude(const Mat& m) { return m.norm(); }

/// Strictly increasing finite set of sample times t_0 < ... < t_N, N >= 1.
class Grid {
public:
    Grid() = default;

    explicit Grid(std::vector<double> times) : times_(std::move(times)) {
        if (times_.size() < 2) throw ParameterError("grid needs at least two points");
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!std::isfinite(times_[i])) throw ParameterError("grid time is not finite");
            if (i > 0 && !(times_[i] > times_[i - 1]))
                throw ParameterError("grid times must be strictly increasing");
        }
    }

    /// steps + 1 equally spaced points on [0, horizon].
    static Grid uniform(std::size_t steps, double horizon = 1.0) {
        if (steps < 1) throw ParameterError("uniform grid needs at least one step");
        std::vector<double> t(steps + 1);
        for (std::size_t i = 0; i <= steps; ++i)
            t[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
        t[steps] = horizon;
        return Grid(std::move(t));
    }

    std::size_t size() const noexcept { return times_.size(); }
    std::size_t steps() const noexcept { return times_.size() - 1; }
    double operator[](std::size_t i) const { return times_[i]; }
    double front() const { return times_.front(); }
    double back() const { return times_.back(); }
    std::span<const double> times() const noexcept { return times_; }

    /// Index of an exact grid time.
    std::size_t index_of(double t) const {
        auto it = std::lower_bound(times_.begin(), times_.end(), t);
        if (it == times_.end() || *it != t)
            throw InvalidQuery("time " + std::to_string(t) + " is not a grid point");
        return static_cast<std::size_t>(it - times_.begin());
    }

    /// Index pair of a grid range [s,t] with s <= t.
    std::pair<std::size_t, std::size_t> range(double s, double t) const {
        if (s > t) throw InvalidQuery("query range has s > t");
        return {index_of(s), index_of(t)};
    }

    /// Largest i with t_i <= t, clamped to [0, N-1]. Used for off-grid interpolation.
    std::size_t enclosing_step(double t) const {
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        std::size_t i = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
        return std::min(i, steps() - 1);
    }

    double mesh() const {
        double m = 0.0;
        for (std::size_t i = 1; i < times_.size(); ++i) m = std::max(m, times_[i] - times_[i - 1]);
        return m;
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::vector<double> times_;
};

/// Grid samples of a path, read as its piecewise-linear interpolant.
/// V is double, Vec or Mat.
template <class V>
class Path {
public:
    using value_type = V;

    Path() = default;

    Path(Grid grid, std::vector<V> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw ParameterError("path has " + std::to_string(values_.size()) + " values on a grid of " +
                                 std::to_string(grid_.size()) + " points");
        for (const auto& v : values_)
            if (!finite(v)) throw ParameterError("path value is not finite");
    }

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    double time(std::size_t i) const { return grid_[i]; }
    const V& operator[](std::size_t i) const { return values_[i]; }
    V& operator[](std::size_t i) { return values_[i]; }
    const std::vector<V>& values() const noexcept { return values_; }
    const V& front() const { return values_.front(); }
    const V& back() const { return values_.back(); }

    /// w_{t_i, t_j} = w_{t_j} - w_{t_i}
    V increment(std::size_t i, std::size_t j) const { return V(values_[j] - values_[i]); }

    /// Value of the interpolant at an arbitrary time in [t_0, t_N].
    V at(double t) const {
        std::size_t i = grid_.enclosing_step(t);
        double t0 = grid_[i], t1 = grid_[i + 1];
        double lambda = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
        if (lambda == 0.0) return values_[i];
        if (lambda == 1.0) return values_[i + 1];
        return V(values_[i] + lambda * (values_[i + 1] - values_[i]));
    }

    /// Interpolant sampled on another grid inside [t_0, t_N].
    Path resample(const Grid& target) const {
        std::vector<V> out;
        out.reserve(target.size());
        for (std::size_t k = 0; k < target.size(); ++k) out.push_back(at(target[k]));
        return Path(target, std::move(out));
    }

private:
    static bool finite(double x) { return std::isfinite(x); }
    template <class E>
    static bool finite(const Eigen::MatrixBase<E>& m) {
        return m.allFinite();
    }

    Grid grid_;
    std::vector<V> values_;
};

using GridPath = Path<Vec>;
using MatrixPath = Path<Mat>;
using ScalarPath = Path<double>;

/// Convenience constructor for scalar test paths stored as 1-d vectors.
inline GridPath scalar_path(const Grid& grid, std::span<const double> xs) {
    std::vector<Vec> v;
    v.reserve(xs.size());
    for (double x : xs) v.push_back(Vec::Constant(1, x));
    return GridPath(grid, std::move(v));
}

inline std::size_t dimension(const GridPath& w) { return w.size() == 0 ? 0 : static_cast<std::size_t>(w[0].size()); }

}  // namespace prde
