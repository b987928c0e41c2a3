#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>

#include "prde/grid.hpp"

namespace prde {

/// Superadditive two-parameter budget omega(s,t) on [t_0, t_N].
///
/// Three kinds are supported. interval-length is omega(s,t) = t - s. The other
/// two store a dense table over grid pairs; off-grid queries are answered by
/// bilinear interpolation between the enclosing grid points. Tables are shared
/// between copies and never mutated after construction.
class ControlFunction {
public:
    enum class Kind { interval_length, variation_derived, tabulated };

    /// omega(s,t) = |t - s| on the given grid.
    static ControlFunction interval_length(Grid grid) {
        ControlFunction c;
        c.kind_ = Kind::interval_length;
        c.grid_ = std::move(grid);
        return c;
    }

    /// Dense table, table(i,j) = omega(t_i, t_j) for i <= j. Entries below the
    /// diagonal are ignored. The diagonal must vanish.
    static ControlFunction tabulated(Grid grid, Mat table, Kind kind = Kind::tabulated) {
        const auto n = static_cast<Eigen::Index>(grid.size());
        if (table.rows() != n || table.cols() != n)
            throw ParameterError("control table must be (N+1)x(N+1)");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (table(i, i) != 0.0) throw ParameterError("control table must vanish on the diagonal");
            for (Eigen::Index j = i; j < n; ++j)
                if (!(table(i, j) >= 0.0) || !std::isfinite(table(i, j)))
                    throw ParameterError("control table entries must be finite and non-negative");
        }
        ControlFunction c;
        c.kind_ = kind;
        c.grid_ = std::move(grid);
        c.table_ = std::make_shared<const Mat>(std::move(table));
        return c;
    }

    Kind kind() const noexcept { return kind_; }
    const Grid& grid() const noexcept { return grid_; }

    /// omega(t_i, t_j) for grid indices i <= j.
    double at_index(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        if (kind_ == Kind::interval_length) return grid_[j] - grid_[i];
        return (*table_)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    /// omega(s,t) for arbitrary s <= t inside the grid span.
    double operator()(double s, double t) const {
        if (s > t) std::swap(s, t);
        if (kind_ == Kind::interval_length) return t - s;
        std::size_t i = grid_.enclosing_step(s);
        std::size_t j = grid_.enclosing_step(t);
        double ls = weight(i, s), lt = weight(j, t);
        auto w = [&](std::size_t a, std::size_t b) { return a <= b ? at_index(a, b) : 0.0; };
        double v = (1 - ls) * (1 - lt) * w(i, j) + (1 - ls) * lt * w(i, j + 1) + ls * (1 - lt) * w(i + 1, j) +
                   ls * lt * w(i + 1, j + 1);
        return std::max(v, 0.0);
    }

    /// max over grid triples i <= k <= j of omega(i,k) + omega(k,j) - omega(i,j).
    /// Non-positive (up to rounding) for a valid control.
    double superadditivity_defect() const {
        const std::size_t n = grid_.size();
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = i; k < n; ++k)
                for (std::size_t j = k; j < n; ++j)
                    worst = std::max(worst, at_index(i, k) + at_index(k, j) - at_index(i, j));
        return worst;
    }

    std::string kind_name() const {
        switch (kind_) {
            case Kind::interval_length: return "interval-length";
            case Kind::variation_derived: return "variation-derived";
            case Kind::tabulated: return "tabulated";
        }
        return "unknown";
    }

private:
    ControlFunction() = default;

    double weight(std::size_t i, double t) const {
        return std::clamp((t - grid_[i]) / (grid_[i + 1] - grid_[i]), 0.0, 1.0);
    }

    Kind kind_ = Kind::interval_length;
    Grid grid_;
    std::shared_ptr<const Mat> table_;
};

}  // namespace prde
