#pragma once

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "prde/grid.hpp"

namespace prde {

/// Reported bounds of a coefficient field. Built-in fields fill them
/// analytically; for unbounded fields they refer to the queried region only.
struct FieldBounds {
    double sigma_sup = 0.0;        ///< ||sigma||_inf
    double dsigma_sup = 0.0;       ///< ||D sigma||_inf
    double dsigma_holder = 0.0;    ///< ||D sigma||_{gamma-2}
    double drift_derivative = 0.0; ///< ||Db||_inf
};

/// sigma(z, phi) in L(R^n, R^d) with first derivatives in z and phi, plus an
/// optional drift b(z, phi). Derivatives are returned as one d x n matrix per
/// coordinate of the differentiated argument.
struct CoefficientField {
    using Value = std::function<Mat(const Vec&, const Vec&)>;
    using Derivative = std::function<std::vector<Mat>(const Vec&, const Vec&)>;
    using Drift = std::function<Vec(const Vec&, const Vec&)>;

    Eigen::Index d = 1;
    Eigen::Index n = 1;
    double gamma = 3.0;
    Value sigma;
    Derivative d1sigma;
    Derivative d2sigma;
    Drift drift;
    FieldBounds bounds;
    std::string name;

    bool has_drift() const { return static_cast<bool>(drift); }
};

/// A field of one variable y, reused for the path-dependent and reflected
/// forms below.
struct SpatialField {
    Eigen::Index d = 1;
    Eigen::Index n = 1;
    std::function<Mat(const Vec&)> value;
    std::function<std::vector<Mat>(const Vec&)> derivative;
    FieldBounds bounds;
    std::string name;

    /// sigma(y) = c.
    static SpatialField constant(Mat c) {
        SpatialField f;
        f.d = c.rows();
        f.n = c.cols();
        f.bounds.sigma_sup = c.norm();
        f.name = "constant";
        const auto d = f.d, n = f.n;
        f.value = [c](const Vec&) { return c; };
        f.derivative = [d, n](const Vec&) { return std::vector<Mat>(static_cast<std::size_t>(d), Mat::Zero(d, n)); };
        return f;
    }

    /// sigma(y) = base + sum_l y_l slopes[l].
    static SpatialField linear(Mat base, std::vector<Mat> slopes) {
        if (static_cast<Eigen::Index>(slopes.size()) != base.rows())
            throw ParameterError("linear field needs one slope matrix per state coordinate");
        SpatialField f;
        f.d = base.rows();
        f.n = base.cols();
        double ds = 0.0;
        for (const auto& a : slopes) ds += a.squaredNorm();
        f.bounds.dsigma_sup = std::sqrt(ds);
        f.bounds.sigma_sup = std::numeric_limits<double>::infinity();
        f.name = "linear";
        f.value = [base, slopes](const Vec& y) {
            Mat m = base;
            for (std::size_t l = 0; l < slopes.size(); ++l) m += y(static_cast<Eigen::Index>(l)) * slopes[l];
            return m;
        };
        f.derivative = [slopes](const Vec&) { return slopes; };
        return f;
    }

    /// sigma_ij(y) = base_ij + a sin(k y_m + phase_ij) with m = (i + j) mod d and
    /// phase_ij = 0.7 (i + 1) + 1.3 j.
    static SpatialField trigonometric(Mat base, double amplitude, double frequency) {
        SpatialField f;
        f.d = base.rows();
        f.n = base.cols();
        const auto d = f.d, n = f.n;
        const double root = std::sqrt(static_cast<double>(d * n));
        f.bounds.sigma_sup = base.norm() + std::abs(amplitude) * root;
        f.bounds.dsigma_sup = std::abs(amplitude * frequency) * root;
        f.bounds.dsigma_holder = std::abs(amplitude) * frequency * frequency * root;
        f.name = "trigonometric";
        auto phase = [](Eigen::Index i, Eigen::Index j) { return 0.7 * static_cast<double>(i + 1) + 1.3 * static_cast<double>(j); };
        f.value = [=](const Vec& y) {
            Mat m = base;
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = 0; j < n; ++j) m(i, j) += amplitude * std::sin(frequency * y((i + j) % d) + phase(i, j));
            return m;
        };
        f.derivative = [=](const Vec& y) {
            std::vector<Mat> out(static_cast<std::size_t>(d), Mat::Zero(d, n));
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    const auto m = (i + j) % d;
                    out[static_cast<std::size_t>(m)](i, j) =
                        amplitude * frequency * std::cos(frequency * y(m) + phase(i, j));
                }
            return out;
        };
        return f;
    }
};

/// sigma(z, phi) = s(z + coupling phi). coupling = 1 gives the reflected form
/// sigma(Z + Phi); coupling = 0 ignores the bounded-variation argument.
inline CoefficientField path_dependent(const SpatialField& s, double coupling = 1.0) {
    CoefficientField c;
    c.d = s.d;
    c.n = s.n;
    c.name = s.name;
    c.bounds = s.bounds;
    c.bounds.dsigma_sup *= std::max(1.0, std::abs(coupling));
    c.bounds.dsigma_holder *= std::max(1.0, std::abs(coupling));
    auto value = s.value;
    auto derivative = s.derivative;
    c.sigma = [value, coupling](const Vec& z, const Vec& phi) { return value(z + coupling * phi); };
    c.d1sigma = [derivative, coupling](const Vec& z, const Vec& phi) { return derivative(z + coupling * phi); };
    c.d2sigma = [derivative, coupling](const Vec& z, const Vec& phi) {
        auto out = derivative(z + coupling * phi);
        for (auto& m : out) m *= coupling;
        return out;
    };
    return c;
}

/// Adds b(z, phi) = b0 - rate (z + coupling phi - centre).
inline CoefficientField with_linear_drift(CoefficientField c, Vec b0, double rate, Vec centre, double coupling = 1.0) {
    c.bounds.drift_derivative = std::abs(rate) * std::max(1.0, std::abs(coupling));
    c.drift = [b0 = std::move(b0), rate, centre = std::move(centre), coupling](const Vec& z, const Vec& phi) {
        return Vec(b0 - rate * (z + coupling * phi - centre));
    };
    return c;
}

inline CoefficientField with_drift(CoefficientField c, CoefficientField::Drift b, double derivative_bound) {
    c.drift = std::move(b);
    c.bounds.drift_derivative = derivative_bound;
    return c;
}

/// sum_l D[l] * M.row(l)^T: contracts a derivative family against a d x n tensor.
inline Vec contract(const std::vector<Mat>& D, const Mat& m) {
    Vec out = Vec::Zero(D.empty() ? 0 : D.front().rows());
    for (std::size_t l = 0; l < D.size(); ++l) out.noalias() += D[l] * m.row(static_cast<Eigen::Index>(l)).transpose();
    return out;
}

}  // namespace prde
