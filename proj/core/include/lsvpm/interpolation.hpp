#pragma once

#include <span>
#include <vector>

namespace lsvpm {

/// Natural cubic spline through (x_i, y_i) with flat extrapolation outside [x_0, x_n].
class NaturalCubicSpline {
public:
    NaturalCubicSpline() = default;
    NaturalCubicSpline(std::span<const double> x, std::span<const double> y);

    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] std::size_t size() const { return x_.size(); }

    /// Exact max of |s'(x)| over segment k (the derivative is quadratic on each segment).
    [[nodiscard]] double max_abs_derivative(std::size_t segment) const;

    /// Cubic coefficients of segment k in powers of (x - x_k).
    struct Segment {
        double a, b, c, d;
    };
    [[nodiscard]] Segment segment(std::size_t k) const;
    [[nodiscard]] std::span<const double> knots() const { return x_; }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_;  // second derivatives at the knots
};

/// Max of |p(u)| on [0, h] for p(u) = a + b u + c u^2 + d u^3.
double max_abs_cubic(double a, double b, double c, double d, double h);

}  // namespace lsvpm
