#include "lsvpm/interpolation.hpp"

#include <algorithm>
#include <cmath>

#include "lsvpm/errors.hpp"

namespace lsvpm {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()), m_(x.size(), 0.0) {
    if (x.size() != y.size() || x.empty()) {
        throw Error(ErrorCode::Validation, "spline needs equally sized, nonempty knots");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
        if (!(x_[i] > x_[i - 1])) throw Error(ErrorCode::Validation, "spline knots must ascend strictly");
    }
    const std::size_t n = x_.size();
    if (n < 3) return;

    // Thomas algorithm on the interior second derivatives; natural ends m_0 = m_{n-1} = 0.
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double h0 = x_[i + 1] - x_[i];
        const double h1 = x_[i + 2] - x_[i + 1];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y_[i + 2] - y_[i + 1]) / h1 - (y_[i + 1] - y_[i]) / h0);
    }
    for (std::size_t i = 1; i < k; ++i) {
        const double lower = x_[i + 1] - x_[i];
        const double w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m_[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) {
        m_[i + 1] = (rhs[i] - upper[i] * m_[i + 2]) / diag[i];
    }
}

NaturalCubicSpline::Segment NaturalCubicSpline::segment(std::size_t k) const {
    const double h = x_[k + 1] - x_[k];
    return {y_[k], (y_[k + 1] - y_[k]) / h - h * (2.0 * m_[k] + m_[k + 1]) / 6.0, 0.5 * m_[k],
            (m_[k + 1] - m_[k]) / (6.0 * h)};
}

double NaturalCubicSpline::operator()(double x) const {
    if (x_.size() == 1 || x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
    const auto [a, b, c, d] = segment(k);
    const double u = x - x_[k];
    return a + u * (b + u * (c + u * d));
}

double NaturalCubicSpline::max_abs_derivative(std::size_t k) const {
    const auto [a, b, c, d] = segment(k);
    const double h = x_[k + 1] - x_[k];
    auto deriv = [&](double u) { return std::abs(b + u * (2.0 * c + 3.0 * d * u)); };
    double best = std::max(deriv(0.0), deriv(h));
    if (d != 0.0) {
        const double u = -c / (3.0 * d);
        if (u > 0.0 && u < h) best = std::max(best, deriv(u));
    }
    return best;
}

double max_abs_cubic(double a, double b, double c, double d, double h) {
    auto p = [&](double u) { return std::abs(a + u * (b + u * (c + u * d))); };
    double best = std::max(p(0.0), p(h));
    // critical points of p: 3d u^2 + 2c u + b = 0
    if (d == 0.0) {
        if (c != 0.0) {
            const double u = -b / (2.0 * c);
            if (u > 0.0 && u < h) best = std::max(best, p(u));
        }
        return best;
    }
    const double disc = 4.0 * c * c - 12.0 * d * b;
    if (disc < 0.0) return best;
    const double sq = std::sqrt(disc);
    for (const double u : {(-2.0 * c + sq) / (6.0 * d), (-2.0 * c - sq) / (6.0 * d)}) {
        if (u > 0.0 && u < h) best = std::max(best, p(u));
    }
    return best;
}

}  // namespace lsvpm
