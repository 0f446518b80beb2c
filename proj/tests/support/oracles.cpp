#include "oracles.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lsvpm/analytic.hpp"

namespace lsvpm::check {

using boost::math::quadrature::gauss_kronrod;

double bs_call_by_quadrature(double spot, double strike, double rate, double vol, double maturity) {
    // Integrate over z ~ N(0,1) above the exercise boundary.
    const double sd = vol * std::sqrt(maturity);
    const double drift = (rate - 0.5 * vol * vol) * maturity;
    const double z_star = (std::log(strike / spot) - drift) / sd;
    auto f = [&](double z) {
        const double s = spot * std::exp(drift + sd * z);
        return (s - strike) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    };
    const double upper = std::max(z_star, 0.0) + 40.0;
    const double integral = gauss_kronrod<double, 61>::integrate(f, z_star, upper, 20, 1e-14);
    return std::exp(-rate * maturity) * integral;
}

GilPelaez heston_gil_pelaez(const HestonParams& p, double strike, double maturity) {
    using cd = std::complex<double>;
    const double forward = p.spot * std::exp(p.rate * maturity);
    const double k = std::log(strike / forward);
    const cd i(0.0, 1.0);
    // P2 = Q(S_T > K); P1 uses the share measure, phi(u - i) / phi(-i) with phi(-i) = 1.
    auto p2_integrand = [&](double u) {
        return std::real(std::exp(-i * u * k) * heston_log_forward_cf(p, maturity, cd(u, 0.0)) / (i * u));
    };
    auto p1_integrand = [&](double u) {
        return std::real(std::exp(-i * u * k) * heston_log_forward_cf(p, maturity, cd(u, -1.0)) / (i * u));
    };
    const double inf = std::numeric_limits<double>::infinity();
    const double p2 = 0.5 + gauss_kronrod<double, 61>::integrate(p2_integrand, 0.0, inf, 15, 1e-11) / std::numbers::pi;
    const double p1 = 0.5 + gauss_kronrod<double, 61>::integrate(p1_integrand, 0.0, inf, 15, 1e-11) / std::numbers::pi;
    const double df = std::exp(-p.rate * maturity);
    return {p.spot * p1 - strike * df * p2, strike * df * (1.0 - p2) - p.spot * (1.0 - p1)};
}

double ou_mean(double y0, double m, double theta, double t) { return theta + (y0 - theta) * std::exp(-m * t); }

}  // namespace lsvpm::check
