#include "lsvpm/analytic.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "lsvpm/errors.hpp"

namespace lsvpm {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

double black_scholes_call(double spot, double strike, double rate, double vol, double maturity) {
    const double df = std::exp(-rate * maturity);
    const double forward = spot / df;
    const double sd = vol * std::sqrt(maturity);
    if (strike <= 0.0) return spot;
    if (sd <= 0.0) return df * std::max(forward - strike, 0.0);
    const double d1 = (std::log(forward / strike) + 0.5 * sd * sd) / sd;
    const double d2 = d1 - sd;
    return df * (forward * norm_cdf(d1) - strike * norm_cdf(d2));
}

CallBounds call_price_bounds(double spot, double strike, double rate, double maturity) {
    return {std::max(spot - strike * std::exp(-rate * maturity), 0.0), spot};
}

double implied_vol(const EuropeanQuote& quote, double spot, double rate) {
    const auto [lower, upper] = call_price_bounds(spot, quote.strike, rate, quote.maturity);
    const double price = quote.call_price;
    if (!(price > lower && price < upper)) {
        std::ostringstream os;
        os << "call price " << price << " outside (" << lower << ", " << upper << ") at K=" << quote.strike
           << " T=" << quote.maturity;
        throw Error(ErrorCode::OutOfBounds, os.str());
    }
    auto objective = [&](double v) {
        return black_scholes_call(spot, quote.strike, rate, v, quote.maturity) - price;
    };

    double lo = 0.0;
    double hi = 1.0;
    double f_lo = objective(lo);
    double f_hi = objective(hi);
    for (int i = 0; f_hi < 0.0 && i < 12; ++i) {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = objective(hi);
    }
    if (f_lo > 0.0 || f_hi < 0.0) {
        throw Error(ErrorCode::NoConvergence, "implied vol bracket not found");
    }
    if (f_lo == 0.0) return lo;

    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        objective, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), iters);
    const double v = 0.5 * (a + b);
    if (iters >= 200 || std::abs(objective(v)) > 1e-10 * std::max(1.0, price)) {
        throw Error(ErrorCode::NoConvergence, "implied vol root find did not converge");
    }
    return v;
}

std::complex<double> heston_log_forward_cf(const HestonParams& p, double maturity, std::complex<double> u) {
    using cd = std::complex<double>;
    const cd i(0.0, 1.0);
    const double xi2 = p.xi * p.xi;
    const cd beta = p.kappa - p.rho * p.xi * i * u;
    const cd iu_u2 = i * u + u * u;
    const cd d = std::sqrt(beta * beta + xi2 * iu_u2);
    // beta - d written without cancellation so that xi -> 0 stays accurate
    const cd q = -iu_u2 / (beta + d);
    const cd g = xi2 * q / (beta + d);
    const cd e = std::exp(-d * maturity);
    const cd one_minus_ge = 1.0 - g * e;
    const cd D = q * (1.0 - e) / one_minus_ge;
    cd C = p.kappa * p.theta * q * maturity;
    if (xi2 > 0.0) {
        // log((1 - g e) / (1 - g)) = log1p(w); g is O(xi^2), so the plain logs lose everything as xi -> 0
        const cd w = g * (1.0 - e) / (1.0 - g);
        const cd log1p_w(0.5 * std::log1p(2.0 * w.real() + std::norm(w)), std::atan2(w.imag(), 1.0 + w.real()));
        C -= 2.0 * p.kappa * p.theta / xi2 * log1p_w;
    }
    return std::exp(C + D * p.v0);
}

double heston_call(const HestonParams& p, double strike, double maturity) {
    using cd = std::complex<double>;
    const double df = std::exp(-p.rate * maturity);
    const double forward = p.spot / df;
    const double log_moneyness = std::log(forward / strike);

    auto integrand = [&](double u) {
        const cd phi = heston_log_forward_cf(p, maturity, cd(u, -0.5));
        const cd z = std::exp(cd(0.0, u * log_moneyness)) * phi;
        return z.real() / (u * u + 0.25);
    };

    double error = 0.0;
    double l1 = 0.0;
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, 0.0, std::numeric_limits<double>::infinity(), 20, 1e-13, &error, &l1);
    if (!std::isfinite(integral) || error > 1e-9 * std::max(1.0, std::abs(integral))) {
        std::ostringstream os;
        os << "Heston integral error estimate " << error << " at K=" << strike << " T=" << maturity;
        throw Error(ErrorCode::QuadratureFailure, os.str());
    }
    const double price = df * (forward - std::sqrt(forward * strike) / std::numbers::pi * integral);
    const auto [lower, upper] = call_price_bounds(p.spot, strike, p.rate, maturity);
    return std::clamp(price, lower, upper);
}

double heston_put(const HestonParams& p, double strike, double maturity) {
    return heston_call(p, strike, maturity) - p.spot + strike * std::exp(-p.rate * maturity);
}

}  // namespace lsvpm
