#pragma once

#include <complex>
#include <optional>

#include "lsvpm/model.hpp"

namespace lsvpm {

struct EuropeanQuote {
    double maturity = 0.0;
    double strike = 0.0;
    double call_price = 0.0;
    std::optional<double> implied_vol;
};

/// Black-Scholes call with flat rate and no dividends. vol = 0 returns the discounted forward intrinsic.
double black_scholes_call(double spot, double strike, double rate, double vol, double maturity);

/// No-arbitrage bounds [max(S - K e^{-rT}, 0), S] of a call price.
struct CallBounds {
    double lower;
    double upper;
};
CallBounds call_price_bounds(double spot, double strike, double rate, double maturity);

/// Inverts black_scholes_call by a bracketed root find. Throws OutOfBounds when the price is
/// not strictly inside its no-arbitrage bounds and NoConvergence when the bracket fails.
double implied_vol(const EuropeanQuote& quote, double spot, double rate);

/// Characteristic function of log(S_T / F) under Heston, F = S e^{rT}.
/// Uses the rotation-free ("little trap") branch so long maturities stay continuous.
std::complex<double> heston_log_forward_cf(const HestonParams& p, double maturity,
                                           std::complex<double> u);

/// Semi-analytic Heston call via a single Fourier integral over the log-forward characteristic
/// function. Throws QuadratureFailure if the adaptive integrator misses its tolerance.
double heston_call(const HestonParams& p, double strike, double maturity);

/// Put from the call by parity: C - S + K e^{-rT}.
double heston_put(const HestonParams& p, double strike, double maturity);

}  // namespace lsvpm
