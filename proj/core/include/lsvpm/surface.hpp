#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lsvpm/interpolation.hpp"
#include "lsvpm/model.hpp"

namespace lsvpm {

/// Call prices and implied vols on a (maturity x strike) grid, stored row-major by maturity.
/// Implied vols are NaN where the price sits numerically on a no-arbitrage bound.
struct VolSurface {
    std::vector<double> maturities;
    std::vector<double> strikes;
    std::vector<double> call_prices;
    std::vector<double> implied_vols;

    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const { return i * strikes.size() + j; }
    [[nodiscard]] double price(std::size_t i, std::size_t j) const { return call_prices[index(i, j)]; }
    [[nodiscard]] double vol(std::size_t i, std::size_t j) const { return implied_vols[index(i, j)]; }
};

/// Monthly maturities 1/12 .. 1 and integer strikes 80 .. 120.
std::vector<double> default_maturities();
std::vector<double> default_strikes();

/// Axis, no-arbitrage, calendar and convexity violations (empty when the surface is clean).
std::vector<std::string> check_surface(const VolSurface& surface, double spot, double rate,
                                       double tolerance = 1e-8);

VolSurface generate_market_surface(const HestonParams& params, const std::vector<double>& maturities,
                                   const std::vector<double>& strikes, unsigned threads = 1);

/// Surface built from Black-Scholes prices at one flat vol (test fixture and sanity input).
VolSurface black_scholes_surface(double spot, double rate, double vol, const std::vector<double>& maturities,
                                 const std::vector<double>& strikes);

struct DupireOptions {
    double rate = 0.0;
    double spot = 100.0;
    double vol_floor = 0.01;
    double vol_cap = 2.0;
    /// Nodes with (K^2/2) d2C/dK2 below this factor times spot^2 are degenerate.
    double denominator_floor_factor = 1e-8;
};

struct DupireDiagnostics {
    /// (maturity index, strike index) of nodes whose denominator fell below the floor.
    std::vector<std::pair<std::size_t, std::size_t>> degenerate_nodes;
    /// Nodes whose local variance was clamped into [floor^2, cap^2].
    std::size_t clamped_nodes = 0;
};

/// sigma_Dup(t, s): cubic spline in s per maturity slice, linear in t between slices, flat
/// extrapolation in both directions, and every evaluation clamped to [floor, cap].
class LocalVolFn {
public:
    static LocalVolFn flat(double vol, double floor = 0.01, double cap = 2.0);

    LocalVolFn(std::vector<double> maturities, std::vector<double> strikes, std::vector<double> node_vols,
               double floor, double cap, DupireDiagnostics diagnostics = {});

    [[nodiscard]] double operator()(double t, double s) const;

    [[nodiscard]] double floor() const { return floor_; }
    [[nodiscard]] double cap() const { return cap_; }
    [[nodiscard]] const std::vector<double>& maturities() const { return maturities_; }
    [[nodiscard]] const std::vector<double>& strikes() const { return strikes_; }
    [[nodiscard]] double node_vol(std::size_t i, std::size_t j) const { return node_vols_[i * strikes_.size() + j]; }
    [[nodiscard]] const DupireDiagnostics& diagnostics() const { return diagnostics_; }

    /// Bound on |d sigma(t, e^x) / dx| over the whole domain (exact on the spline pieces).
    [[nodiscard]] double lipschitz_log_spot() const { return lipschitz_log_spot_; }
    /// Bound on |d sigma / dt| between slices.
    [[nodiscard]] double lipschitz_time() const { return lipschitz_time_; }
    /// Half-Hoelder constant in t: min(L_t |dt|, cap - floor) <= sqrt(L_t (cap - floor)) |dt|^{1/2}.
    [[nodiscard]] double holder_time() const;

private:
    LocalVolFn() = default;

    std::vector<double> maturities_;
    std::vector<double> strikes_;
    std::vector<double> node_vols_;
    std::vector<NaturalCubicSpline> slices_;
    double floor_ = 0.01;
    double cap_ = 2.0;
    double constant_ = 0.0;
    bool is_flat_ = false;
    double lipschitz_log_spot_ = 0.0;
    double lipschitz_time_ = 0.0;
    DupireDiagnostics diagnostics_;
};

/// Finite-difference Dupire on the price grid:
/// sigma^2 = (dC/dT + r K dC/dK) / ((K^2/2) d2C/dK2), central in the interior, one-sided at edges.
/// Degenerate nodes take the value of the nearest valid node in their maturity row.
LocalVolFn dupire_local_vol(const VolSurface& surface, const DupireOptions& options);

void write_surface_csv(const VolSurface& surface, const std::filesystem::path& path,
                       const std::string& header_comment = {});
VolSurface read_surface_csv(const std::filesystem::path& path);

}  // namespace lsvpm
