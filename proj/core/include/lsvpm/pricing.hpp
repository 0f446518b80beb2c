#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lsvpm/engine.hpp"
#include "lsvpm/surface.hpp"

namespace lsvpm {

struct PriceRow {
    double maturity = 0.0;
    double strike = 0.0;
    double model_price = 0.0;
    double market_price = 0.0;  // NaN until attached to a market surface
    double std_err = 0.0;
};

struct PriceReport {
    std::vector<PriceRow> rows;
    /// Filled by attach_market.
    double rmse = 0.0;
};

/// Discounted mean payoff e^{-rT} mean((S_T - K)^+) at the trajectory horizon, with its standard error.
PriceReport price_calls(const Trajectory& trajectory, std::span<const double> strikes, double rate,
                        unsigned threads = 1);

/// sqrt(mean (model - market)^2) over the rows. Every row must sit on a node of the market
/// surface (to 1e-9 in both coordinates); throws GridMismatch otherwise.
double rmse(std::span<const PriceRow> rows, const VolSurface& market);

/// Copies market prices into the rows and stores the aggregate RMSE.
void attach_market(PriceReport& report, const VolSurface& market);

void write_price_report_csv(const PriceReport& report, const std::filesystem::path& path,
                            const std::string& header_comment = {});

}  // namespace lsvpm
