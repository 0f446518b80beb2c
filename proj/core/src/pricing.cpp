#include "lsvpm/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lsvpm/csv.hpp"
#include "lsvpm/errors.hpp"
#include "lsvpm/parallel.hpp"

namespace lsvpm {

namespace {

std::size_t locate(std::span<const double> axis, double value, const char* name) {
    const auto it = std::find_if(axis.begin(), axis.end(), [value](double a) { return std::abs(a - value) <= 1e-9; });
    if (it == axis.end()) {
        std::ostringstream os;
        os << name << ' ' << value << " is not on the market grid";
        throw Error(ErrorCode::GridMismatch, os.str());
    }
    return static_cast<std::size_t>(it - axis.begin());
}

double market_price_at(const VolSurface& market, const PriceRow& row) {
    const auto i = locate(market.maturities, row.maturity, "maturity");
    const auto j = locate(market.strikes, row.strike, "strike");
    return market.price(i, j);
}

}  // namespace

PriceReport price_calls(const Trajectory& trajectory, std::span<const double> strikes, double rate,
                        unsigned threads) {
    const auto& s = trajectory.terminal.xs;
    if (s.empty()) throw Error(ErrorCode::Validation, "price_calls needs a non-empty terminal ensemble");
    const double horizon = trajectory.grid.horizon;
    const double df = std::exp(-rate * horizon);
    const double n = static_cast<double>(s.size());

    PriceReport report;
    report.rows.resize(strikes.size());
    parallel_for(strikes.size(), threads, [&](std::size_t k) {
        const double strike = strikes[k];
        double mean = 0.0;
        for (double v : s) mean += std::max(v - strike, 0.0);
        mean /= n;
        double var = 0.0;
        for (double v : s) {
            const double d = std::max(v - strike, 0.0) - mean;
            var += d * d;
        }
        var = s.size() > 1 ? var / (n - 1.0) : 0.0;
        report.rows[k] = {horizon, strike, df * mean, std::numeric_limits<double>::quiet_NaN(),
                          df * std::sqrt(var / n)};
    });
    return report;
}

double rmse(std::span<const PriceRow> rows, const VolSurface& market) {
    if (rows.empty()) throw Error(ErrorCode::GridMismatch, "no rows to compare");
    double acc = 0.0;
    for (const auto& row : rows) {
        const double d = row.model_price - market_price_at(market, row);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(rows.size()));
}

void attach_market(PriceReport& report, const VolSurface& market) {
    for (auto& row : report.rows) row.market_price = market_price_at(market, row);
    report.rmse = rmse(report.rows, market);
}

void write_price_report_csv(const PriceReport& report, const std::filesystem::path& path,
                            const std::string& header_comment) {
    auto out = csv::open_for_write(path, header_comment);
    out << "maturity,strike,model_price,market_price,std_err\n";
    for (const auto& r : report.rows) {
        out << csv::format(r.maturity) << ',' << csv::format(r.strike) << ',' << csv::format(r.model_price) << ','
            << csv::format(r.market_price) << ',' << csv::format(r.std_err) << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace lsvpm
