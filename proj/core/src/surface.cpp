#include "lsvpm/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lsvpm/analytic.hpp"
#include "lsvpm/csv.hpp"
#include "lsvpm/errors.hpp"
#include "lsvpm/parallel.hpp"

namespace lsvpm {

namespace {

constexpr std::string_view kSurfaceHeader = "maturity,strike,call_price,implied_vol";

void require_axes(const std::vector<double>& maturities, const std::vector<double>& strikes) {
    if (maturities.empty() || strikes.empty()) {
        throw Error(ErrorCode::Validation, "surface needs nonempty maturity and strike grids");
    }
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        if (!(maturities[i] > 0) || (i > 0 && !(maturities[i] > maturities[i - 1]))) {
            throw Error(ErrorCode::Validation, "maturities must be positive and strictly ascending");
        }
    }
    for (std::size_t j = 0; j < strikes.size(); ++j) {
        if (!(strikes[j] > 0) || (j > 0 && !(strikes[j] > strikes[j - 1]))) {
            throw Error(ErrorCode::Validation, "strikes must be positive and strictly ascending");
        }
    }
}

double implied_vol_or_nan(double price, double maturity, double strike, double spot, double rate) {
    const auto [lower, upper] = call_price_bounds(spot, strike, rate, maturity);
    // Prices numerically on a bound carry no vol information.
    const double tol = 1e-10 * std::max(1.0, spot);
    if (price - lower <= tol || upper - price <= tol) return std::numeric_limits<double>::quiet_NaN();
    return implied_vol(EuropeanQuote{maturity, strike, price, std::nullopt}, spot, rate);
}

}  // namespace

std::vector<double> default_maturities() {
    std::vector<double> t;
    for (int m = 1; m <= 12; ++m) t.push_back(m / 12.0);
    return t;
}

std::vector<double> default_strikes() {
    std::vector<double> k;
    for (int s = 80; s <= 120; ++s) k.push_back(s);
    return k;
}

std::vector<std::string> check_surface(const VolSurface& s, double spot, double rate, double tolerance) {
    std::vector<std::string> out;
    const std::size_t nt = s.maturities.size();
    const std::size_t nk = s.strikes.size();
    try {
        require_axes(s.maturities, s.strikes);
    } catch (const Error& e) {
        out.emplace_back(e.what());
        return out;
    }
    if (s.call_prices.size() != nt * nk) {
        out.emplace_back("price matrix shape does not match axes");
        return out;
    }
    auto where = [&](std::size_t i, std::size_t j) {
        std::ostringstream os;
        os << " at T=" << s.maturities[i] << " K=" << s.strikes[j];
        return os.str();
    };
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t j = 0; j < nk; ++j) {
            const double c = s.price(i, j);
            const auto [lower, upper] = call_price_bounds(spot, s.strikes[j], rate, s.maturities[i]);
            if (!(c >= lower - tolerance && c <= upper + tolerance)) {
                out.push_back("price outside no-arbitrage bounds" + where(i, j));
            }
            if (i > 0 && c < s.price(i - 1, j) - tolerance) out.push_back("calendar arbitrage" + where(i, j));
            if (j > 0 && j + 1 < nk) {
                const double hl = s.strikes[j] - s.strikes[j - 1];
                const double hr = s.strikes[j + 1] - s.strikes[j];
                const double second = 2.0 * ((s.price(i, j + 1) - c) / hr - (c - s.price(i, j - 1)) / hl) / (hl + hr);
                if (second < -tolerance) out.push_back("convexity violation" + where(i, j));
            }
        }
    }
    return out;
}

VolSurface generate_market_surface(const HestonParams& params, const std::vector<double>& maturities,
                                   const std::vector<double>& strikes, unsigned threads) {
    require_valid(validate(params), "HestonParams");
    require_axes(maturities, strikes);
    VolSurface s{maturities, strikes, std::vector<double>(maturities.size() * strikes.size()),
                 std::vector<double>(maturities.size() * strikes.size())};
    parallel_for(s.call_prices.size(), threads, [&](std::size_t idx) {
        const std::size_t i = idx / strikes.size();
        const std::size_t j = idx % strikes.size();
        try {
            const double c = heston_call(params, strikes[j], maturities[i]);
            s.call_prices[idx] = c;
            s.implied_vols[idx] = implied_vol_or_nan(c, maturities[i], strikes[j], params.spot, params.rate);
        } catch (const Error& e) {
            std::ostringstream os;
            os << "surface node (T=" << maturities[i] << ", K=" << strikes[j] << "): " << e.what();
            throw Error(e.code(), os.str());
        }
    });
    return s;
}

VolSurface black_scholes_surface(double spot, double rate, double vol, const std::vector<double>& maturities,
                                 const std::vector<double>& strikes) {
    require_axes(maturities, strikes);
    VolSurface s{maturities, strikes, {}, {}};
    for (double t : maturities) {
        for (double k : strikes) {
            const double c = black_scholes_call(spot, k, rate, vol, t);
            s.call_prices.push_back(c);
            s.implied_vols.push_back(implied_vol_or_nan(c, t, k, spot, rate));
        }
    }
    return s;
}

LocalVolFn LocalVolFn::flat(double vol, double floor, double cap) {
    LocalVolFn f;
    f.is_flat_ = true;
    f.floor_ = floor;
    f.cap_ = cap;
    f.constant_ = std::clamp(vol, floor, cap);
    return f;
}

LocalVolFn::LocalVolFn(std::vector<double> maturities, std::vector<double> strikes, std::vector<double> node_vols,
                       double floor, double cap, DupireDiagnostics diagnostics)
    : maturities_(std::move(maturities)),
      strikes_(std::move(strikes)),
      node_vols_(std::move(node_vols)),
      floor_(floor),
      cap_(cap),
      diagnostics_(std::move(diagnostics)) {
    require_axes(maturities_, strikes_);
    if (node_vols_.size() != maturities_.size() * strikes_.size()) {
        throw Error(ErrorCode::Validation, "local vol node matrix does not match axes");
    }
    if (!(floor_ > 0 && cap_ >= floor_)) throw Error(ErrorCode::Validation, "need 0 < floor <= cap");
    const std::size_t nk = strikes_.size();
    for (std::size_t i = 0; i < maturities_.size(); ++i) {
        slices_.emplace_back(strikes_, std::span<const double>(node_vols_).subspan(i * nk, nk));
    }
    for (const auto& slice : slices_) {
        for (std::size_t k = 0; k + 1 < nk; ++k) {
            // d sigma / dx = s d sigma / ds with s <= right knot on the segment
            lipschitz_log_spot_ = std::max(lipschitz_log_spot_, slice.max_abs_derivative(k) * strikes_[k + 1]);
        }
    }
    for (std::size_t i = 0; i + 1 < slices_.size(); ++i) {
        const double dt = maturities_[i + 1] - maturities_[i];
        double worst = 0.0;
        if (nk == 1) {
            worst = std::abs(node_vol(i + 1, 0) - node_vol(i, 0));
        }
        for (std::size_t k = 0; k + 1 < nk; ++k) {
            const auto a = slices_[i + 1].segment(k);
            const auto b = slices_[i].segment(k);
            worst = std::max(worst, max_abs_cubic(a.a - b.a, a.b - b.b, a.c - b.c, a.d - b.d,
                                                  strikes_[k + 1] - strikes_[k]));
        }
        lipschitz_time_ = std::max(lipschitz_time_, worst / dt);
    }
}

double LocalVolFn::holder_time() const { return std::sqrt(lipschitz_time_ * (cap_ - floor_)); }

double LocalVolFn::operator()(double t, double s) const {
    if (is_flat_) return constant_;
    double v = 0.0;
    if (t <= maturities_.front()) {
        v = slices_.front()(s);
    } else if (t >= maturities_.back()) {
        v = slices_.back()(s);
    } else {
        const auto it = std::upper_bound(maturities_.begin(), maturities_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - maturities_.begin()) - 1;
        const double w = (t - maturities_[i]) / (maturities_[i + 1] - maturities_[i]);
        v = (1.0 - w) * slices_[i](s) + w * slices_[i + 1](s);
    }
    return std::clamp(v, floor_, cap_);
}

namespace {

// Derivative at x[i] of the quadratic through three neighbouring nodes: centred inside the axis,
// one-sided at its ends, a plain difference when the axis has only two nodes.
template <class F>
double derivative(const std::vector<double>& x, std::size_t i, F f) {
    const std::size_t n = x.size();
    if (n == 2) return (f(1) - f(0)) / (x[1] - x[0]);
    const std::size_t a = std::clamp<std::size_t>(i, 1, n - 2) - 1, b = a + 1, c = a + 2;
    const double t = x[i];
    return f(a) * ((t - x[b]) + (t - x[c])) / ((x[a] - x[b]) * (x[a] - x[c])) +
           f(b) * ((t - x[a]) + (t - x[c])) / ((x[b] - x[a]) * (x[b] - x[c])) +
           f(c) * ((t - x[a]) + (t - x[b])) / ((x[c] - x[a]) * (x[c] - x[b]));
}

// dC/dT at (T[i], strike). The time value behaves like exp(-a/T) T^b in the wings and like sqrt(T)
// at the money, so it is differenced as log V against log T; plain differences in T overstate the
// slope badly on a monthly grid at short maturities. The in/out-of-the-money branch is fixed at T[i]
// so V (a call or, by parity, a put) stays smooth and positive across the stencil.
template <class Price>
double maturity_derivative(const std::vector<double>& T, const std::vector<double>& log_t, double strike,
                           const DupireOptions& o, std::size_t i, Price price) {
    auto forward_intrinsic = [&](std::size_t n) { return o.spot - strike * std::exp(-o.rate * T[n]); };
    const bool itm = forward_intrinsic(i) > 0.0;
    auto time_value = [&](std::size_t n) { return price(n) - (itm ? forward_intrinsic(n) : 0.0); };
    const std::size_t lo = T.size() == 2 ? 0 : std::clamp<std::size_t>(i, 1, T.size() - 2) - 1;
    const std::size_t hi = T.size() == 2 ? 1 : lo + 2;
    const double tiny = 1e-12 * o.spot;
    for (std::size_t n = lo; n <= hi; ++n) {
        if (!(time_value(n) > tiny)) return derivative(T, i, price);
    }
    const double dlogv = derivative(log_t, i, [&](std::size_t n) { return std::log(time_value(n)); });
    const double intrinsic_slope = itm ? o.rate * strike * std::exp(-o.rate * T[i]) : 0.0;
    return time_value(i) * dlogv / T[i] + intrinsic_slope;
}

}  // namespace

LocalVolFn dupire_local_vol(const VolSurface& surface, const DupireOptions& o) {
    const std::size_t nt = surface.maturities.size();
    const std::size_t nk = surface.strikes.size();
    if (nt < 2 || nk < 3) {
        throw Error(ErrorCode::Validation, "Dupire needs at least 2 maturities and 3 strikes");
    }
    if (const auto issues = check_surface(surface, o.spot, o.rate); !issues.empty()) {
        throw Error(ErrorCode::Validation, "surface fails arbitrage checks: " + issues.front());
    }
    const auto& T = surface.maturities;
    const auto& K = surface.strikes;
    auto C = [&](std::size_t i, std::size_t j) { return surface.price(i, j); };

    const double denominator_floor = o.denominator_floor_factor * o.spot * o.spot;
    const double var_floor = o.vol_floor * o.vol_floor;
    const double var_cap = o.vol_cap * o.vol_cap;

    DupireDiagnostics diag;
    std::vector<double> local_var(nt * nk, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> valid(nt * nk, 0);

    std::vector<double> log_t(nt);
    for (std::size_t i = 0; i < nt; ++i) log_t[i] = std::log(T[i]);

    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t j = 0; j < nk; ++j) {
            const double dc_dt = maturity_derivative(T, log_t, K[j], o, i, [&](std::size_t n) { return C(n, j); });
            const std::size_t ja = j == 0 ? 0 : j - 1;
            const std::size_t jb = j + 1 == nk ? j : j + 1;
            const double dc_dk = (C(i, jb) - C(i, ja)) / (K[jb] - K[ja]);
            // second difference on the nearest complete three-point stencil
            const std::size_t jc = std::clamp<std::size_t>(j, 1, nk - 2);
            const double hl = K[jc] - K[jc - 1];
            const double hr = K[jc + 1] - K[jc];
            const double d2c =
                2.0 * ((C(i, jc + 1) - C(i, jc)) / hr - (C(i, jc) - C(i, jc - 1)) / hl) / (hl + hr);

            const double numerator = dc_dt + o.rate * K[j] * dc_dk;
            const double denominator = 0.5 * K[j] * K[j] * d2c;
            const std::size_t idx = i * nk + j;
            if (denominator < denominator_floor) {
                diag.degenerate_nodes.emplace_back(i, j);
                local_var[idx] = numerator / denominator_floor;
                continue;
            }
            valid[idx] = 1;
            local_var[idx] = numerator / denominator;
        }
    }

    std::vector<double> node_vols(nt * nk);
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t j = 0; j < nk; ++j) {
            std::size_t src = i * nk + j;
            if (!valid[src]) {
                // nearest valid node in the same maturity row, ties toward the row centre
                std::size_t best = src;
                std::size_t best_dist = std::numeric_limits<std::size_t>::max();
                for (std::size_t jj = 0; jj < nk; ++jj) {
                    if (!valid[i * nk + jj]) continue;
                    const std::size_t dist = jj > j ? jj - j : j - jj;
                    if (dist < best_dist) {
                        best_dist = dist;
                        best = i * nk + jj;
                    }
                }
                src = best;
            }
            const double v = local_var[src];
            const double clamped = std::clamp(std::isfinite(v) ? v : var_floor, var_floor, var_cap);
            if (clamped != v) ++diag.clamped_nodes;
            node_vols[i * nk + j] = std::sqrt(clamped);
        }
    }
    return LocalVolFn(T, K, std::move(node_vols), o.vol_floor, o.vol_cap, std::move(diag));
}

void write_surface_csv(const VolSurface& s, const std::filesystem::path& path, const std::string& header_comment) {
    auto out = csv::open_for_write(path, header_comment);
    out << kSurfaceHeader << '\n';
    for (std::size_t i = 0; i < s.maturities.size(); ++i) {
        for (std::size_t j = 0; j < s.strikes.size(); ++j) {
            out << csv::format(s.maturities[i]) << ',' << csv::format(s.strikes[j]) << ','
                << csv::format(s.price(i, j)) << ',' << csv::format(s.vol(i, j)) << '\n';
        }
    }
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

VolSurface read_surface_csv(const std::filesystem::path& path) {
    const auto rows = csv::read_rows(path, kSurfaceHeader);
    VolSurface s;
    for (const auto& row : rows) {
        if (row.size() != 4) throw Error(ErrorCode::Io, "surface row needs 4 fields in " + path.string());
        const double t = csv::parse_double(row[0]);
        const double k = csv::parse_double(row[1]);
        if (s.maturities.empty() || s.maturities.back() != t) s.maturities.push_back(t);
        if (s.maturities.size() == 1) s.strikes.push_back(k);
        s.call_prices.push_back(csv::parse_double(row[2]));
        s.implied_vols.push_back(csv::parse_double(row[3]));
    }
    const std::size_t expected = s.maturities.size() * s.strikes.size();
    if (s.call_prices.size() != expected) {
        throw Error(ErrorCode::Io, "surface CSV is not a full row-major grid: " + path.string());
    }
    for (std::size_t idx = 0; idx < rows.size(); ++idx) {
        if (csv::parse_double(rows[idx][1]) != s.strikes[idx % s.strikes.size()]) {
            throw Error(ErrorCode::Io, "strike axis differs between maturities in " + path.string());
        }
    }
    require_axes(s.maturities, s.strikes);
    return s;
}

}  // namespace lsvpm
