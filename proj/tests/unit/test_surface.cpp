#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "lsvpm/analytic.hpp"
#include "lsvpm/errors.hpp"
#include "lsvpm/surface.hpp"
#include "properties.hpp"

using namespace lsvpm;

namespace {

const VolSurface& market_surface() {
    static const VolSurface s = generate_market_surface(HestonParams::market(), default_maturities(), default_strikes());
    return s;
}

}  // namespace

TEST(Grids, DefaultAxes) {
    const auto t = default_maturities();
    const auto k = default_strikes();
    ASSERT_EQ(t.size(), 12u);
    ASSERT_EQ(k.size(), 41u);
    EXPECT_DOUBLE_EQ(t.front(), 1.0 / 12);
    EXPECT_DOUBLE_EQ(t.back(), 1.0);
    EXPECT_DOUBLE_EQ(k.front(), 80.0);
    EXPECT_DOUBLE_EQ(k.back(), 120.0);
}

TEST(MarketSurface, PricesComeFromTheHestonPricer) {
    const auto& s = market_surface();
    ASSERT_EQ(s.call_prices.size(), 12u * 41u);
    const auto p = HestonParams::market();
    EXPECT_DOUBLE_EQ(s.price(11, 20), heston_call(p, 100.0, 1.0));
    EXPECT_DOUBLE_EQ(s.price(3, 7), heston_call(p, 87.0, 4.0 / 12));
    EXPECT_TRUE(check_surface(s, 100, 0).empty());
}

TEST(MarketSurface, ImpliedVolsRepriceTheNodes) {
    const auto& s = market_surface();
    for (std::size_t i = 0; i < s.maturities.size(); ++i) {
        for (std::size_t j = 0; j < s.strikes.size(); ++j) {
            if (std::isnan(s.vol(i, j))) continue;
            EXPECT_NEAR(black_scholes_call(100, s.strikes[j], 0, s.vol(i, j), s.maturities[i]), s.price(i, j), 1e-9);
        }
    }
    // at the money the smile sits near sqrt(v0) at short maturities
    EXPECT_NEAR(s.vol(0, 20), std::sqrt(HestonParams::market().v0), 0.01);
}

TEST(MarketSurface, DeterministicVarianceHasFlatVol) {
    const double theta = 0.04;
    const HestonParams p{theta, 1.0, theta, 1e-8, 0.0, 0.0, 100.0};
    const auto s = generate_market_surface(p, {1.0}, {100.0});
    EXPECT_NEAR(s.vol(0, 0), std::sqrt(theta), 1e-6);
}

TEST(MarketSurface, RejectsBadAxes) {
    EXPECT_THROW(generate_market_surface(HestonParams::market(), {1.0}, {}), Error);
    EXPECT_THROW(generate_market_surface(HestonParams::market(), {0.5, 0.25}, {100.0}), Error);
}

TEST(CheckSurface, FlagsCalendarAndConvexityViolations) {
    auto s = black_scholes_surface(100, 0, 0.2, {0.5, 1.0}, {90, 100, 110});
    EXPECT_TRUE(check_surface(s, 100, 0).empty());
    auto bent = s;
    bent.call_prices[bent.index(1, 1)] += 5.0;  // breaks convexity in strike
    EXPECT_FALSE(check_surface(bent, 100, 0).empty());
    auto calendar = s;
    calendar.call_prices[calendar.index(1, 0)] = calendar.price(0, 0) - 0.5;
    EXPECT_FALSE(check_surface(calendar, 100, 0).empty());
}

TEST(Dupire, FlatSurfaceGivesFlatLocalVol) {
    const auto r = check::dupire_on_flat_surface();
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Dupire, FlatSurfaceWithRate) {
    const double r = 0.03;
    const auto s = black_scholes_surface(100, r, 0.2, default_maturities(), default_strikes());
    DupireOptions o;
    o.rate = r;
    const auto lv = dupire_local_vol(s, o);
    for (std::size_t i = 1; i + 1 < s.maturities.size(); ++i) {
        for (std::size_t j = 1; j + 1 < s.strikes.size(); ++j) EXPECT_NEAR(lv.node_vol(i, j), 0.2, 0.005);
    }
}

TEST(Dupire, FirstSliceNearTheMoney) {
    // one-sided in maturity, still close on a flat surface
    const auto s = black_scholes_surface(100, 0, 0.2, default_maturities(), default_strikes());
    const auto lv = dupire_local_vol(s, DupireOptions{});
    for (std::size_t j = 15; j <= 25; ++j) EXPECT_NEAR(lv.node_vol(0, j), 0.2, 0.01);
}

TEST(Dupire, InterpolatesNodesAndExtrapolatesFlat) {
    const auto lv = dupire_local_vol(market_surface(), DupireOptions{});
    for (std::size_t i = 0; i < lv.maturities().size(); ++i) {
        for (std::size_t j = 0; j < lv.strikes().size(); ++j) {
            EXPECT_NEAR(lv(lv.maturities()[i], lv.strikes()[j]), lv.node_vol(i, j), 1e-12);
        }
        const double t = lv.maturities()[i];
        EXPECT_DOUBLE_EQ(lv(t, 10.0), lv(t, 80.0));
        EXPECT_DOUBLE_EQ(lv(t, 60.0), lv(t, 80.0));
        EXPECT_DOUBLE_EQ(lv(t, 500.0), lv(t, 120.0));
    }
    EXPECT_DOUBLE_EQ(lv(0.0, 100.0), lv(1.0 / 12, 100.0));
    EXPECT_DOUBLE_EQ(lv(3.0, 100.0), lv(1.0, 100.0));
}

TEST(Dupire, LinearBetweenSlices) {
    const auto lv = dupire_local_vol(market_surface(), DupireOptions{});
    const double t0 = lv.maturities()[4], t1 = lv.maturities()[5];
    const double mid = lv(0.5 * (t0 + t1), 103.0);
    EXPECT_NEAR(mid, 0.5 * (lv(t0, 103.0) + lv(t1, 103.0)), 1e-12);
}

TEST(Dupire, EvaluationsStayInsideTheClamp) {
    const auto lv = dupire_local_vol(market_surface(), DupireOptions{});
    for (double t = 0.0; t <= 1.5; t += 0.01) {
        for (double s = 1.0; s <= 400.0; s += 1.7) {
            const double v = lv(t, s);
            EXPECT_GE(v, lv.floor());
            EXPECT_LE(v, lv.cap());
        }
    }
    EXPECT_GT(lv.lipschitz_log_spot(), 0.0);
}

TEST(Dupire, MarketLocalVolIsNearTheVarianceLevel) {
    const auto lv = dupire_local_vol(market_surface(), DupireOptions{});
    // sqrt of the long-run variance is about 0.117; the one-year local vol at the money is close to it
    EXPECT_NEAR(lv(1.0, 100.0), std::sqrt(HestonParams::market().theta), 0.03);
}

TEST(Dupire, DegenerateNodesAreReportedAndFilled) {
    // Deep in-the-money strikes at a tiny vol have no curvature left.
    const auto s = black_scholes_surface(100, 0, 0.02, {0.5, 1.0}, {40, 50, 60, 100, 105});
    const auto lv = dupire_local_vol(s, DupireOptions{});
    EXPECT_FALSE(lv.diagnostics().degenerate_nodes.empty());
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            EXPECT_TRUE(std::isfinite(lv.node_vol(i, j)));
            EXPECT_GE(lv.node_vol(i, j), lv.floor());
        }
    }
}

TEST(Dupire, RejectsTooSmallGrids) {
    const auto s = black_scholes_surface(100, 0, 0.2, {1.0}, {90, 100, 110});
    EXPECT_THROW(dupire_local_vol(s, DupireOptions{}), Error);
}

TEST(LocalVolFn, FlatIsConstant) {
    const auto lv = LocalVolFn::flat(0.3);
    EXPECT_DOUBLE_EQ(lv(0.0, 1.0), 0.3);
    EXPECT_DOUBLE_EQ(lv(9.0, 1e6), 0.3);
    EXPECT_DOUBLE_EQ(lv.lipschitz_log_spot(), 0.0);
}

TEST(SurfaceCsv, RoundTripIsBitStable) {
    const auto path = std::filesystem::temp_directory_path() / "lsvpm_surface_roundtrip.csv";
    write_surface_csv(market_surface(), path, "lsvpm test");
    const auto back = read_surface_csv(path);
    EXPECT_EQ(back.maturities, market_surface().maturities);
    EXPECT_EQ(back.strikes, market_surface().strikes);
    EXPECT_EQ(back.call_prices, market_surface().call_prices);
    for (std::size_t k = 0; k < back.implied_vols.size(); ++k) {
        const double a = back.implied_vols[k], b = market_surface().implied_vols[k];
        EXPECT_TRUE((std::isnan(a) && std::isnan(b)) || a == b);
    }
    std::filesystem::remove(path);
}

TEST(SurfaceCsv, MissingFileIsAnIoError) {
    try {
        read_surface_csv("/nonexistent/surface.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
    }
}
