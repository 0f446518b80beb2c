#include "properties.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "generators.hpp"
#include "lsvpm/analytic.hpp"
#include "lsvpm/coefficients.hpp"
#include "lsvpm/engine.hpp"
#include "lsvpm/errors.hpp"
#include "lsvpm/kernel.hpp"
#include "lsvpm/surface.hpp"
#include "lsvpm/wasserstein.hpp"
#include "oracles.hpp"

namespace lsvpm::check {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

PropertyResult result(std::string name, bool passed, std::string detail) {
    return {std::move(name), passed, std::move(detail), 0.0};
}

constexpr KernelFamily kFamilies[] = {KernelFamily::Gaussian, KernelFamily::Quartic, KernelFamily::Epanechnikov};

// g(y) = 1 + tanh(y) / 2: bounded by 3/2, Lipschitz 1/2.
GFunction bounded_g() {
    return GFunction::custom([](double y) { return 1.0 + 0.5 * std::tanh(y); }, GBounds{1.5, 0.5});
}

const LocalVolFn& market_local_vol() {
    static const LocalVolFn lv = [] {
        const auto p = HestonParams::market();
        const auto s = generate_market_surface(p, default_maturities(), default_strikes());
        return dupire_local_vol(s, DupireOptions{});
    }();
    return lv;
}

}  // namespace

PropertyResult timed(const std::function<PropertyResult()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    PropertyResult r;
    try {
        r = check();
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("threw: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

PropertyResult kernel_normalization_and_symmetry() {
    using boost::math::quadrature::gauss_kronrod;
    double worst_mass = 0.0;
    bool symmetric = true;
    Gen gen(10);
    for (auto family : kFamilies) {
        const double radius = family == KernelFamily::Gaussian ? 40.0 : 1.0;
        for (double eps : {0.01, 1.0, 100.0}) {
            const KernelSpec spec{family, eps, 0.0};
            auto f = [&](double u) { return mollifier(spec, u); };
            // Split at 0 so the compact kernels are smooth on each piece.
            const double mass = gauss_kronrod<double, 61>::integrate(f, -radius * eps, 0.0, 15, 1e-13) +
                                gauss_kronrod<double, 61>::integrate(f, 0.0, radius * eps, 15, 1e-13);
            worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
            for (int k = 0; k < 200; ++k) {
                const double u = gen.uniform(-3.0, 3.0) * eps;
                if (mollifier(spec, u) != mollifier(spec, -u)) symmetric = false;
            }
        }
    }
    return result("kernel normalization and symmetry", worst_mass <= 1e-8 && symmetric,
                  "max |int K - 1| = " + fmt(worst_mass) + (symmetric ? ", symmetric" : ", asymmetric value found"));
}

PropertyResult kernel_floor_and_bound(std::size_t ensembles, std::uint64_t seed) {
    Gen gen(seed);
    std::size_t floor_violations = 0, bound_violations = 0, nonfinite = 0;
    double worst_excess = 0.0;
    for (std::size_t k = 0; k < ensembles; ++k) {
        const std::size_t n = gen.integer(1, 64);
        const auto e = gen.ensemble(n, -3.0, 3.0, 0.0, 2.0);
        std::vector<double> g2(n);
        std::transform(e.ys.begin(), e.ys.end(), g2.begin(), [](double y) { return y * y; });
        const KernelSpec spec{gen.family(), gen.scale(0.01, 10.0), gen.scale(1e-6, 1.0)};
        const KernelEstimator raw(e.xs, g2, spec, Normalization::RawSum);
        const KernelEstimator avg(e.xs, g2, spec, Normalization::MeasureAverage);
        const double a3 = kernel_constants(spec.family).a3;
        for (int q = 0; q < 5; ++q) {
            const double x = gen.uniform(-4.0, 4.0);
            const auto s = raw.sums(x);
            if (!(s.weight >= 0.0) || !(s.weight + spec.delta >= spec.delta)) ++floor_violations;
            const double r = raw.ratio(x);
            if (!std::isfinite(r) || !(r > 0.0)) ++nonfinite;
            const auto m = avg.sums(x);
            worst_excess = std::max(worst_excess, m.weight - a3);
            if (m.weight + spec.delta > a3 + spec.delta) ++bound_violations;
        }
    }
    return result("kernel floor and measure-averaged bound",
                  floor_violations == 0 && bound_violations == 0 && nonfinite == 0,
                  std::to_string(ensembles) + " ensembles, floor violations " + std::to_string(floor_violations) +
                      ", bound violations " + std::to_string(bound_violations) + ", non-finite ratios " +
                      std::to_string(nonfinite) + ", max E[K] - A3 = " + fmt(worst_excess));
}

PropertyResult kernel_measure_lipschitz(std::size_t pairs, std::uint64_t seed) {
    Gen gen(seed);
    const GFunction g = bounded_g();
    std::size_t violations = 0;
    double worst_ratio = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::size_t n = gen.integer(1, 6);
        const double spread = gen.uniform(0.1, 2.0);
        const EmpiricalMeasure mu = gen.measure(n, spread);
        EmpiricalMeasure nu;
        if (k % 2 == 0) {
            nu = gen.measure(n, spread);
        } else {
            // Nearby measure: small W2 is where a loose constant would show.
            const double h = gen.scale(1e-6, 0.1);
            nu = mu;
            for (auto& a : nu.atoms) a = {a[0] + gen.normal(0.0, h), a[1] + gen.normal(0.0, h)};
        }
        const KernelFamily family = gen.family();
        const double eps = gen.scale(0.05, 5.0);
        const double x1 = gen.normal(0.0, spread);
        const auto kc = kernel_constants(family);
        const auto cert = LipschitzCertificate::compute(1.5, 1.0, kc.a3, 0.5, 0.0, kc.lk, eps, 1.0);
        auto expectation = [&](const EmpiricalMeasure& m) {
            double s = 0.0;
            for (const auto& a : m.atoms) {
                const double gy = g(a[1]);
                s += gy * gy * kernel_value(family, (a[0] - x1) / eps);
            }
            return s / static_cast<double>(m.atoms.size());
        };
        const double lhs = std::abs(expectation(mu) - expectation(nu));
        const double w2 = w2_2d_small(mu, nu, AssignmentMethod::Exhaustive);
        const double rhs = cert.m1 / eps * w2;
        if (lhs > rhs * (1.0 + 1e-12) + 1e-15) ++violations;
        if (rhs > 0.0) worst_ratio = std::max(worst_ratio, lhs / rhs);
    }
    return result("kernel expectation Lipschitz in W2", violations == 0,
                  std::to_string(pairs) + " pairs, violations " + std::to_string(violations) +
                      ", max lhs/rhs = " + fmt(worst_ratio));
}

PropertyResult drift_is_minus_half_sigma_squared(std::size_t samples, std::uint64_t seed) {
    Gen gen(seed);
    std::size_t mismatches = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const RegularisedCoeffs c{k % 2 == 0 ? market_local_vol() : LocalVolFn::flat(gen.uniform(0.05, 0.6)),
                                  GFunction(k % 3 == 0 ? GFunction::Kind::Identity : GFunction::Kind::Exp),
                                  KernelSpec{gen.family(), gen.scale(0.01, 1.0), gen.scale(1e-6, 1.0)}};
        const auto e = gen.ensemble(gen.integer(1, 20), 4.3, 4.9, -1.0, 1.0);
        const double t = gen.uniform(0.0, 1.0), x = gen.uniform(4.3, 4.9), y = gen.uniform(-1.0, 1.0);
        const auto dd = regularised_coeffs(c, t, x, y, e);
        const double s = sigma_tilde(c, t, x, y, e);
        if (dd.drift != -0.5 * dd.diffusion * dd.diffusion || b_tilde(c, t, x, y, e) != -0.5 * s * s) ++mismatches;
    }
    return result("drift equals -sigma^2/2", mismatches == 0,
                  std::to_string(samples) + " evaluations, mismatches " + std::to_string(mismatches));
}

PropertyResult binned_matches_naive(std::size_t n, std::uint64_t seed) {
    Gen gen(seed);
    double worst = 0.0;
    for (auto family : kFamilies) {
        for (double eps : {0.01, 0.1, 1.0}) {
            ParticleEnsemble e;
            for (std::size_t i = 0; i < n; ++i) {
                e.xs.push_back(gen.normal(100.0, 5.0));
                e.ys.push_back(gen.uniform(0.0, 0.05));
            }
            const KernelEstimator est(e.xs, e.ys, KernelSpec{family, eps, 1e-5});
            for (double x : e.xs) {
                const double a = est.ratio(x, KernelBackend::Naive);
                const double b = est.ratio(x, KernelBackend::Binned);
                worst = std::max(worst, std::abs(a - b) / std::abs(a));
            }
        }
    }
    return result("binned backend matches naive", worst <= 1e-6,
                  "N = " + std::to_string(n) + ", max relative error " + fmt(worst));
}

PropertyResult engine_determinism_and_exchangeability(std::uint64_t seed) {
    Gen gen(seed);
    const std::size_t n = 24;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen.engine());

    bool deterministic = true, exchangeable = true;

    const SimGrid grid{1.0, 12, n, seed};
    const KernelSpec kernel{KernelFamily::Gaussian, 2.0, 1e-5};
    HestonLsvOptions ho;
    ho.backend = KernelBackend::Naive;
    const auto a = simulate_heston_lsv(market_local_vol(), kernel, HestonParams::modified(), grid, ho);
    const auto b = simulate_heston_lsv(market_local_vol(), kernel, HestonParams::modified(), grid, ho);
    deterministic = deterministic && a.terminal.xs == b.terminal.xs && a.terminal.ys == b.terminal.ys;
    HestonLsvOptions hp = ho;
    hp.stream_ids.assign(perm.begin(), perm.end());
    const auto c = simulate_heston_lsv(market_local_vol(), kernel, HestonParams::modified(), grid, hp);
    for (std::size_t i = 0; i < n; ++i) {
        if (c.terminal.xs[i] != a.terminal.xs[perm[i]] || c.terminal.ys[i] != a.terminal.ys[perm[i]]) {
            exchangeable = false;
        }
    }

    const RegularisedCoeffs coeffs{market_local_vol(), GFunction(GFunction::Kind::Exp),
                                   KernelSpec{KernelFamily::Gaussian, 0.05, 1e-5}};
    const OUParams ou{1.0, 0.0, 0.3, -0.5};
    const auto x0 = gen.points(n, std::log(95.0), std::log(105.0));
    const auto y0 = gen.points(n, -0.5, 0.5);
    std::vector<double> px0(n), py0(n);
    for (std::size_t i = 0; i < n; ++i) {
        px0[i] = x0[perm[i]];
        py0[i] = y0[perm[i]];
    }
    LogMvOptions lo;
    lo.backend = KernelBackend::Naive;
    const auto la = simulate_log_mv(coeffs, ou, grid, x0, y0, lo);
    const auto lb = simulate_log_mv(coeffs, ou, grid, x0, y0, lo);
    deterministic = deterministic && la.terminal.xs == lb.terminal.xs && la.terminal.ys == lb.terminal.ys;
    LogMvOptions lp = lo;
    lp.stream_ids.assign(perm.begin(), perm.end());
    const auto lc = simulate_log_mv(coeffs, ou, grid, px0, py0, lp);
    for (std::size_t i = 0; i < n; ++i) {
        if (lc.terminal.xs[i] != la.terminal.xs[perm[i]] || lc.terminal.ys[i] != la.terminal.ys[perm[i]]) {
            exchangeable = false;
        }
    }
    return result("engine determinism and exchangeability", deterministic && exchangeable,
                  std::string(deterministic ? "bit-identical reruns" : "reruns differ") +
                      (exchangeable ? ", permutation commutes with the run" : ", permutation changed values"));
}

PropertyResult full_truncation_nonnegative(std::uint64_t seed) {
    // 2 kappa theta far below xi^2, so V crosses zero often.
    const HestonParams p{0.01, 0.5, 0.01, 1.0, -0.5, 0.0, 100.0};
    const SimGrid grid{1.0, 50, 200, seed};
    std::size_t bad = 0, negative_seen = 0, steps = 0;
    HestonLsvOptions o;
    o.observer = [&](const StepRecord& r) {
        ++steps;
        for (std::size_t i = 0; i < r.frozen.size(); ++i) {
            if (r.frozen.ys[i] < 0.0) ++negative_seen;
            if (std::isnan(r.frozen.ys[i]) || !std::isfinite(r.diffusion[i]) || r.diffusion[i] < 0.0) ++bad;
        }
    };
    const auto t = simulate_heston_lsv(LocalVolFn::flat(0.1), KernelSpec{KernelFamily::Gaussian, 2.0, 1e-5}, p,
                                       grid, o);
    for (double v : t.terminal.ys) {
        if (std::isnan(v)) ++bad;
    }
    return result("full truncation keeps the square root argument nonnegative",
                  bad == 0 && negative_seen > 0 && t.truncation_events == negative_seen,
                  std::to_string(steps) + " steps, " + std::to_string(negative_seen) +
                      " negative variances entered as 0, bad diffusion values " + std::to_string(bad));
}

PropertyResult dupire_on_flat_surface() {
    const auto s = black_scholes_surface(100.0, 0.0, 0.2, default_maturities(), default_strikes());
    const auto lv = dupire_local_vol(s, DupireOptions{});
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < s.maturities.size(); ++i) {
        for (std::size_t j = 1; j + 1 < s.strikes.size(); ++j) {
            worst = std::max(worst, std::abs(lv.node_vol(i, j) - 0.2));
        }
    }
    return result("Dupire on a flat Black-Scholes surface", worst <= 0.005,
                  "max interior |sigma - 0.2| = " + fmt(worst));
}

PropertyResult put_call_parity() {
    const auto p = HestonParams::market();
    double worst = 0.0;
    for (double t : default_maturities()) {
        for (double k : default_strikes()) {
            const double put = heston_put(p, k, t);
            const double call = heston_call(p, k, t);
            const auto gp = heston_gil_pelaez(p, k, t);
            // Parity of the library put, and agreement of both legs with a directly priced put.
            worst = std::max({worst, std::abs(call - put - (p.spot - k * std::exp(-p.rate * t))),
                              std::abs(put - gp.put), std::abs(call - gp.call)});
        }
    }
    return result("put-call parity", worst <= 1e-8, "max deviation " + fmt(worst) + " over the 12 x 41 grid");
}

PropertyResult wasserstein_metric_axioms(std::size_t triples, std::uint64_t seed) {
    Gen gen(seed);
    double worst = 0.0;
    bool bound_ok = true;
    for (std::size_t k = 0; k < triples; ++k) {
        const std::size_t n = gen.integer(1, 6);
        const auto a = gen.measure(n, 1.0), b = gen.measure(n, 1.0), c = gen.measure(n, 1.0);
        const double ab = w2_2d_small(a, b), ba = w2_2d_small(b, a), ac = w2_2d_small(a, c),
                     bc = w2_2d_small(b, c);
        worst = std::max({worst, w2_2d_small(a, a), std::abs(ab - ba), ac - (ab + bc)});
        worst = std::max(worst, std::abs(ab - w2_2d_small(a, b, AssignmentMethod::Hungarian)));

        const Point2 shift{gen.normal(), gen.normal()};
        auto moved = a;
        for (auto& p : moved.atoms) p = {p[0] + shift[0], p[1] + shift[1]};
        worst = std::max(worst, std::abs(w2_2d_small(a, moved) - std::hypot(shift[0], shift[1])));

        const double s = gen.uniform(-3.0, 3.0);
        auto sa = a, sb = b;
        for (auto& p : sa.atoms) p = {s * p[0], s * p[1]};
        for (auto& p : sb.atoms) p = {s * p[0], s * p[1]};
        worst = std::max(worst, std::abs(w2_2d_small(sa, sb) - std::abs(s) * ab));

        if (index_coupling_cost(a, b) < ab - 1e-12) bound_ok = false;

        std::vector<double> u(n), v(n);
        EmpiricalMeasure ua, va;
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = a.atoms[i][0];
            v[i] = b.atoms[i][0];
            ua.atoms.push_back({u[i], 0.0});
            va.atoms.push_back({v[i], 0.0});
        }
        worst = std::max(worst, std::abs(w2_1d(u, v) - w2_2d_small(ua, va)));
    }
    return result("W2 metric axioms", worst <= 1e-12 && bound_ok,
                  std::to_string(triples) + " triples, max defect " + fmt(worst) +
                      (bound_ok ? "" : ", index coupling fell below W2"));
}

std::vector<std::function<PropertyResult()>> property_suite() {
    return {
        [] { return kernel_normalization_and_symmetry(); },
        [] { return kernel_floor_and_bound(); },
        [] { return kernel_measure_lipschitz(); },
        [] { return drift_is_minus_half_sigma_squared(); },
        [] { return binned_matches_naive(); },
        [] { return engine_determinism_and_exchangeability(); },
        [] { return full_truncation_nonnegative(); },
        [] { return dupire_on_flat_surface(); },
        [] { return put_call_parity(); },
        [] { return wasserstein_metric_axioms(); },
    };
}

PropertyResult lipschitz_within_certificate(double epsilon, double delta, std::size_t probes, std::uint64_t seed) {
    Gen gen(seed);
    const RegularisedCoeffs c{market_local_vol(), bounded_g(), KernelSpec{KernelFamily::Gaussian, epsilon, delta},
                              Normalization::MeasureAverage};
    const double x_mid = std::log(100.0);
    std::vector<LipschitzProbe> grid;
    grid.reserve(probes);
    auto signed_step = [&](double lo, double hi) { return (gen.integer(0, 1) ? 1.0 : -1.0) * gen.scale(lo, hi); };
    for (std::size_t k = 0; k < probes; ++k) {
        LipschitzProbe p;
        p.t = gen.uniform(0.0, 0.9);
        p.x = x_mid + gen.uniform(-0.3, 0.3);
        p.y = gen.uniform(-2.0, 2.0);
        p.dx = signed_step(1e-7, 0.1);
        p.dy = signed_step(1e-7, 0.5);
        p.dt = gen.scale(1e-7, 0.1);
        const std::size_t n = gen.integer(2, 6);
        p.ensemble = gen.ensemble(n, x_mid - 0.3, x_mid + 0.3, -2.0, 2.0);
        // Keep some atoms near x so the kernel term is active at small bandwidths.
        p.ensemble.xs[0] = p.x + gen.normal(0.0, epsilon);
        const double h = gen.scale(1e-6, 0.1);
        p.perturbed = p.ensemble;
        for (std::size_t i = 0; i < n; ++i) {
            p.perturbed.xs[i] += gen.normal(0.0, h);
            p.perturbed.ys[i] += gen.normal(0.0, h);
        }
        grid.push_back(std::move(p));
    }
    const auto m = empirical_lipschitz(c, grid);
    const double l = m.certificate.l;
    return result("empirical Lipschitz within certificate (eps " + fmt(epsilon) + ", delta " + fmt(delta) + ")",
                  m.worst() <= l && m.probes == probes,
                  std::to_string(m.probes) + " probes, measured x " + fmt(m.x) + ", y " + fmt(m.y) + ", t " +
                      fmt(m.t) + ", W2 " + fmt(m.measure) + " vs L = " + fmt(l));
}

PropertyResult certificate_scaling() {
    const double a1 = 1.5, a2 = 2.0, ldup = 0.7;
    const auto kc = kernel_constants(KernelFamily::Gaussian);
    const double eps0 = 0.1, delta0 = 0.1;
    double worst = 0.0;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    // With L_g = 0 the numerators of C1 and C2 do not involve epsilon.
    const auto base = LipschitzCertificate::compute(a1, a2, kc.a3, 0.0, ldup, kc.lk, eps0, delta0);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const double eps = eps0 / std::pow(2.0, i), delta = delta0 / std::pow(2.0, j);
            const auto c = LipschitzCertificate::compute(a1, a2, kc.a3, 0.0, ldup, kc.lk, eps, delta);
            const auto half_eps = LipschitzCertificate::compute(a1, a2, kc.a3, 0.0, ldup, kc.lk, eps / 2, delta);
            worst = std::max({worst, rel(half_eps.c1 / c.c1, 2.0), rel(half_eps.c2 / c.c2, 2.0)});
            // C1 eps delta^2 / (E_g + E_1) and C2 eps delta^2 / (A1^2 E_1 + E_g) are grid-invariant.
            auto n1 = [&](double d) { return (a1 * a1 * kc.a3 + d) + (kc.a3 + d); };
            auto n2 = [&](double d) { return a1 * a1 * (kc.a3 + d) + (a1 * a1 * kc.a3 + d); };
            worst = std::max(worst, rel(c.c1 * eps * delta * delta / n1(delta),
                                        base.c1 * eps0 * delta0 * delta0 / n1(delta0)));
            worst = std::max(worst, rel(c.c2 * eps * delta * delta / n2(delta),
                                        base.c2 * eps0 * delta0 * delta0 / n2(delta0)));
            // C3, C4 scale as sqrt((A3 + delta) / delta) and do not see epsilon.
            auto s = [&](double d) { return std::sqrt((kc.a3 + d) / d); };
            worst = std::max(worst, rel(c.c4 / s(delta), base.c4 / s(delta0)));
            worst = std::max(worst, rel(c.l, std::max({c.c1, c.c2 + c.c4, c.c3})));
        }
    }
    return result("certificate scales as 1/(eps delta^2)", worst <= 1e-12,
                  "4 x 4 dyadic grid, max relative defect " + fmt(worst));
}

}  // namespace lsvpm::check
