#include "lsvpm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lsvpm/csv.hpp"
#include "lsvpm/errors.hpp"
#include "lsvpm/parallel.hpp"
#include "lsvpm/rng.hpp"

namespace lsvpm {

namespace {

constexpr double kLogStateLimit = 50.0;
constexpr double kSpotBlowUpFactor = 1e6;

std::vector<std::uint64_t> resolve_streams(const EngineOptions& o, std::size_t n) {
    if (o.antithetic && n % 2 != 0) throw Error(ErrorCode::Validation, "antithetic sampling needs an even particle count");
    if (o.stream_ids.empty()) {
        std::vector<std::uint64_t> ids(n);
        std::iota(ids.begin(), ids.end(), std::uint64_t{0});
        return ids;
    }
    if (o.stream_ids.size() != n) throw Error(ErrorCode::Validation, "stream_ids must have one entry per particle");
    return o.stream_ids;
}

[[noreturn]] void non_finite(std::size_t step, std::size_t particle, double value, const char* what) {
    std::ostringstream os;
    os << what << " left the finite range (" << value << ") at step " << step << ", particle " << particle;
    throw Error(ErrorCode::NonFinite, os.str());
}

// Noise for particle i; with antithetic pairing the second half mirrors the first.
PathBundle::Increment particle_noise(const PathBundle& noise, const EngineOptions& o,
                                     const std::vector<std::uint64_t>& streams, std::size_t i, std::size_t step) {
    if (!o.antithetic) return noise.increment(streams[i], step);
    const std::size_t half = streams.size() / 2;
    if (i < half) return noise.increment(streams[i], step);
    const auto inc = noise.increment(streams[i - half], step);
    return {-inc.wx, -inc.wy};
}

bool wants_snapshot(const EngineOptions& o, std::size_t step) {
    return o.snapshot_stride > 0 && step % o.snapshot_stride == 0;
}

void take_snapshot(Trajectory& traj, const ParticleEnsemble& e, std::size_t step) {
    traj.snapshot_steps.push_back(step);
    traj.snapshots.push_back(e);
}

}  // namespace

PathBundle::PathBundle(std::uint64_t seed, double rho, double horizon, std::size_t steps, std::size_t refinement)
    : seed_(seed),
      rho_(rho),
      rho_bar_(std::sqrt(std::max(0.0, 1.0 - rho * rho))),
      sqrt_fine_dt_(std::sqrt(horizon / static_cast<double>(steps * refinement))),
      steps_(steps),
      refinement_(refinement) {
    if (steps == 0 || refinement == 0) throw Error(ErrorCode::Validation, "PathBundle needs steps, refinement >= 1");
    if (!(rho >= -1.0 && rho <= 1.0)) throw Error(ErrorCode::Validation, "PathBundle correlation outside [-1, 1]");
}

PathBundle::Increment PathBundle::increment(std::uint64_t stream_id, std::size_t step) const {
    const rng::NormalStream stream(seed_, rng::Stream::Brownian, stream_id);
    double zx = 0.0;
    double zz = 0.0;
    const std::size_t first = step * refinement_;
    for (std::size_t k = 0; k < refinement_; ++k) {
        const auto [a, b] = stream.normal_pair(first + k);
        zx += a;
        zz += b;
    }
    const double wx = sqrt_fine_dt_ * zx;
    const double wz = sqrt_fine_dt_ * zz;
    return {wx, rho_ * wx + rho_bar_ * wz};
}

std::vector<double> PathBundle::materialize(std::size_t particles) const {
    std::vector<double> out(particles * steps_ * 2);
    for (std::size_t i = 0; i < particles; ++i) {
        for (std::size_t m = 0; m < steps_; ++m) {
            const auto inc = increment(i, m);
            out[(i * steps_ + m) * 2] = inc.wx;
            out[(i * steps_ + m) * 2 + 1] = inc.wy;
        }
    }
    return out;
}

Trajectory simulate_log_mv(const RegularisedCoeffs& coeffs, const OUParams& ou, const SimGrid& grid,
                           std::span<const double> x0, std::span<const double> y0, const LogMvOptions& options) {
    require_valid(validate(grid), "SimGrid");
    require_valid(validate(coeffs.kernel), "KernelSpec");
    // gamma = 0 (a frozen factor) is accepted here as a degenerate but well-defined case.
    if (!(ou.m > 0) || !(ou.gamma >= 0) || !(ou.rho_xy >= -1.0 && ou.rho_xy <= 1.0)) {
        throw Error(ErrorCode::Validation, "OUParams need m > 0, gamma >= 0, rho_xy in [-1, 1]");
    }
    const std::size_t n = grid.particles;
    if (x0.size() != n || y0.size() != n) throw Error(ErrorCode::Validation, "initial states must have N entries");

    const auto streams = resolve_streams(options, n);
    const PathBundle noise(grid.seed, ou.rho_xy, grid.horizon, grid.steps, options.refinement);
    const double dt = grid.dt();
    const double decay = std::exp(-ou.m * dt);
    const double exact_sd_per_unit = ou.gamma * std::sqrt((1.0 - std::exp(-2.0 * ou.m * dt)) / (2.0 * ou.m)) /
                                     std::sqrt(dt);

    Trajectory traj;
    traj.model = ModelKind::LogMV;
    traj.grid = grid;
    traj.initial_state = std::accumulate(x0.begin(), x0.end(), 0.0) / static_cast<double>(n);

    ParticleEnsemble cur{{x0.begin(), x0.end()}, {y0.begin(), y0.end()}, 0.0};
    check_ensemble(cur);
    ParticleEnsemble next{std::vector<double>(n), std::vector<double>(n), 0.0};
    std::vector<double> g2(n), drift(n), diffusion(n);

    for (std::size_t m = 0; m < grid.steps; ++m) {
        const double t = grid.time(m);
        cur.time = t;
        if (wants_snapshot(options, m)) take_snapshot(traj, cur, m);

        for (std::size_t j = 0; j < n; ++j) {
            const double g = coeffs.g(cur.ys[j]);
            g2[j] = g * g;
        }
        const KernelEstimator estimator(cur.xs, g2, coeffs.kernel, coeffs.normalization);
        parallel_for(n, options.threads, [&](std::size_t i) {
            const double ratio = estimator.ratio(cur.xs[i], options.backend);
            const double sigma = coeffs.g(cur.ys[i]) * coeffs.localvol(t, std::exp(cur.xs[i])) * ratio;
            diffusion[i] = sigma;
            drift[i] = -0.5 * sigma * sigma;
        });
        if (options.observer) options.observer(StepRecord{m, t, cur, drift, diffusion});

        for (std::size_t i = 0; i < n; ++i) {
            const auto inc = particle_noise(noise, options, streams, i, m);
            const double x = cur.xs[i] + drift[i] * dt + diffusion[i] * inc.wx;
            const double y = cur.ys[i];
            const double y_next = options.ou_scheme == OuScheme::Euler
                                      ? y + ou.m * (ou.theta - y) * dt + ou.gamma * inc.wy
                                      : ou.theta + (y - ou.theta) * decay + exact_sd_per_unit * inc.wy;
            if (!std::isfinite(x) || std::abs(x) > kLogStateLimit) non_finite(m + 1, i, x, "log-price");
            if (!std::isfinite(y_next)) non_finite(m + 1, i, y_next, "vol factor");
            next.xs[i] = x;
            next.ys[i] = y_next;
        }
        std::swap(cur, next);
    }
    cur.time = grid.horizon;
    if (wants_snapshot(options, grid.steps)) take_snapshot(traj, cur, grid.steps);
    traj.terminal = std::move(cur);
    return traj;
}

Trajectory simulate_log_mv(const RegularisedCoeffs& coeffs, const OUParams& ou, const SimGrid& grid, double x0,
                           double y0, const LogMvOptions& options) {
    const std::vector<double> xs(grid.particles, x0);
    const std::vector<double> ys(grid.particles, y0);
    return simulate_log_mv(coeffs, ou, grid, xs, ys, options);
}

Trajectory simulate_heston_lsv(const LocalVolFn& localvol, const KernelSpec& kernel, const HestonParams& p,
                               const SimGrid& grid, const HestonLsvOptions& options) {
    require_valid(validate(grid), "SimGrid");
    require_valid(validate(p), "HestonParams");
    require_valid(validate(kernel), "KernelSpec");
    const std::size_t n = grid.particles;
    const std::size_t sources = options.leverage_sources == 0 ? n : options.leverage_sources;
    if (sources > n) throw Error(ErrorCode::Validation, "leverage_sources exceeds particle count");

    const auto streams = resolve_streams(options, n);
    const PathBundle noise(grid.seed, p.rho, grid.horizon, grid.steps, options.refinement);
    const double dt = grid.dt();
    const double spot_limit = kSpotBlowUpFactor * p.spot;

    Trajectory traj;
    traj.model = ModelKind::HestonLsv;
    traj.grid = grid;
    traj.rate = p.rate;
    traj.initial_state = p.spot;

    ParticleEnsemble cur{std::vector<double>(n, p.spot), std::vector<double>(n, p.v0), 0.0};
    ParticleEnsemble next{std::vector<double>(n), std::vector<double>(n), 0.0};
    std::vector<double> v_plus(n), alpha(n, 1.0), drift(n), diffusion(n);

    // Initial leverage from the collapsed ensemble: sqrt(N + delta) / sqrt(N v0 + delta).
    const double ns = static_cast<double>(sources);
    const double initial_ratio = std::sqrt(ns + kernel.delta) / std::sqrt(ns * p.v0 + kernel.delta);

    auto record_leverage = [&](double t, const KernelEstimator* estimator) {
        for (const double s : options.leverage_lattice) {
            const double ratio = estimator ? estimator->ratio(s, options.backend) : initial_ratio;
            traj.leverage.push_back({t, s, localvol(t, s) * ratio});
        }
    };

    for (std::size_t m = 0; m < grid.steps; ++m) {
        const double t = grid.time(m);
        cur.time = t;
        if (wants_snapshot(options, m)) take_snapshot(traj, cur, m);
        for (std::size_t i = 0; i < n; ++i) v_plus[i] = std::max(cur.ys[i], 0.0);

        const bool record = !options.leverage_lattice.empty() && m % std::max<std::size_t>(1, options.leverage_stride) == 0;
        if (options.calibrate && m == 0) {
            for (std::size_t i = 0; i < n; ++i) alpha[i] = localvol(t, cur.xs[i]) * initial_ratio;
            if (record) record_leverage(t, nullptr);
        } else if (options.calibrate) {
            const KernelEstimator estimator(std::span<const double>(cur.xs).first(sources),
                                            std::span<const double>(v_plus).first(sources), kernel);
            parallel_for(n, options.threads, [&](std::size_t i) {
                alpha[i] = localvol(t, cur.xs[i]) * estimator.ratio(cur.xs[i], options.backend);
            });
            if (record) record_leverage(t, &estimator);
        }
        for (std::size_t i = 0; i < n; ++i) {
            drift[i] = p.rate * cur.xs[i];
            diffusion[i] = std::sqrt(v_plus[i]) * cur.xs[i] * alpha[i];
        }
        if (options.observer) options.observer(StepRecord{m, t, cur, drift, diffusion});

        for (std::size_t i = 0; i < n; ++i) {
            const auto inc = particle_noise(noise, options, streams, i, m);
            const double s = cur.xs[i] + drift[i] * dt + diffusion[i] * inc.wx;
            const double v = cur.ys[i];
            if (v < 0.0) ++traj.truncation_events;
            const double vp = v_plus[i];
            const double v_next = v + p.kappa * (p.theta - vp) * dt + p.xi * std::sqrt(vp) * inc.wy;
            if (!std::isfinite(s) || s > spot_limit) non_finite(m + 1, i, s, "spot");
            if (!std::isfinite(v_next)) non_finite(m + 1, i, v_next, "variance");
            next.xs[i] = s;
            next.ys[i] = v_next;
        }
        std::swap(cur, next);
    }
    cur.time = grid.horizon;
    if (wants_snapshot(options, grid.steps)) take_snapshot(traj, cur, grid.steps);
    if (!options.leverage_lattice.empty() && options.calibrate) {
        for (std::size_t i = 0; i < n; ++i) v_plus[i] = std::max(cur.ys[i], 0.0);
        const KernelEstimator estimator(std::span<const double>(cur.xs).first(sources),
                                        std::span<const double>(v_plus).first(sources), kernel);
        record_leverage(grid.horizon, &estimator);
    }
    traj.terminal = std::move(cur);
    return traj;
}

MartingaleReport martingale_check(const Trajectory& trajectory, double rate) {
    const auto& s = trajectory.terminal.xs;
    const double n = static_cast<double>(s.size());
    const double df = std::exp(-rate * trajectory.grid.horizon);
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= (n - 1.0);
    MartingaleReport r;
    r.discounted_mean = df * mean;
    r.initial = trajectory.initial_state;
    r.discrepancy = std::abs(r.discounted_mean - r.initial);
    r.std_error = df * std::sqrt(var / n);
    r.z_score = r.std_error > 0 ? r.discrepancy / r.std_error : (r.discrepancy > 0 ? INFINITY : 0.0);
    return r;
}

std::vector<RefinementLevel> coupled_refinement(const ModelConfig& config, const SimGrid& grid,
                                                std::span<const std::size_t> levels) {
    if (levels.empty()) throw Error(ErrorCode::IncompatibleLevels, "no refinement levels given");
    const std::size_t finest = *std::max_element(levels.begin(), levels.end());
    for (const auto m : levels) {
        if (m == 0 || finest % m != 0) {
            std::ostringstream os;
            os << "level M=" << m << " does not divide the finest level M=" << finest;
            throw Error(ErrorCode::IncompatibleLevels, os.str());
        }
    }
    std::vector<RefinementLevel> out;
    for (const auto m : levels) {
        SimGrid g = grid;
        g.steps = m;
        const std::size_t refinement = finest / m;
        Trajectory traj = std::visit(
            [&](const auto& c) -> Trajectory {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, HestonLsvConfig>) {
                    auto o = c.options;
                    o.refinement = refinement;
                    return simulate_heston_lsv(c.localvol, c.kernel, c.params, g, o);
                } else {
                    auto o = c.options;
                    o.refinement = refinement;
                    return simulate_log_mv(c.coeffs, c.ou, g, c.x0, c.y0, o);
                }
            },
            config);
        out.push_back({m, std::move(traj.terminal)});
    }
    return out;
}

double strong_rms_error(const ParticleEnsemble& a, const ParticleEnsemble& b, bool use_y) {
    const auto& u = use_y ? a.ys : a.xs;
    const auto& v = use_y ? b.ys : b.xs;
    if (u.size() != v.size() || u.empty()) throw Error(ErrorCode::GridMismatch, "ensembles are not aligned");
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += (u[i] - v[i]) * (u[i] - v[i]);
    return std::sqrt(acc / static_cast<double>(u.size()));
}

MomentProbe moment_probe(const Trajectory& trajectory) {
    MomentProbe probe;
    auto visit = [&](const ParticleEnsemble& e) {
        double sx = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            sx += e.xs[i] * e.xs[i];
            sy += e.ys[i] * e.ys[i];
        }
        const double n = static_cast<double>(e.size());
        probe.x = std::max(probe.x, sx / n);
        probe.y = std::max(probe.y, sy / n);
    };
    for (const auto& e : trajectory.snapshots) visit(e);
    visit(trajectory.terminal);
    return probe;
}

void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path,
                          const std::string& header_comment) {
    auto out = csv::open_for_write(path, header_comment);
    out << "step,time,particle,x_or_s,y_or_v\n";
    auto emit = [&](std::size_t step, const ParticleEnsemble& e) {
        for (std::size_t i = 0; i < e.size(); ++i) {
            out << step << ',' << csv::format(e.time) << ',' << i << ',' << csv::format(e.xs[i]) << ','
                << csv::format(e.ys[i]) << '\n';
        }
    };
    for (std::size_t k = 0; k < trajectory.snapshots.size(); ++k) {
        emit(trajectory.snapshot_steps[k], trajectory.snapshots[k]);
    }
    const std::size_t last = trajectory.grid.steps;
    if (trajectory.snapshot_steps.empty() || trajectory.snapshot_steps.back() != last) {
        emit(last, trajectory.terminal);
    }
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace lsvpm
