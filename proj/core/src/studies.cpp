#include "lsvpm/studies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "lsvpm/csv.hpp"
#include "lsvpm/errors.hpp"
#include "lsvpm/parallel.hpp"

namespace lsvpm {

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string label(const char* name, double value) { return std::string(name) + "=" + csv::format(value); }

void fit_series(StudyReport& report) {
    std::vector<std::string> names;
    for (const auto& row : report.rows) {
        if (std::find(names.begin(), names.end(), row.series) == names.end()) names.push_back(row.series);
    }
    for (const auto& name : names) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& row : report.rows) {
            if (row.series == name && row.in_fit) pts.emplace_back(row.x, row.value);
        }
        if (pts.size() >= 2) report.fits.push_back({name, fit_loglog_slope(pts)});
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

LogLogFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw Error(ErrorCode::NonPositiveData, "a log-log fit needs at least two points");
    double sx = 0, sy = 0;
    for (const auto& [x, y] : points) {
        if (!(x > 0) || !(y > 0) || !std::isfinite(x) || !std::isfinite(y)) {
            throw Error(ErrorCode::NonPositiveData, "log-log fit needs strictly positive finite data");
        }
        sx += std::log(x);
        sy += std::log(y);
    }
    const double n = static_cast<double>(points.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        const double dx = std::log(x) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y) - my);
    }
    if (!(sxx > 0)) throw Error(ErrorCode::NonPositiveData, "log-log fit needs at least two distinct x values");
    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0;
    for (const auto& [x, y] : points) {
        const double r = std::log(y) - (fit.intercept + fit.slope * std::log(x));
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    fit.points = points.size();
    return fit;
}

std::string to_string(StudyKind kind) {
    switch (kind) {
        case StudyKind::Em: return "em";
        case StudyKind::Chaos: return "chaos";
        case StudyKind::Sweep: return "sweep";
    }
    return "em";
}

StudyKind study_kind_from_string(const std::string& name) {
    if (name == "em") return StudyKind::Em;
    if (name == "chaos") return StudyKind::Chaos;
    if (name == "sweep") return StudyKind::Sweep;
    throw Error(ErrorCode::Config, "unknown study kind '" + name + "' (expected em, chaos or sweep)");
}

const SeriesFit* StudyReport::fit_for(const std::string& series) const {
    for (const auto& f : fits) {
        if (f.series == series) return &f;
    }
    return nullptr;
}

LsvSetup make_lsv_setup(const RunConfig& config) {
    return make_lsv_setup(config, generate_market_surface(config.market.params, config.market.maturities,
                                                          config.market.strikes, config.threads));
}

LsvSetup make_lsv_setup(const RunConfig& config, VolSurface market) {
    LsvSetup s;
    DupireOptions d = config.dupire;
    d.rate = config.market.params.rate;
    d.spot = config.market.params.spot;
    s.localvol = dupire_local_vol(market, d);
    s.market = std::move(market);
    s.params = config.model_params();
    s.family = config.kernel.family;
    s.delta = config.kernel.delta;
    s.grid = config.grid();
    s.options.backend = config.simulation.backend;
    s.options.threads = config.threads;
    s.options.antithetic = config.simulation.antithetic;
    s.options.calibrate = config.simulation.calibrate;
    s.strikes = config.market.strikes;
    return s;
}

PriceReport run_pipeline(const LsvSetup& setup, const KernelSpec& kernel, std::uint64_t seed) {
    SimGrid grid = setup.grid;
    grid.seed = seed;
    const Trajectory traj = simulate_heston_lsv(setup.localvol, kernel, setup.params, grid, setup.options);
    PriceReport report = price_calls(traj, setup.strikes, setup.params.rate);
    attach_market(report, setup.market);
    return report;
}

StudyReport study_em_convergence(const std::function<ModelConfig(double epsilon)>& model_for_epsilon,
                                 const SimGrid& grid, const EmStudyOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    if (options.levels.size() < 2) throw Error(ErrorCode::IncompatibleLevels, "the EM study needs at least two levels");
    const std::size_t finest = *std::max_element(options.levels.begin(), options.levels.end());
    const auto reference_pos =
        static_cast<std::size_t>(std::find(options.levels.begin(), options.levels.end(), finest) - options.levels.begin());

    StudyReport report;
    report.kind = StudyKind::Em;
    report.seed = grid.seed;

    for (const double eps : options.epsilons) {
        const ModelConfig model = model_for_epsilon(eps);
        const auto levels = coupled_refinement(model, grid, options.levels);
        const double delta = std::visit(
            [](const auto& c) {
                if constexpr (std::is_same_v<std::decay_t<decltype(c)>, HestonLsvConfig>) {
                    return c.kernel.delta;
                } else {
                    return c.coeffs.kernel.delta;
                }
            },
            model);
        for (std::size_t k = 0; k < levels.size(); ++k) {
            if (k == reference_pos) continue;
            const double err = strong_rms_error(levels[k].terminal, levels[reference_pos].terminal);
            report.rows.push_back({label("epsilon", eps), eps, delta, grid.particles, levels[k].steps,
                                   grid.horizon / static_cast<double>(levels[k].steps), err, err > 0.0});
        }
    }

    if (options.ou_control) {
        // X is irrelevant here; a narrow kernel keeps its cost negligible.
        RegularisedCoeffs coeffs{LocalVolFn::flat(0.2), GFunction::constant(1.0), {KernelFamily::Gaussian, 1e-3, 0.0}};
        LogMvOptions euler;
        euler.ou_scheme = OuScheme::Euler;
        LogMvOptions exact;
        exact.ou_scheme = OuScheme::Exact;
        SimGrid fine = grid;
        fine.steps = finest;
        const Trajectory reference = simulate_log_mv(coeffs, *options.ou_control, fine, 0.0, options.ou_y0, exact);
        for (std::size_t k = 0; k < options.levels.size(); ++k) {
            const std::size_t m = options.levels[k];
            if (finest % m != 0) throw Error(ErrorCode::IncompatibleLevels, "OU control levels must divide the finest");
            SimGrid g = grid;
            g.steps = m;
            LogMvOptions o = euler;
            o.refinement = finest / m;
            const Trajectory t = simulate_log_mv(coeffs, *options.ou_control, g, 0.0, options.ou_y0, o);
            const double err = strong_rms_error(t.terminal, reference.terminal, true);
            report.rows.push_back({"ou-control", 0.0, 0.0, grid.particles, m, grid.horizon / static_cast<double>(m), err,
                                   err > 0.0});
        }
    }

    fit_series(report);
    report.wall_clock_seconds = seconds_since(t0);
    return report;
}

StudyReport study_chaos(const LsvSetup& setup, const ChaosStudyOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    if (options.particles.empty() || options.c.empty() || options.repetitions == 0) {
        throw Error(ErrorCode::Validation, "chaos study needs particle counts, bandwidth factors and repetitions");
    }
    for (std::size_t i = 1; i < options.particles.size(); ++i) {
        if (options.particles[i] <= options.particles[i - 1]) {
            throw Error(ErrorCode::Validation, "chaos study particle counts must ascend");
        }
    }
    StudyReport report;
    report.kind = StudyKind::Chaos;
    report.seed = setup.grid.seed;

    for (const double c : options.c) {
        for (const std::size_t n : options.particles) {
            const double eps = amise_bandwidth(setup.params.spot, n, c);
            const KernelSpec kernel{setup.family, eps, setup.delta};
            std::vector<double> errors;
            for (std::size_t r = 0; r < options.repetitions; ++r) {
                SimGrid grid = setup.grid;
                grid.particles = 2 * n;
                grid.seed = setup.grid.seed + r;
                HestonLsvOptions full = setup.options;
                full.leverage_sources = 0;
                HestonLsvOptions half = setup.options;
                half.leverage_sources = n;
                const auto a = simulate_heston_lsv(setup.localvol, kernel, setup.params, grid, full);
                const auto b = simulate_heston_lsv(setup.localvol, kernel, setup.params, grid, half);
                errors.push_back(strong_rms_error(a.terminal, b.terminal));
            }
            const double err = median(errors);
            report.rows.push_back({label("c", c), eps, kernel.delta, n, setup.grid.steps, static_cast<double>(n), err,
                                   err > 0.0});
        }
    }
    fit_series(report);
    report.wall_clock_seconds = seconds_since(t0);
    return report;
}

StudyReport study_regularisation_sweep(const LsvSetup& setup, const SweepOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    if (options.epsilons.empty() || options.deltas.empty() || options.repetitions == 0) {
        throw Error(ErrorCode::Validation, "sweep needs bandwidths, floors and at least one repetition");
    }
    const std::size_t cells = options.epsilons.size() * options.deltas.size();
    const std::size_t reps = options.repetitions;
    std::vector<double> rmse(cells * reps);

    // Cells and repetitions in parallel; each pipeline runs single-threaded so results do not
    // depend on the worker count.
    LsvSetup inner = setup;
    inner.options.threads = 1;
    parallel_for(cells * reps, setup.options.threads, [&](std::size_t job) {
        const std::size_t cell = job / reps;
        const std::size_t r = job % reps;
        const double eps = options.epsilons[cell / options.deltas.size()];
        const double delta = options.deltas[cell % options.deltas.size()];
        rmse[job] = run_pipeline(inner, {setup.family, eps, delta}, setup.grid.seed + r).rmse;
    });

    StudyReport report;
    report.kind = StudyKind::Sweep;
    report.seed = setup.grid.seed;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const double eps = options.epsilons[cell / options.deltas.size()];
        const double delta = options.deltas[cell % options.deltas.size()];
        const std::vector<double> values(rmse.begin() + static_cast<std::ptrdiff_t>(cell * reps),
                                         rmse.begin() + static_cast<std::ptrdiff_t>((cell + 1) * reps));
        report.rows.push_back({"rmse", eps, delta, setup.grid.particles, setup.grid.steps, eps, median(values), false});
    }
    report.wall_clock_seconds = seconds_since(t0);
    return report;
}

StudyReport run_study(const RunConfig& config, StudyKind kind) {
    StudyReport report;
    switch (kind) {
        case StudyKind::Em: {
            const SimGrid grid = config.grid();
            EmStudyOptions options{config.em.levels, config.em.epsilons, std::nullopt, config.log_mv.y0};
            if (config.em.ou_control) options.ou_control = config.log_mv.ou;
            std::function<ModelConfig(double)> model;
            if (config.model == ModelVariant::HestonLsv) {
                const LsvSetup setup = make_lsv_setup(config);
                model = [setup, &config](double eps) -> ModelConfig {
                    return HestonLsvConfig{setup.localvol, {setup.family, eps, config.kernel.delta}, setup.params,
                                           setup.options};
                };
                report = study_em_convergence(model, grid, options);
            } else {
                const LsvSetup setup = make_lsv_setup(config);
                model = [setup, &config](double eps) -> ModelConfig {
                    LogMvOptions o;
                    o.backend = config.simulation.backend;
                    o.threads = config.threads;
                    o.antithetic = config.simulation.antithetic;
                    o.ou_scheme = config.log_mv.ou_scheme;
                    RegularisedCoeffs coeffs{setup.localvol, GFunction(config.log_mv.g),
                                             {config.kernel.family, eps, config.kernel.delta}};
                    return LogMvConfig{coeffs, config.log_mv.ou, std::log(config.market.params.spot), config.log_mv.y0, o};
                };
                report = study_em_convergence(model, grid, options);
            }
            break;
        }
        case StudyKind::Chaos: {
            if (config.model != ModelVariant::HestonLsv) {
                throw Error(ErrorCode::Config, "model: the chaos study runs the heston-lsv model");
            }
            LsvSetup setup = make_lsv_setup(config);
            report = study_chaos(setup, {config.chaos.particles, config.chaos.c, config.chaos.repetitions});
            break;
        }
        case StudyKind::Sweep: {
            if (config.model != ModelVariant::HestonLsv) {
                throw Error(ErrorCode::Config, "model: the sweep runs the heston-lsv model");
            }
            LsvSetup setup = make_lsv_setup(config);
            setup.options.antithetic = config.sweep.antithetic;
            SweepOptions options;
            const double eps1 = amise_bandwidth(config.market.params.spot, config.simulation.particles);
            for (double f : config.sweep.epsilon_factors) options.epsilons.push_back(f * eps1);
            options.deltas = config.sweep.deltas;
            options.repetitions = config.sweep.repetitions;
            report = study_regularisation_sweep(setup, options);
            break;
        }
    }
    report.config_echo = to_json(config);
    return report;
}

StudyFiles write_study(const StudyReport& report, const std::filesystem::path& dir,
                       const std::string& header_comment) {
    const std::string stem = "study_" + to_string(report.kind) + "_" + std::to_string(report.seed);
    StudyFiles files{dir / (stem + ".csv"), dir / (stem + "_fits.csv"), dir / (stem + ".config.json")};
    {
        auto out = csv::open_for_write(files.rows, header_comment);
        out << "series,epsilon,delta,particles,steps,x,value,in_fit\n";
        for (const auto& r : report.rows) {
            out << r.series << ',' << csv::format(r.epsilon) << ',' << csv::format(r.delta) << ',' << r.particles << ','
                << r.steps << ',' << csv::format(r.x) << ',' << csv::format(r.value) << ',' << (r.in_fit ? 1 : 0)
                << '\n';
        }
        if (!out) throw Error(ErrorCode::Io, "write failed for " + files.rows.string());
    }
    {
        auto out = csv::open_for_write(files.fits, header_comment);
        out << "series,slope,intercept,residual,points,wall_clock_seconds\n";
        for (const auto& f : report.fits) {
            out << f.series << ',' << csv::format(f.fit.slope) << ',' << csv::format(f.fit.intercept) << ','
                << csv::format(f.fit.residual) << ',' << f.fit.points << ',' << csv::format(report.wall_clock_seconds)
                << '\n';
        }
        if (!out) throw Error(ErrorCode::Io, "write failed for " + files.fits.string());
    }
    {
        std::ofstream out(files.config_echo);
        out << report.config_echo;
        if (!out) throw Error(ErrorCode::Io, "write failed for " + files.config_echo.string());
    }
    return files;
}

}  // namespace lsvpm
