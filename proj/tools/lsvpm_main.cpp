// lsvpm: generate the synthetic market surface, calibrate and price, run the convergence studies.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lsvpm/config.hpp"
#include "lsvpm/csv.hpp"
#include "lsvpm/errors.hpp"
#include "lsvpm/pricing.hpp"
#include "lsvpm/studies.hpp"
#include "lsvpm/surface.hpp"

namespace fs = std::filesystem;
using namespace lsvpm;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> particles;
    std::optional<std::size_t> steps;
    std::optional<double> epsilon;
    std::optional<double> delta;
    std::optional<unsigned> threads;
    std::optional<std::string> output_dir;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON run configuration (defaults apply when omitted)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("-N,--particles", o.particles, "Particle count");
    cmd->add_option("-M,--steps", o.steps, "Time steps");
    cmd->add_option("--epsilon", o.epsilon, "Kernel bandwidth (absolute)");
    cmd->add_option("--delta", o.delta, "Regularisation floor");
    cmd->add_option("--threads", o.threads, "Worker thread cap");
    cmd->add_option("-o,--output-dir", o.output_dir, "Directory for output files");
}

// Flags win over the file; the merged config is re-validated through the same parser.
RunConfig resolve(const Overrides& o) {
    RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    if (o.particles) c.simulation.particles = *o.particles;
    if (o.steps) c.simulation.steps = *o.steps;
    if (o.epsilon) c.kernel.epsilon = *o.epsilon;
    if (o.delta) c.kernel.delta = *o.delta;
    if (o.threads) c.threads = *o.threads;
    if (o.output_dir) c.output_dir = *o.output_dir;
    return parse_config(to_json(c));
}

fs::path surface_path(const RunConfig& c) {
    return c.market.surface_file.is_absolute() ? c.market.surface_file : c.output_dir / c.market.surface_file;
}

int cmd_generate_surface(const RunConfig& c) {
    const VolSurface s = generate_market_surface(c.market.params, c.market.maturities, c.market.strikes, c.threads);
    const fs::path path = surface_path(c);
    write_surface_csv(s, path, output_header(c));
    std::cout << "wrote " << path.string() << " (" << s.maturities.size() << " maturities x " << s.strikes.size()
              << " strikes)\n";
    return kOk;
}

void write_leverage_csv(const Trajectory& traj, const fs::path& path, const std::string& header) {
    auto out = csv::open_for_write(path, header);
    out << "time,spot,alpha\n";
    for (const auto& p : traj.leverage) {
        out << csv::format(p.time) << ',' << csv::format(p.spot) << ',' << csv::format(p.alpha) << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

int cmd_calibrate(const RunConfig& c, std::optional<std::string> surface_override) {
    const fs::path path = surface_override ? fs::path(*surface_override) : surface_path(c);
    if (!fs::exists(path)) {
        throw Error(ErrorCode::Io, "surface file " + path.string() + " not found (run generate-surface first)");
    }
    const auto t0 = std::chrono::steady_clock::now();
    VolSurface market;
    try {
        market = read_surface_csv(path);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("reading surface: ") + e.what());
    }
    LsvSetup setup;
    try {
        setup = make_lsv_setup(c, std::move(market));
    } catch (const Error& e) {
        throw Error(e.code(), std::string("local volatility: ") + e.what());
    }
    const double eps = c.resolved_epsilon();
    const KernelSpec kernel{c.kernel.family, eps, c.kernel.delta};
    const std::string header = output_header(c);
    fs::create_directories(c.output_dir);
    const std::string tag = std::to_string(c.seed);

    Trajectory traj;
    try {
        if (c.model == ModelVariant::HestonLsv) {
            HestonLsvOptions o = setup.options;
            o.snapshot_stride = c.simulation.snapshot_stride;
            o.leverage_lattice = c.leverage.spots;
            o.leverage_stride = c.leverage.stride;
            traj = simulate_heston_lsv(setup.localvol, kernel, setup.params, setup.grid, o);
        } else {
            LogMvOptions o;
            o.backend = c.simulation.backend;
            o.threads = c.threads;
            o.antithetic = c.simulation.antithetic;
            o.snapshot_stride = c.simulation.snapshot_stride;
            o.ou_scheme = c.log_mv.ou_scheme;
            const RegularisedCoeffs coeffs{setup.localvol, GFunction(c.log_mv.g), kernel};
            traj = simulate_log_mv(coeffs, c.log_mv.ou, setup.grid, std::log(c.market.params.spot), c.log_mv.y0, o);
            if (c.simulation.snapshot_stride > 0) {
                write_trajectory_csv(traj, c.output_dir / ("trajectory_" + tag + ".csv"), header);
            }
            for (auto& x : traj.terminal.xs) x = std::exp(x);
            traj.initial_state = c.market.params.spot;
            traj.rate = c.market.params.rate;
        }
    } catch (const Error& e) {
        throw Error(e.code(), std::string("simulation: ") + e.what());
    }
    if (c.model == ModelVariant::HestonLsv && c.simulation.snapshot_stride > 0) {
        write_trajectory_csv(traj, c.output_dir / ("trajectory_" + tag + ".csv"), header);
    }

    PriceReport report = price_calls(traj, setup.strikes, c.market.params.rate, c.threads);
    try {
        attach_market(report, setup.market);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("pricing: ") + e.what());
    }
    const fs::path prices = c.output_dir / ("prices_" + tag + ".csv");
    write_price_report_csv(report, prices, header);
    if (!traj.leverage.empty()) write_leverage_csv(traj, c.output_dir / ("leverage_" + tag + ".csv"), header);

    const auto m = martingale_check(traj, c.market.params.rate);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("epsilon %.6g  delta %.3g  N %zu  M %zu\n", eps, c.kernel.delta, c.simulation.particles,
                c.simulation.steps);
    std::printf("rmse %.6f  martingale z %.2f  truncations %zu  %.2fs\n", report.rmse, m.z_score,
                traj.truncation_events, secs);
    std::printf("wrote %s\n", prices.string().c_str());
    return kOk;
}

int cmd_study(const RunConfig& c, const std::string& kind_name) {
    const StudyKind kind = study_kind_from_string(kind_name);
    const StudyReport report = run_study(c, kind);
    const auto files = write_study(report, c.output_dir, output_header(c));
    for (const auto& f : report.fits) {
        std::printf("%-16s slope %+.4f  residual %.4f  (%zu points)\n", f.series.c_str(), f.fit.slope, f.fit.residual,
                    f.fit.points);
    }
    if (kind == StudyKind::Sweep) {
        for (const auto& r : report.rows) std::printf("epsilon %-10.4g delta %-8.1e rmse %.4f\n", r.epsilon, r.delta, r.value);
    }
    std::printf("%.1fs, wrote %s\n", report.wall_clock_seconds, files.rows.string().c_str());
    return kOk;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Config:
        case ErrorCode::Validation:
        case ErrorCode::IncompatibleLevels: return kUsageError;
        default: return kRuntimeFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Particle calibration of local-stochastic volatility models"};
    app.require_subcommand(1);

    Overrides gen_o, cal_o, study_o;
    auto* gen = app.add_subcommand("generate-surface", "Price the synthetic Heston market surface to CSV");
    add_overrides(gen, gen_o);

    auto* cal = app.add_subcommand("calibrate", "Calibrate the leverage function and price calls at the horizon");
    add_overrides(cal, cal_o);
    std::optional<std::string> surface;
    bool pure_heston = false;
    cal->add_option("--surface", surface, "Market surface CSV (default: <output_dir>/<market.surface_file>)");
    cal->add_flag("--no-leverage", pure_heston, "Force alpha = 1 (pure Heston dynamics)");

    auto* study = app.add_subcommand("study", "Run a convergence or regularisation study");
    add_overrides(study, study_o);
    std::string kind;
    study->add_option("kind", kind, "em | chaos | sweep")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsageError;
    }

    try {
        if (*gen) return cmd_generate_surface(resolve(gen_o));
        if (*cal) {
            RunConfig c = resolve(cal_o);
            if (pure_heston) c.simulation.calibrate = false;
            return cmd_calibrate(c, surface);
        }
        if (*study) return cmd_study(resolve(study_o), kind);
    } catch (const Error& e) {
        std::cerr << "lsvpm: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "lsvpm: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kUsageError;
}
