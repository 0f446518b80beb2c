#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lsvpm/config.hpp"
#include "lsvpm/engine.hpp"
#include "lsvpm/pricing.hpp"
#include "lsvpm/surface.hpp"

namespace lsvpm {

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// Root-mean-square of the residuals of log y about the fitted line.
    double residual = 0.0;
    std::size_t points = 0;
};

/// Least-squares slope of log y against log x. Needs at least two points, all strictly
/// positive; throws NonPositiveData otherwise.
LogLogFit fit_loglog_slope(std::span<const std::pair<double, double>> points);

enum class StudyKind { Em, Chaos, Sweep };
std::string to_string(StudyKind kind);
/// Throws Config for anything other than em, chaos or sweep.
StudyKind study_kind_from_string(const std::string& name);

struct StudyRow {
    std::string series;
    double epsilon = 0.0;
    double delta = 0.0;
    std::size_t particles = 0;
    std::size_t steps = 0;
    double x = 0.0;      // dt (em), N (chaos), epsilon (sweep)
    double value = 0.0;  // strong RMS error (em, chaos) or median price RMSE (sweep)
    bool in_fit = true;
};

struct SeriesFit {
    std::string series;
    LogLogFit fit;
};

struct StudyReport {
    StudyKind kind = StudyKind::Em;
    std::uint64_t seed = 0;
    /// Canonical JSON of the run configuration; re-running from it reproduces the report.
    std::string config_echo;
    std::vector<StudyRow> rows;
    std::vector<SeriesFit> fits;
    double wall_clock_seconds = 0.0;

    [[nodiscard]] const SeriesFit* fit_for(const std::string& series) const;
};

/// Heston-LSV calibration context shared by the studies and the calibrate command.
struct LsvSetup {
    VolSurface market;
    LocalVolFn localvol = LocalVolFn::flat(0.2);
    HestonParams params = HestonParams::modified();
    KernelFamily family = KernelFamily::Gaussian;
    /// Floor used where a study does not sweep it (chaos).
    double delta = 1e-5;
    SimGrid grid;
    HestonLsvOptions options;
    /// Strikes priced at the horizon; must lie on the market grid.
    std::vector<double> strikes = default_strikes();
};

/// Generates the market surface from `config.market`, then builds the Dupire local vol.
LsvSetup make_lsv_setup(const RunConfig& config);
/// Same, from an already available surface (the calibrate command reads it from disk).
LsvSetup make_lsv_setup(const RunConfig& config, VolSurface market);

/// One calibrate-then-price pass with the given regularisation and seed; market prices attached.
PriceReport run_pipeline(const LsvSetup& setup, const KernelSpec& kernel, std::uint64_t seed);

struct EmStudyOptions {
    std::vector<std::size_t> levels;
    std::vector<double> epsilons;
    /// Adds an "ou-control" series: Euler OU against the exact OU transition on the finest increments.
    std::optional<OUParams> ou_control;
    double ou_y0 = 0.0;
};

/// Strong error of each level against the finest level, per bandwidth, with a slope fit per series.
/// The x-component (S for Heston LSV, X for log-MV) is compared.
StudyReport study_em_convergence(const std::function<ModelConfig(double epsilon)>& model_for_epsilon,
                                 const SimGrid& grid, const EmStudyOptions& options);

struct ChaosStudyOptions {
    std::vector<std::size_t> particles;
    std::vector<double> c;
    std::size_t repetitions = 1;
};

/// For each N: 2N particles run twice on shared noise, once with the leverage estimated from all
/// 2N particles and once from the first N only; error = RMS distance of the terminal prices.
/// Bandwidth c * spot * N^{-1/5}; seed-median over repetitions.
StudyReport study_chaos(const LsvSetup& setup, const ChaosStudyOptions& options);

struct SweepOptions {
    std::vector<double> epsilons;
    std::vector<double> deltas;
    std::size_t repetitions = 5;
};

/// Price RMSE against the market for every (epsilon, delta) cell, median over seeds
/// setup.grid.seed, setup.grid.seed + 1, ...
StudyReport study_regularisation_sweep(const LsvSetup& setup, const SweepOptions& options);

/// Runs the study named by `kind` with the parameters in `config`.
StudyReport run_study(const RunConfig& config, StudyKind kind);

struct StudyFiles {
    std::filesystem::path rows;
    std::filesystem::path fits;
    std::filesystem::path config_echo;
};

/// study_<kind>_<seed>.csv, study_<kind>_<seed>_fits.csv and study_<kind>_<seed>.config.json in `dir`.
StudyFiles write_study(const StudyReport& report, const std::filesystem::path& dir,
                       const std::string& header_comment);

}  // namespace lsvpm
