#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lsvpm/engine.hpp"
#include "lsvpm/kernel.hpp"
#include "lsvpm/model.hpp"
#include "lsvpm/surface.hpp"

namespace lsvpm {

enum class ModelVariant { HestonLsv, LogMv };

/// Everything a run needs. Loaded from one JSON file; every key is optional and defaults to
/// the values below, unknown keys are rejected. See docs/config.md for the schema.
struct RunConfig {
    ModelVariant model = ModelVariant::HestonLsv;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::filesystem::path output_dir = "out";

    struct Market {
        HestonParams params = HestonParams::market();
        std::vector<double> maturities = default_maturities();
        std::vector<double> strikes = default_strikes();
        std::filesystem::path surface_file = "market_surface.csv";
    } market;

    /// Variance-factor parameters of the calibrated model (rate and spot come from `market`).
    HestonParams heston = HestonParams::modified();

    struct Simulation {
        double horizon = 1.0;
        std::size_t steps = 100;
        std::size_t particles = 1000;
        bool antithetic = false;
        bool calibrate = true;
        KernelBackend backend = KernelBackend::Binned;
        std::size_t snapshot_stride = 0;
    } simulation;

    struct Kernel {
        KernelFamily family = KernelFamily::Gaussian;
        /// Absolute bandwidth; when absent, epsilon_factor * spot * N^{-1/5}.
        std::optional<double> epsilon;
        double epsilon_factor = 0.01;
        double delta = 1e-5;
    } kernel;

    DupireOptions dupire;

    struct Leverage {
        std::vector<double> spots = default_strikes();
        std::size_t stride = 10;
    } leverage;

    struct LogMv {
        OUParams ou{1.0, 0.0, 0.3, -0.5};
        GFunction::Kind g = GFunction::Kind::Exp;
        double y0 = 0.0;
        OuScheme ou_scheme = OuScheme::Euler;
    } log_mv;

    struct EmStudy {
        std::vector<std::size_t> levels{8, 16, 32, 64, 128, 256};
        std::vector<double> epsilons{10.0, 0.1, 0.001};
        bool ou_control = true;
    } em;

    struct ChaosStudy {
        std::vector<std::size_t> particles{250, 500, 1000, 2000, 4000};
        std::vector<double> c{1.0, 0.1, 0.01};
        std::size_t repetitions = 1;
    } chaos;

    struct SweepStudy {
        /// Multiples of spot * N^{-1/5}.
        std::vector<double> epsilon_factors{1.0, 0.1, 0.01, 10.0};
        std::vector<double> deltas{1e-5};
        std::size_t repetitions = 5;
        bool antithetic = true;
    } sweep;

    /// Bandwidth actually used by a run at this particle count.
    [[nodiscard]] double resolved_epsilon() const;
    [[nodiscard]] SimGrid grid() const;
    [[nodiscard]] HestonParams model_params() const;
};

/// Throws Error(Config) with the offending key path ("kernel.delta: ...").
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON (sorted keys, every field present). parse_config(to_json(c)) == c.
std::string to_json(const RunConfig& config);

/// 16 hex digits of FNV-1a over the compact canonical JSON.
std::string config_hash(const RunConfig& config);

/// `lsvpm config=<hash> seed=<seed>`, the first line of every output file.
std::string output_header(const RunConfig& config);

std::string to_string(ModelVariant variant);

}  // namespace lsvpm
