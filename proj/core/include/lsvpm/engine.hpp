#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lsvpm/coefficients.hpp"
#include "lsvpm/kernel.hpp"
#include "lsvpm/model.hpp"
#include "lsvpm/surface.hpp"

namespace lsvpm {

/// Correlated Brownian increments for N particles over M steps, generated on demand.
/// Increments are drawn on a grid `refinement` times finer than the simulation grid and summed,
/// so runs at different M with the same finest grid share one Brownian path.
/// dW^y = rho dW^x + sqrt(1 - rho^2) dZ.
class PathBundle {
public:
    PathBundle(std::uint64_t seed, double rho, double horizon, std::size_t steps, std::size_t refinement = 1);

    struct Increment {
        double wx;
        double wy;
    };
    [[nodiscard]] Increment increment(std::uint64_t stream_id, std::size_t step) const;

    /// Dense [particle][step][component] copy for small problems and inspection.
    [[nodiscard]] std::vector<double> materialize(std::size_t particles) const;

    [[nodiscard]] std::size_t steps() const { return steps_; }
    [[nodiscard]] std::size_t refinement() const { return refinement_; }
    [[nodiscard]] double rho() const { return rho_; }

private:
    std::uint64_t seed_;
    double rho_;
    double rho_bar_;
    double sqrt_fine_dt_;
    std::size_t steps_;
    std::size_t refinement_;
};

/// Per-step view handed to an observer: the frozen ensemble and the coefficients computed from it.
struct StepRecord {
    std::size_t step;
    double time;
    const ParticleEnsemble& frozen;
    std::span<const double> drift;
    std::span<const double> diffusion;
};
using StepObserver = std::function<void(const StepRecord&)>;

struct EngineOptions {
    KernelBackend backend = KernelBackend::Binned;
    unsigned threads = 1;
    /// Store every k-th step (and the initial state); 0 stores only the terminal ensemble.
    std::size_t snapshot_stride = 0;
    /// Noise is generated on steps * refinement sub-steps and aggregated.
    std::size_t refinement = 1;
    /// Noise stream id per particle; empty means particle i uses stream i.
    std::vector<std::uint64_t> stream_ids;
    /// Particle i + N/2 is driven by the negated noise of particle i (N must be even).
    bool antithetic = false;
    StepObserver observer;
};

struct HestonLsvOptions : EngineOptions {
    /// false forces alpha = 1 (pure Heston dynamics).
    bool calibrate = true;
    /// Only the first n particles feed the kernel estimator (0 = all).
    std::size_t leverage_sources = 0;
    /// Spot lattice on which alpha(t_m, s) is recorded every `leverage_stride` steps.
    std::vector<double> leverage_lattice;
    std::size_t leverage_stride = 1;
};

enum class OuScheme { Euler, Exact };

struct LogMvOptions : EngineOptions {
    OuScheme ou_scheme = OuScheme::Euler;
};

struct LeveragePoint {
    double time;
    double spot;
    double alpha;
};

struct Trajectory {
    ModelKind model = ModelKind::HestonLsv;
    SimGrid grid;
    double rate = 0.0;
    /// Initial state (s0 for Heston LSV; mean of x0 for log-MV).
    double initial_state = 0.0;
    std::vector<std::size_t> snapshot_steps;
    std::vector<ParticleEnsemble> snapshots;
    ParticleEnsemble terminal;
    /// Particle-steps where the variance was negative and entered as max(V, 0).
    std::size_t truncation_events = 0;
    std::vector<LeveragePoint> leverage;
};

/// Log-price McKean-Vlasov system: X by Euler-Maruyama with the regularised coefficients
/// evaluated against the frozen ensemble; Y by Euler or by its exact OU transition.
Trajectory simulate_log_mv(const RegularisedCoeffs& coeffs, const OUParams& ou, const SimGrid& grid,
                           std::span<const double> x0, std::span<const double> y0, const LogMvOptions& options = {});
Trajectory simulate_log_mv(const RegularisedCoeffs& coeffs, const OUParams& ou, const SimGrid& grid, double x0,
                           double y0, const LogMvOptions& options = {});

/// Heston-type LSV calibration loop: S by Euler, V by full-truncation Euler, alpha rebuilt
/// each step from the ensemble frozen at the start of that step.
Trajectory simulate_heston_lsv(const LocalVolFn& localvol, const KernelSpec& kernel, const HestonParams& params,
                               const SimGrid& grid, const HestonLsvOptions& options = {});

struct MartingaleReport {
    double discounted_mean = 0.0;
    double initial = 0.0;
    double discrepancy = 0.0;
    double std_error = 0.0;
    /// discrepancy / std_error
    double z_score = 0.0;
    [[nodiscard]] bool passes(double max_z = 4.0) const { return z_score <= max_z; }
};

MartingaleReport martingale_check(const Trajectory& trajectory, double rate);

struct HestonLsvConfig {
    LocalVolFn localvol;
    KernelSpec kernel;
    HestonParams params;
    HestonLsvOptions options;
};
struct LogMvConfig {
    RegularisedCoeffs coeffs;
    OUParams ou;
    double x0 = 0.0;
    double y0 = 0.0;
    LogMvOptions options;
};
using ModelConfig = std::variant<HestonLsvConfig, LogMvConfig>;

struct RefinementLevel {
    std::size_t steps;
    ParticleEnsemble terminal;
};

/// Runs each level on the Brownian path of the finest level (max of `levels`).
/// Throws IncompatibleLevels unless every level divides the finest.
std::vector<RefinementLevel> coupled_refinement(const ModelConfig& config, const SimGrid& grid,
                                                std::span<const std::size_t> levels);

/// Root-mean-square pathwise distance between two aligned terminal ensembles (x component, or y).
double strong_rms_error(const ParticleEnsemble& a, const ParticleEnsemble& b, bool use_y = false);

struct MomentProbe {
    double x = 0.0;  // max over stored times of mean(x^2)
    double y = 0.0;  // max over stored times of mean(y^2)
};
MomentProbe moment_probe(const Trajectory& trajectory);

/// CSV `step,time,particle,x_or_s,y_or_v` over all stored snapshots (terminal included).
void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path,
                          const std::string& header_comment = {});

}  // namespace lsvpm
