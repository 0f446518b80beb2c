#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "lsvpm/model.hpp"

namespace lsvpm {

/// One time slice of the particle cloud: states xs (log-price or price) and vol factors ys.
struct ParticleEnsemble {
    std::vector<double> xs;
    std::vector<double> ys;
    double time = 0.0;

    [[nodiscard]] std::size_t size() const { return xs.size(); }
};

/// Throws Validation on unequal lengths or non-finite entries.
void check_ensemble(const ParticleEnsemble& e);

/// Bounds of K used by the Lipschitz certificate: |K| <= a3, Lip(K) <= lk, support in [-radius, radius].
struct KernelConstants {
    double a3;
    double lk;
    double radius;
};
KernelConstants kernel_constants(KernelFamily family);

/// Unscaled kernel K(u), normalised and even.
double kernel_value(KernelFamily family, double u);

/// Phi_eps(u) = K(u / eps) / eps.
double mollifier(const KernelSpec& spec, double u);

/// How the kernel sums are scaled before the floor delta is added.
///  RawSum:         sum_j Phi_eps(x_j - x)             (the calibration loop, delta unscaled)
///  MeasureAverage: (1/N) sum_j K((x_j - x) / eps)     (expectation under the empirical measure)
enum class Normalization { RawSum, MeasureAverage };

enum class KernelBackend { Naive, Binned };

struct BinnedOptions {
    /// Gaussian sums are truncated at this many bandwidths; must be positive.
    double gaussian_truncation = 8.0;
    /// Queries whose dropped-tail bound exceeds this relative share fall back to the full sum.
    double tail_tolerance = 1e-9;
};

/// Weight sum and g2-weighted sum at one query point, before delta.
struct KernelSums {
    double weight = 0.0;
    double weighted = 0.0;
};

/// Kernel regression over a frozen set of source particles. Sources are held sorted by
/// (x, g2) so that every backend sums in a canonical order: results do not depend on the
/// order particles were supplied in.
class KernelEstimator {
public:
    KernelEstimator(std::span<const double> xs, std::span<const double> g2_values, KernelSpec spec,
                    Normalization normalization = Normalization::RawSum, BinnedOptions binned = {});

    [[nodiscard]] KernelSums sums(double x, KernelBackend backend = KernelBackend::Naive) const;

    /// (sum g2 Phi + delta) / (sum Phi + delta)
    [[nodiscard]] double conditional(double x, KernelBackend backend = KernelBackend::Naive) const;

    /// sqrt(sum Phi + delta) / sqrt(sum g2 Phi + delta)
    [[nodiscard]] double ratio(double x, KernelBackend backend = KernelBackend::Naive) const;

    [[nodiscard]] std::vector<double> ratios(std::span<const double> queries, KernelBackend backend,
                                             unsigned threads = 1) const;

    [[nodiscard]] const KernelSpec& spec() const { return spec_; }
    [[nodiscard]] std::size_t size() const { return xs_.size(); }

private:
    [[nodiscard]] double weight(double distance) const;
    [[nodiscard]] KernelSums sum_range(double x, std::size_t begin, std::size_t end) const;

    std::vector<double> xs_;
    std::vector<double> g2_;
    KernelSpec spec_;
    Normalization normalization_;
    BinnedOptions binned_;
    double scale_ = 1.0;        // multiplies K(u) to give one weight
    double inv_eps_ = 1.0;
    double max_abs_g2_ = 0.0;
};

using G2Function = std::function<double(double)>;

/// Nadaraya-Watson estimate of E[g2(Y) | X = x] with the delta floor.
double nw_conditional(const ParticleEnsemble& ensemble, const G2Function& g2, double x, const KernelSpec& spec,
                      Normalization normalization = Normalization::RawSum);

double leverage_ratio(const ParticleEnsemble& ensemble, const G2Function& g2, double x, const KernelSpec& spec,
                      Normalization normalization = Normalization::RawSum);

/// leverage_ratio at every particle position (self-interaction).
std::vector<double> nw_batch(const ParticleEnsemble& ensemble, const G2Function& g2, const KernelSpec& spec,
                             KernelBackend backend = KernelBackend::Binned, unsigned threads = 1,
                             Normalization normalization = Normalization::RawSum, BinnedOptions binned = {});

/// AMISE-style bandwidth c * scale * N^{-1/5}.
double amise_bandwidth(double scale, std::size_t particles, double c = 1.0);

}  // namespace lsvpm
