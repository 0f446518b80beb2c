#pragma once

#include <span>
#include <vector>

#include "lsvpm/kernel.hpp"
#include "lsvpm/model.hpp"
#include "lsvpm/surface.hpp"

namespace lsvpm {

enum class ModelKind { LogMV, HestonLsv };

/// Regularised log-price McKean-Vlasov coefficients:
///   sigma~ = g(y) sigma_Dup(t, e^x) sqrt(E[Phi] + delta) / sqrt(E[g^2(Y) Phi] + delta),  b~ = -sigma~^2 / 2
struct RegularisedCoeffs {
    LocalVolFn localvol;
    GFunction g;
    KernelSpec kernel;
    Normalization normalization = Normalization::RawSum;
};

struct DriftDiffusion {
    double drift = 0.0;
    double diffusion = 0.0;
};

/// Drift and diffusion of the log-price from a single sigma~ evaluation.
DriftDiffusion regularised_coeffs(const RegularisedCoeffs& c, double t, double x, double y,
                                  const ParticleEnsemble& ensemble);
double sigma_tilde(const RegularisedCoeffs& c, double t, double x, double y, const ParticleEnsemble& ensemble);
double b_tilde(const RegularisedCoeffs& c, double t, double x, double y, const ParticleEnsemble& ensemble);

/// Heston-type LSV price coefficients: drift r s, diffusion sqrt(v+) s alpha(t, s) with
/// alpha = sigma_Dup(t, s) * leverage_ratio(ensemble, V+, s). ensemble.ys holds raw variances.
DriftDiffusion heston_lsv_coeffs(const LocalVolFn& localvol, const KernelSpec& kernel, double rate, double t,
                                 double s, double v, const ParticleEnsemble& ensemble);

/// Lipschitz constants of sigma~ assembled from the bounds A1 (g), A2 (sigma_Dup), A3 (K) and
/// the Lipschitz constants L_g, L_Dup, L_K, for the measure-averaged kernel expectations.
struct LipschitzCertificate {
    double a1 = 0, a2 = 0, a3 = 0, lg = 0, ldup = 0, lk = 0;
    double epsilon = 0, delta = 0;
    double m1 = 0;  // |E^mu[g^2 K] - E^nu[g^2 K]| <= (m1 / epsilon) W2(mu, nu)
    double c1 = 0;  // measure term, O(1 / (epsilon delta^2))
    double c2 = 0;  // state term through the kernel, O(1 / (epsilon delta^2))
    double c3 = 0;  // vol-factor term, O(1 / sqrt(delta))
    double c4 = 0;  // local-vol term, O(1 / sqrt(delta))
    double l = 0;   // max(c1, c2 + c4, c3)

    static LipschitzCertificate compute(double a1, double a2, double a3, double lg, double ldup, double lk,
                                        double epsilon, double delta);
    /// Uses the clamp cap of the local vol as A2 and its measured spline bounds as L_Dup.
    /// Throws Validation when g carries no bounds certificate or delta is not positive.
    static LipschitzCertificate for_coeffs(const RegularisedCoeffs& c);

    /// Upper bound on sigma~: A1 A2 sqrt((A3 + delta) / delta).
    [[nodiscard]] double sigma_bound() const;
};

/// One probe: a base point and the perturbations applied one coordinate at a time.
/// `perturbed` (optional, same atom count) is the measure-perturbed ensemble.
struct LipschitzProbe {
    double t = 0, x = 0, y = 0;
    double dt = 0, dx = 0, dy = 0;
    ParticleEnsemble ensemble;
    ParticleEnsemble perturbed;
};

struct LipschitzMeasurement {
    double x = 0;        // max |d sigma~| / |dx|
    double y = 0;        // max |d sigma~| / |dy|
    double t = 0;        // max |d sigma~| / sqrt|dt|
    double measure = 0;  // max |d sigma~| / W2(mu, mu')
    std::size_t probes = 0;
    LipschitzCertificate certificate;

    [[nodiscard]] double worst() const;
};

LipschitzMeasurement empirical_lipschitz(const RegularisedCoeffs& c, std::span<const LipschitzProbe> probes);

}  // namespace lsvpm
