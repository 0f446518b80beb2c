#include "lsvpm/coefficients.hpp"

#include <algorithm>
#include <cmath>

#include "lsvpm/errors.hpp"
#include "lsvpm/wasserstein.hpp"

namespace lsvpm {

DriftDiffusion regularised_coeffs(const RegularisedCoeffs& c, double t, double x, double y,
                                  const ParticleEnsemble& ensemble) {
    const auto& g = c.g;
    const double ratio = leverage_ratio(
        ensemble, [&g](double yy) { const double v = g(yy); return v * v; }, x, c.kernel, c.normalization);
    const double sigma = g(y) * c.localvol(t, std::exp(x)) * ratio;
    return {-0.5 * sigma * sigma, sigma};
}

double sigma_tilde(const RegularisedCoeffs& c, double t, double x, double y, const ParticleEnsemble& ensemble) {
    return regularised_coeffs(c, t, x, y, ensemble).diffusion;
}

double b_tilde(const RegularisedCoeffs& c, double t, double x, double y, const ParticleEnsemble& ensemble) {
    return regularised_coeffs(c, t, x, y, ensemble).drift;
}

DriftDiffusion heston_lsv_coeffs(const LocalVolFn& localvol, const KernelSpec& kernel, double rate, double t,
                                 double s, double v, const ParticleEnsemble& ensemble) {
    if (!(s > 0)) throw Error(ErrorCode::Validation, "heston_lsv_coeffs needs s > 0");
    const double ratio = leverage_ratio(ensemble, [](double vv) { return std::max(vv, 0.0); }, s, kernel);
    const double alpha = localvol(t, s) * ratio;
    return {rate * s, std::sqrt(std::max(v, 0.0)) * s * alpha};
}

LipschitzCertificate LipschitzCertificate::compute(double a1, double a2, double a3, double lg, double ldup,
                                                   double lk, double epsilon, double delta) {
    LipschitzCertificate c{a1, a2, a3, lg, ldup, lk, epsilon, delta};
    // f(x, y) = g^2(y) K((x - x1) / eps): |df/dx| <= A1^2 L_K / eps, |df/dy| <= 2 A1 L_g A3.
    // The max(1, A1^2) factor also covers the g = 1 expectation E[K].
    c.m1 = std::max(1.0, a1 * a1) * lk + 2.0 * a1 * lg * a3 * epsilon;
    const double e_g = a1 * a1 * a3 + delta;
    const double e_1 = a3 + delta;
    const double two_eps_delta2 = 2.0 * epsilon * delta * delta;
    c.c1 = a1 * a2 * (e_g * c.m1 + e_1 * c.m1) / two_eps_delta2;
    c.c2 = lk * a1 * a1 * a1 * a2 * e_1 / two_eps_delta2 + lk * a1 * a2 * e_g / two_eps_delta2;
    c.c3 = a2 * std::sqrt(e_1) * lg / std::sqrt(delta);
    c.c4 = a1 * std::sqrt(e_1) * ldup / std::sqrt(delta);
    c.l = std::max({c.c1, c.c2 + c.c4, c.c3});
    return c;
}

LipschitzCertificate LipschitzCertificate::for_coeffs(const RegularisedCoeffs& c) {
    const auto& bounds = c.g.bounds();
    if (!bounds) throw Error(ErrorCode::Validation, "Lipschitz certificate needs a bounded g (A1, L_g)");
    if (!(c.kernel.delta > 0)) throw Error(ErrorCode::Validation, "Lipschitz certificate needs delta > 0");
    if (c.normalization != Normalization::MeasureAverage) {
        throw Error(ErrorCode::Validation, "Lipschitz certificate is stated for measure-averaged kernel sums");
    }
    const auto k = kernel_constants(c.kernel.family);
    const double ldup = std::max(c.localvol.lipschitz_log_spot(), c.localvol.holder_time());
    return compute(bounds->a1, c.localvol.cap(), k.a3, bounds->lg, ldup, k.lk, c.kernel.epsilon, c.kernel.delta);
}

double LipschitzCertificate::sigma_bound() const { return a1 * a2 * std::sqrt((a3 + delta) / delta); }

double LipschitzMeasurement::worst() const { return std::max({x, y, t, measure}); }

LipschitzMeasurement empirical_lipschitz(const RegularisedCoeffs& c, std::span<const LipschitzProbe> probes) {
    LipschitzMeasurement m;
    m.certificate = LipschitzCertificate::for_coeffs(c);
    for (const auto& p : probes) {
        const double base = sigma_tilde(c, p.t, p.x, p.y, p.ensemble);
        if (p.dx != 0.0) {
            const double v = sigma_tilde(c, p.t, p.x + p.dx, p.y, p.ensemble);
            m.x = std::max(m.x, std::abs(v - base) / std::abs(p.dx));
        }
        if (p.dy != 0.0) {
            const double v = sigma_tilde(c, p.t, p.x, p.y + p.dy, p.ensemble);
            m.y = std::max(m.y, std::abs(v - base) / std::abs(p.dy));
        }
        if (p.dt != 0.0) {
            const double v = sigma_tilde(c, p.t + p.dt, p.x, p.y, p.ensemble);
            m.t = std::max(m.t, std::abs(v - base) / std::sqrt(std::abs(p.dt)));
        }
        if (!p.perturbed.xs.empty()) {
            const auto mu = EmpiricalMeasure::from_ensemble(p.ensemble);
            const auto nu = EmpiricalMeasure::from_ensemble(p.perturbed);
            const auto method = mu.atoms.size() <= 8 ? AssignmentMethod::Exhaustive : AssignmentMethod::Hungarian;
            const double w2 = w2_2d_small(mu, nu, method);
            if (w2 > 0.0) {
                const double v = sigma_tilde(c, p.t, p.x, p.y, p.perturbed);
                m.measure = std::max(m.measure, std::abs(v - base) / w2);
            }
        }
        ++m.probes;
    }
    return m;
}

}  // namespace lsvpm
