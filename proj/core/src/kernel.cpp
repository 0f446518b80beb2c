#include "lsvpm/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lsvpm/errors.hpp"
#include "lsvpm/parallel.hpp"

namespace lsvpm {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684758586311649346576659258296;

}  // namespace

void check_ensemble(const ParticleEnsemble& e) {
    if (e.xs.size() != e.ys.size()) throw Error(ErrorCode::Validation, "ensemble xs/ys lengths differ");
    for (std::size_t i = 0; i < e.xs.size(); ++i) {
        if (!std::isfinite(e.xs[i]) || !std::isfinite(e.ys[i])) {
            throw Error(ErrorCode::Validation, "ensemble has a non-finite entry at particle " + std::to_string(i));
        }
    }
}

KernelConstants kernel_constants(KernelFamily family) {
    switch (family) {
        case KernelFamily::Gaussian:
            // max |K'| at u = 1
            return {kInvSqrt2Pi, kInvSqrt2Pi * std::exp(-0.5), std::numeric_limits<double>::infinity()};
        case KernelFamily::Quartic:
            // K' = -(15/4) u (1 - u^2), extremal at u = 1/sqrt(3)
            return {15.0 / 16.0, 15.0 / 4.0 * (1.0 / std::numbers::sqrt3) * (2.0 / 3.0), 1.0};
        case KernelFamily::Epanechnikov:
            return {0.75, 1.5, 1.0};
    }
    return {0, 0, 0};
}

double kernel_value(KernelFamily family, double u) {
    switch (family) {
        case KernelFamily::Gaussian: return kInvSqrt2Pi * std::exp(-0.5 * u * u);
        case KernelFamily::Quartic: {
            const double a = 1.0 - u * u;
            return a > 0.0 ? (15.0 / 16.0) * a * a : 0.0;
        }
        case KernelFamily::Epanechnikov: {
            const double a = 1.0 - u * u;
            return a > 0.0 ? 0.75 * a : 0.0;
        }
    }
    return 0.0;
}

double mollifier(const KernelSpec& spec, double u) { return kernel_value(spec.family, u / spec.epsilon) / spec.epsilon; }

KernelEstimator::KernelEstimator(std::span<const double> xs, std::span<const double> g2_values, KernelSpec spec,
                                 Normalization normalization, BinnedOptions binned)
    : spec_(spec), normalization_(normalization), binned_(binned) {
    require_valid(validate(spec), "KernelSpec");
    if (xs.size() != g2_values.size()) throw Error(ErrorCode::Validation, "kernel sources: length mismatch");
    if (xs.empty()) throw Error(ErrorCode::Validation, "kernel sources: need N >= 1");
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return xs[a] < xs[b] || (xs[a] == xs[b] && g2_values[a] < g2_values[b]);
    });
    xs_.reserve(xs.size());
    g2_.reserve(xs.size());
    for (auto i : order) {
        xs_.push_back(xs[i]);
        g2_.push_back(g2_values[i]);
        max_abs_g2_ = std::max(max_abs_g2_, std::abs(g2_values[i]));
    }
    inv_eps_ = 1.0 / spec_.epsilon;
    scale_ = normalization_ == Normalization::RawSum ? inv_eps_ : 1.0 / static_cast<double>(xs_.size());
}

double KernelEstimator::weight(double distance) const {
    return scale_ * kernel_value(spec_.family, distance * inv_eps_);
}

KernelSums KernelEstimator::sum_range(double x, std::size_t begin, std::size_t end) const {
    KernelSums s;
    for (std::size_t j = begin; j < end; ++j) {
        const double w = weight(xs_[j] - x);
        s.weight += w;
        s.weighted += g2_[j] * w;
    }
    return s;
}

KernelSums KernelEstimator::sums(double x, KernelBackend backend) const {
    const std::size_t n = xs_.size();
    if (backend == KernelBackend::Naive) return sum_range(x, 0, n);

    const bool gaussian = spec_.family == KernelFamily::Gaussian;
    if (gaussian && !(binned_.gaussian_truncation > 0.0)) {
        throw Error(ErrorCode::BackendUnavailable, "binned backend needs a positive Gaussian truncation radius");
    }
    const double radius = spec_.epsilon * (gaussian ? binned_.gaussian_truncation : 1.0);
    const auto lo = std::lower_bound(xs_.begin(), xs_.end(), x - radius);
    const auto hi = std::upper_bound(lo, xs_.end(), x + radius);
    const auto begin = static_cast<std::size_t>(lo - xs_.begin());
    const auto end = static_cast<std::size_t>(hi - xs_.begin());
    KernelSums s = sum_range(x, begin, end);
    if (gaussian) {
        const double dropped = static_cast<double>(n - (end - begin));
        const double tail = dropped * weight(radius);
        const double tol = binned_.tail_tolerance;
        if (tail > tol * (s.weight + spec_.delta) || tail * max_abs_g2_ > tol * (std::abs(s.weighted) + spec_.delta)) {
            return sum_range(x, 0, n);
        }
    }
    return s;
}

double KernelEstimator::conditional(double x, KernelBackend backend) const {
    const auto s = sums(x, backend);
    const double den = s.weight + spec_.delta;
    if (!(den > 0.0)) {
        throw Error(ErrorCode::ZeroDenominator, "all kernel weights vanished; bandwidth too small for delta = 0");
    }
    return (s.weighted + spec_.delta) / den;
}

double KernelEstimator::ratio(double x, KernelBackend backend) const {
    const auto s = sums(x, backend);
    const double num = s.weight + spec_.delta;
    const double den = s.weighted + spec_.delta;
    if (!(den > 0.0) || !(num > 0.0)) {
        throw Error(ErrorCode::ZeroDenominator, "leverage ratio undefined: vanishing kernel sums with delta = 0");
    }
    return std::sqrt(num) / std::sqrt(den);
}

std::vector<double> KernelEstimator::ratios(std::span<const double> queries, KernelBackend backend,
                                            unsigned threads) const {
    std::vector<double> out(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t i) { out[i] = ratio(queries[i], backend); });
    return out;
}

namespace {

std::vector<double> apply_g2(const ParticleEnsemble& e, const G2Function& g2) {
    check_ensemble(e);
    std::vector<double> v(e.ys.size());
    std::transform(e.ys.begin(), e.ys.end(), v.begin(), g2);
    return v;
}

}  // namespace

double nw_conditional(const ParticleEnsemble& ensemble, const G2Function& g2, double x, const KernelSpec& spec,
                      Normalization normalization) {
    const auto values = apply_g2(ensemble, g2);
    return KernelEstimator(ensemble.xs, values, spec, normalization).conditional(x);
}

double leverage_ratio(const ParticleEnsemble& ensemble, const G2Function& g2, double x, const KernelSpec& spec,
                      Normalization normalization) {
    const auto values = apply_g2(ensemble, g2);
    return KernelEstimator(ensemble.xs, values, spec, normalization).ratio(x);
}

std::vector<double> nw_batch(const ParticleEnsemble& ensemble, const G2Function& g2, const KernelSpec& spec,
                             KernelBackend backend, unsigned threads, Normalization normalization,
                             BinnedOptions binned) {
    const auto values = apply_g2(ensemble, g2);
    return KernelEstimator(ensemble.xs, values, spec, normalization, binned).ratios(ensemble.xs, backend, threads);
}

double amise_bandwidth(double scale, std::size_t particles, double c) {
    return c * scale * std::pow(static_cast<double>(particles), -0.2);
}

}  // namespace lsvpm
