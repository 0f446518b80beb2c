#include "lsvpm/model.hpp"

#include <cmath>
#include <sstream>

#include "lsvpm/errors.hpp"

namespace lsvpm {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Validation: return "Validation";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::QuadratureFailure: return "QuadratureFailure";
        case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorCode::ZeroDenominator: return "ZeroDenominator";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::IncompatibleLevels: return "IncompatibleLevels";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::NonPositiveData: return "NonPositiveData";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Config: return "Config";
    }
    return "Unknown";
}

GFunction::GFunction(Kind kind, std::optional<GBounds> bounds) : kind_(kind), bounds_(bounds) {
    if (kind == Kind::BoundedCustom) {
        throw Error(ErrorCode::Validation, "BoundedCustom g requires a function; use GFunction::custom");
    }
}

GFunction GFunction::custom(std::function<double(double)> fn, GBounds bounds) {
    GFunction g(Kind::Identity, bounds);
    g.kind_ = Kind::BoundedCustom;
    g.custom_ = std::move(fn);
    return g;
}

GFunction GFunction::constant(double c) {
    return custom([c](double) { return c; }, GBounds{std::abs(c), 0.0});
}

double GFunction::operator()(double y) const {
    switch (kind_) {
        case Kind::Identity: return y;
        case Kind::Exp: return std::exp(y);
        case Kind::Sqrt: return std::sqrt(std::max(y, 0.0));
        case Kind::BoundedCustom: return custom_(y);
    }
    return y;
}

std::optional<std::string> GFunction::check_bounds(double lo, double hi, std::size_t samples) const {
    if (!bounds_) return std::nullopt;
    const double h = (hi - lo) / static_cast<double>(samples - 1);
    double prev = (*this)(lo);
    for (std::size_t i = 0; i < samples; ++i) {
        const double y = lo + h * static_cast<double>(i);
        const double gy = (*this)(y);
        if (std::abs(gy) > bounds_->a1 * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "|g(" << y << ")| = " << std::abs(gy) << " exceeds A1 = " << bounds_->a1;
            return os.str();
        }
        if (i > 0 && std::abs(gy - prev) > bounds_->lg * h * (1.0 + 1e-9) + 1e-15) {
            std::ostringstream os;
            os << "slope near y = " << y << " exceeds L_g = " << bounds_->lg;
            return os.str();
        }
        prev = gy;
    }
    return std::nullopt;
}

ValidationReport validate(const HestonParams& p) {
    ValidationReport r;
    if (!(p.v0 > 0)) r.emplace_back("v0 > 0");
    if (!(p.kappa > 0)) r.emplace_back("kappa > 0");
    if (!(p.theta > 0)) r.emplace_back("theta > 0");
    if (!(p.xi > 0)) r.emplace_back("xi > 0");
    if (!(p.rho >= -1.0 && p.rho <= 1.0)) r.emplace_back("rho ∈ [-1,1]");
    if (!(p.spot > 0)) r.emplace_back("spot > 0");
    if (!std::isfinite(p.rate)) r.emplace_back("rate finite");
    return r;
}

ValidationReport validate(const OUParams& p) {
    ValidationReport r;
    if (!(p.m > 0)) r.emplace_back("m > 0");
    if (!(p.gamma > 0)) r.emplace_back("gamma > 0");
    if (!(p.rho_xy >= -1.0 && p.rho_xy <= 1.0)) r.emplace_back("rho_xy ∈ [-1,1]");
    if (!std::isfinite(p.theta)) r.emplace_back("theta finite");
    return r;
}

ValidationReport validate(const KernelSpec& k) {
    ValidationReport r;
    if (!(k.epsilon > 0) || !std::isfinite(k.epsilon)) r.emplace_back("epsilon > 0");
    if (!(k.delta >= 0) || !std::isfinite(k.delta)) r.emplace_back("delta ≥ 0");
    return r;
}

ValidationReport validate(const SimGrid& g) {
    ValidationReport r;
    if (!(g.horizon > 0)) r.emplace_back("horizon > 0");
    if (g.steps < 1) r.emplace_back("steps ≥ 1");
    if (g.particles < 2) r.emplace_back("particles ≥ 2");
    return r;
}

void require_valid(const ValidationReport& report, const std::string& what) {
    if (report.empty()) return;
    std::string msg = what + " violates:";
    for (const auto& v : report) msg += " [" + v + "]";
    throw Error(ErrorCode::Validation, msg);
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::Gaussian: return "gaussian";
        case KernelFamily::Quartic: return "quartic";
        case KernelFamily::Epanechnikov: return "epanechnikov";
    }
    return "gaussian";
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "gaussian") return KernelFamily::Gaussian;
    if (name == "quartic") return KernelFamily::Quartic;
    if (name == "epanechnikov") return KernelFamily::Epanechnikov;
    throw Error(ErrorCode::Config, "unknown kernel family '" + name + "'");
}

}  // namespace lsvpm
