#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lsvpm {

/// Heston parameter set plus the flat rate and spot it is quoted against.
struct HestonParams {
    double v0 = 0.0;
    double kappa = 0.0;
    double theta = 0.0;
    double xi = 0.0;
    double rho = 0.0;
    double rate = 0.0;
    double spot = 100.0;

    /// Parameters that generate the synthetic "market" surface.
    static HestonParams market() { return {0.0094, 1.4124, 0.0137, 0.2988, -0.1194, 0.0, 100.0}; }
    /// Perturbed parameters driving the variance factor of the calibrated model.
    static HestonParams modified() { return {0.014, 1.4, 0.01, 0.3, -0.2, 0.0, 100.0}; }
};

/// Ornstein-Uhlenbeck factor dY = m (theta - Y) dt + gamma dW^y with corr(W^x, W^y) = rho_xy.
struct OUParams {
    double m = 1.0;
    double theta = 0.0;
    double gamma = 0.0;
    double rho_xy = 0.0;
};

enum class KernelFamily { Gaussian, Quartic, Epanechnikov };

struct KernelSpec {
    KernelFamily family = KernelFamily::Gaussian;
    double epsilon = 1.0;
    double delta = 0.0;
};

struct SimGrid {
    double horizon = 1.0;
    std::size_t steps = 100;
    std::size_t particles = 1000;
    std::uint64_t seed = 0;

    [[nodiscard]] double dt() const { return horizon / static_cast<double>(steps); }
    [[nodiscard]] double time(std::size_t step) const {
        return horizon * static_cast<double>(step) / static_cast<double>(steps);
    }
};

/// Boundedness/Lipschitz certificate for g: |g| <= a1 and Lip(g) <= lg.
struct GBounds {
    double a1 = 0.0;
    double lg = 0.0;
};

/// Volatility-factor transform g(y).
class GFunction {
public:
    enum class Kind { Identity, Exp, Sqrt, BoundedCustom };

    explicit GFunction(Kind kind = Kind::Identity, std::optional<GBounds> bounds = std::nullopt);

    /// A bounded user function; the certificate is mandatory for this kind.
    static GFunction custom(std::function<double(double)> fn, GBounds bounds);
    static GFunction constant(double c);

    [[nodiscard]] double operator()(double y) const;
    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] const std::optional<GBounds>& bounds() const { return bounds_; }

    /// Sample g on [lo, hi] and report the first violated certificate clause, if any.
    [[nodiscard]] std::optional<std::string> check_bounds(double lo, double hi,
                                                          std::size_t samples = 2001) const;

private:
    Kind kind_;
    std::optional<GBounds> bounds_;
    std::function<double(double)> custom_;
};

using ValidationReport = std::vector<std::string>;

ValidationReport validate(const HestonParams& p);
ValidationReport validate(const OUParams& p);
ValidationReport validate(const KernelSpec& k);
ValidationReport validate(const SimGrid& g);

/// Throws Error(Validation) listing every violation when the report is nonempty.
void require_valid(const ValidationReport& report, const std::string& what);

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

}  // namespace lsvpm
