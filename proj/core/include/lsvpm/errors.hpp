#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lsvpm {

enum class ErrorCode {
    Validation,
    OutOfBounds,
    NoConvergence,
    QuadratureFailure,
    DegenerateDenominator,
    ZeroDenominator,
    BackendUnavailable,
    NonFinite,
    IncompatibleLevels,
    GridMismatch,
    NonPositiveData,
    TooLarge,
    Io,
    Config,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace lsvpm
