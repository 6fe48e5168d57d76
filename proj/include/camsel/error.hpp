#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace camsel {

enum class ErrorCode {
    Io,
    BadMagic,
    UnsupportedVersion,
    UnsupportedDtype,
    BadHeader,
    LengthMismatch,
    NonFinite,
    InvalidArgument,
    OutOfRange,
    DimensionMismatch,
    InvalidRecord,
    Infeasible,
    MalformedCsv,
    MalformedJson,
    MissingInput,
    EmptyInput,
};

/// Stable identifier used in machine-readable CLI error output.
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string context = {})
        : std::runtime_error(message), code_(code), context_(std::move(context)) {}

    ErrorCode code() const noexcept { return code_; }

    /// Offending file, class or sample, when known.
    const std::string& context() const noexcept { return context_; }

private:
    ErrorCode code_;
    std::string context_;
};

}  // namespace camsel
