#include "camsel/error.hpp"

namespace camsel {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Io: return "io";
        case ErrorCode::BadMagic: return "bad_magic";
        case ErrorCode::UnsupportedVersion: return "unsupported_version";
        case ErrorCode::UnsupportedDtype: return "unsupported_dtype";
        case ErrorCode::BadHeader: return "bad_header";
        case ErrorCode::LengthMismatch: return "length_mismatch";
        case ErrorCode::NonFinite: return "non_finite";
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::OutOfRange: return "out_of_range";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::InvalidRecord: return "invalid_record";
        case ErrorCode::Infeasible: return "infeasible";
        case ErrorCode::MalformedCsv: return "malformed_csv";
        case ErrorCode::MalformedJson: return "malformed_json";
        case ErrorCode::MissingInput: return "missing_input";
        case ErrorCode::EmptyInput: return "empty_input";
    }
    return "unknown";
}

}  // namespace camsel
