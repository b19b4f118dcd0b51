#include "collapse/error.hpp"

namespace collapse {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::insufficient_data: return "insufficient-data";
        case ErrorCode::invalid_model: return "invalid-model";
        case ErrorCode::degenerate_cutoff: return "degenerate-cutoff";
        case ErrorCode::grid_too_small: return "grid-too-small";
        case ErrorCode::too_large: return "too-large";
        case ErrorCode::numerical_failure: return "numerical-failure";
        case ErrorCode::config_error: return "config-error";
        case ErrorCode::io_error: return "io-error";
    }
    return "unknown";
}

}  // namespace collapse
