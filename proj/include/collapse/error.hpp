#pragma once

#include <stdexcept>
#include <string>

namespace collapse {

enum class ErrorCode {
    invalid_argument = 1,
    insufficient_data,
    invalid_model,
    degenerate_cutoff,
    grid_too_small,
    too_large,
    numerical_failure,
    config_error,
    io_error,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// C layer can map it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace collapse
