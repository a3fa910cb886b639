#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grbsde {

enum class ErrorCode {
    invalid_intensity,
    empty_grid,
    invalid_grid,
    invalid_a_schedule,
    tree_too_large,
    incomplete_process,
    not_a_martingale_increment,
    mark_dimension_error,
    brownian_dimension_error,
    missing_barrier,
    non_monotone_step,
    solver_failure,
    invalid_schedule,
    invalid_stopping_time,
    enumeration_too_large,
    invalid_space,
    insufficient_history,
    precondition_violated,
    io_error,
    config_error,
};

/// Kebab-case name used in CLI output and python exceptions.
std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace grbsde
