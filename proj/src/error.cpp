#include "grbsde/error.hpp"

namespace grbsde {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_intensity: return "invalid-intensity";
    case ErrorCode::empty_grid: return "empty-grid";
    case ErrorCode::invalid_grid: return "invalid-grid";
    case ErrorCode::invalid_a_schedule: return "invalid-a-schedule";
    case ErrorCode::tree_too_large: return "tree-too-large";
    case ErrorCode::incomplete_process: return "incomplete-process";
    case ErrorCode::not_a_martingale_increment: return "not-a-martingale-increment";
    case ErrorCode::mark_dimension_error: return "mark-dimension-error";
    case ErrorCode::brownian_dimension_error: return "brownian-dimension-error";
    case ErrorCode::missing_barrier: return "missing-barrier";
    case ErrorCode::non_monotone_step: return "non-monotone-step";
    case ErrorCode::solver_failure: return "solver-failure";
    case ErrorCode::invalid_schedule: return "invalid-schedule";
    case ErrorCode::invalid_stopping_time: return "invalid-stopping-time";
    case ErrorCode::enumeration_too_large: return "enumeration-too-large";
    case ErrorCode::invalid_space: return "invalid-space";
    case ErrorCode::insufficient_history: return "insufficient-history";
    case ErrorCode::precondition_violated: return "precondition-violated";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::config_error: return "config-error";
    }
    return "unknown-error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

}  // namespace grbsde
