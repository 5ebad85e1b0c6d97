#include "dhw/error.hpp"

namespace dhw {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::degenerate_parameters: return "degenerate-parameters";
    case ErrorCode::invalid_target: return "invalid-target";
    case ErrorCode::misaligned_forecast: return "misaligned-forecast";
    case ErrorCode::empty_history: return "empty-history";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::empty_training_set: return "empty-training-set";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::misaligned_series: return "misaligned-series";
    case ErrorCode::wrong_history_length: return "wrong-history-length";
    case ErrorCode::horizon_coverage: return "horizon-coverage";
    case ErrorCode::out_of_range_stage: return "out-of-range-stage";
    case ErrorCode::trace_coverage: return "trace-coverage";
    case ErrorCode::empty_ledger: return "empty-ledger";
    case ErrorCode::file_not_found: return "file-not-found";
    case ErrorCode::schema_violation: return "schema-violation";
    case ErrorCode::validation: return "validation";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace dhw
