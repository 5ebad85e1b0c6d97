#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dhw {

enum class ErrorCode {
  invalid_argument,
  degenerate_parameters,
  invalid_target,
  misaligned_forecast,
  empty_history,
  insufficient_data,
  empty_training_set,
  dimension_mismatch,
  misaligned_series,
  wrong_history_length,
  horizon_coverage,
  out_of_range_stage,
  trace_coverage,
  empty_ledger,
  file_not_found,
  schema_violation,
  validation,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dhw
