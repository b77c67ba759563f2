#pragma once

#include <stdexcept>
#include <string>

namespace kldetect {

// module-qualified error codes; the CLI maps these onto exit codes
enum class ErrorCode {
  // flowdata
  EmptyFile,
  MissingLabelColumn,
  MalformedRow,
  TooManyClasses,
  EmptyTable,
  DimensionMismatch,
  InsufficientRows,
  NonFiniteData,
  IoError,
  // resample
  MinorityTooSmall,
  // featsel
  SingleClass,
  IndexOutOfRange,
  // learners
  TrainingSetTooLarge,
  // ensemble
  EvenMemberCount,
  FoldTooSmall,
  DegenerateHoldout,
  // evaluate
  LengthMismatch,
  SingleClassLabels,
  // explain
  EmptyBackground,
  DegeneratePerturbations,
  SchemaMismatch,
  // generic
  InvalidArgument,
  ParseError,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyFile: return "flowdata.empty_file";
    case ErrorCode::MissingLabelColumn: return "flowdata.missing_label_column";
    case ErrorCode::MalformedRow: return "flowdata.malformed_row";
    case ErrorCode::TooManyClasses: return "flowdata.too_many_classes";
    case ErrorCode::EmptyTable: return "flowdata.empty_table";
    case ErrorCode::DimensionMismatch: return "flowdata.dimension_mismatch";
    case ErrorCode::InsufficientRows: return "flowdata.insufficient_rows";
    case ErrorCode::NonFiniteData: return "flowdata.non_finite_data";
    case ErrorCode::IoError: return "flowdata.io_error";
    case ErrorCode::MinorityTooSmall: return "resample.minority_too_small";
    case ErrorCode::SingleClass: return "featsel.single_class";
    case ErrorCode::IndexOutOfRange: return "featsel.index_out_of_range";
    case ErrorCode::TrainingSetTooLarge: return "learners.training_set_too_large";
    case ErrorCode::EvenMemberCount: return "ensemble.even_member_count";
    case ErrorCode::FoldTooSmall: return "ensemble.fold_too_small";
    case ErrorCode::DegenerateHoldout: return "ensemble.degenerate_holdout";
    case ErrorCode::LengthMismatch: return "evaluate.length_mismatch";
    case ErrorCode::SingleClassLabels: return "evaluate.single_class_labels";
    case ErrorCode::EmptyBackground: return "explain.empty_background";
    case ErrorCode::DegeneratePerturbations: return "explain.degenerate_perturbations";
    case ErrorCode::SchemaMismatch: return "explain.schema_mismatch";
    case ErrorCode::InvalidArgument: return "common.invalid_argument";
    case ErrorCode::ParseError: return "common.parse_error";
  }
  return "common.unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace kldetect
