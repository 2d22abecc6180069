#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbsa {

enum class ErrorCode {
  LengthMismatch,
  EmptyTemplate,
  ShapeMismatch,
  InvalidParams,
  DimMismatch,
  KindMismatch,
  ParamMismatch,
  IncompatibleGenome,
  EmptyTargets,
  InvalidConfig,
  EmptyScores,
  DegenerateDistribution,
  MeanOrderViolation,
  MissingAttackResult,
  ParseError,
  ShapeInconsistent,
  NoResults,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyTemplate: return "EmptyTemplate";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::ParamMismatch: return "ParamMismatch";
    case ErrorCode::IncompatibleGenome: return "IncompatibleGenome";
    case ErrorCode::EmptyTargets: return "EmptyTargets";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::DegenerateDistribution: return "DegenerateDistribution";
    case ErrorCode::MeanOrderViolation: return "MeanOrderViolation";
    case ErrorCode::MissingAttackResult: return "MissingAttackResult";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ShapeInconsistent: return "ShapeInconsistent";
    case ErrorCode::NoResults: return "NoResults";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace cbsa
