#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vlab {

enum class ErrorCode {
  NullSet,
  Unsupported,
  QuadratureFailure,
  PreconditionViolation,
  ZeroModular,
  EvalFailure,
  HypothesisFail,
  ConstructionFailure,
  BandEmpty,
  Skipped,
  UnknownCorpus,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NullSet: return "NULL_SET";
    case ErrorCode::Unsupported: return "UNSUPPORTED";
    case ErrorCode::QuadratureFailure: return "QUADRATURE_FAILURE";
    case ErrorCode::PreconditionViolation: return "PRECONDITION_VIOLATION";
    case ErrorCode::ZeroModular: return "ZERO_MODULAR";
    case ErrorCode::EvalFailure: return "EVAL_FAILURE";
    case ErrorCode::HypothesisFail: return "HYPOTHESIS_FAIL";
    case ErrorCode::ConstructionFailure: return "CONSTRUCTION_FAILURE";
    case ErrorCode::BandEmpty: return "BAND_EMPTY";
    case ErrorCode::Skipped: return "SKIPPED";
    case ErrorCode::UnknownCorpus: return "UNKNOWN_CORPUS";
    case ErrorCode::ParseError: return "PARSE_ERROR";
  }
  return "UNKNOWN";
}

/// Exception carrying one of the library's error codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vlab
