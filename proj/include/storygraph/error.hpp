#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace storygraph {

enum class ErrorCode {
  MalformedDocument,
  SchemaViolation,
  IntegrityViolation,
  EmptyGraph,
  EmptySelection,
  UnknownNode,
  WouldCreateCycle,
  PreconditionFailed,
  UnroutableRequest,
  BackendFailure,
  UnparseableDecomposition,
  CyclicDrafts,
  DanglingSuccessor,
  EmptySegment,
  InvalidPath,
  EmptyOrder,
  IOFailure,
  MissingAsset,
  CorruptProject,
  UnknownProject,
  Conflict,
  DomainError,
  LookupError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::IntegrityViolation: return "IntegrityViolation";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::WouldCreateCycle: return "WouldCreateCycle";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::UnroutableRequest: return "UnroutableRequest";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::UnparseableDecomposition: return "UnparseableDecomposition";
    case ErrorCode::CyclicDrafts: return "CyclicDrafts";
    case ErrorCode::DanglingSuccessor: return "DanglingSuccessor";
    case ErrorCode::EmptySegment: return "EmptySegment";
    case ErrorCode::InvalidPath: return "InvalidPath";
    case ErrorCode::EmptyOrder: return "EmptyOrder";
    case ErrorCode::IOFailure: return "IOFailure";
    case ErrorCode::MissingAsset: return "MissingAsset";
    case ErrorCode::CorruptProject: return "CorruptProject";
    case ErrorCode::UnknownProject: return "UnknownProject";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::LookupError: return "LookupError";
  }
  return "Unknown";
}

/// Every failure raised by the library. `subject` names the offending
/// document path, node id, ordinal or file; `stage` is set when the error
/// crossed a pipeline stage boundary.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string subject, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        subject_(std::move(subject)),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const {
    Error copy = *this;
    copy.stage_ = std::move(stage);
    return copy;
  }

 private:
  ErrorCode code_;
  std::string subject_;
  std::string detail_;
  std::string stage_;
};

}  // namespace storygraph
