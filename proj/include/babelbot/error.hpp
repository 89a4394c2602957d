#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace babelbot {

enum class ErrorCode {
  // langid
  EmptyText,
  NoProfileMatch,
  // engine
  PreconditionFailed,
  LlmTimeout,
  LlmProtocolError,
  UnknownActionVerb,
  NonmonotoneNumbering,
  NegativeParameter,
  Indeterminate,
  NoFixture,
  // perception
  DegenerateMask,
  NonFiniteScore,
  AllMassDegraded,
  NoDepthAvailable,
  NonPositiveDepth,
  InvalidTransform,
  NumericalDivergence,
  NoCandidates,
  // simulator / executor
  NoPath,
  UnreachableObject,
  NotApproved,
  AbortRequested,
  // metrics
  EmptyDataset,
  EmptyInput,
  EmptyReference,
  ScorerUnavailable,
  // gateway
  SessionBusy,
  SessionUnknown,
  NoPendingPlan,
  // io
  InvalidFormat,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what) { throw Error(code, what); }

} // namespace babelbot
