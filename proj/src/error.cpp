#include "babelbot/error.hpp"

namespace babelbot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::EmptyText: return "EmptyText";
  case ErrorCode::NoProfileMatch: return "NoProfileMatch";
  case ErrorCode::PreconditionFailed: return "PreconditionFailed";
  case ErrorCode::LlmTimeout: return "LlmTimeout";
  case ErrorCode::LlmProtocolError: return "LlmProtocolError";
  case ErrorCode::UnknownActionVerb: return "UnknownActionVerb";
  case ErrorCode::NonmonotoneNumbering: return "NonmonotoneNumbering";
  case ErrorCode::NegativeParameter: return "NegativeParameter";
  case ErrorCode::Indeterminate: return "Indeterminate";
  case ErrorCode::NoFixture: return "NoFixture";
  case ErrorCode::DegenerateMask: return "DegenerateMask";
  case ErrorCode::NonFiniteScore: return "NonFiniteScore";
  case ErrorCode::AllMassDegraded: return "AllMassDegraded";
  case ErrorCode::NoDepthAvailable: return "NoDepthAvailable";
  case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
  case ErrorCode::InvalidTransform: return "InvalidTransform";
  case ErrorCode::NumericalDivergence: return "NumericalDivergence";
  case ErrorCode::NoCandidates: return "NoCandidates";
  case ErrorCode::NoPath: return "NoPath";
  case ErrorCode::UnreachableObject: return "UnreachableObject";
  case ErrorCode::NotApproved: return "NotApproved";
  case ErrorCode::AbortRequested: return "AbortRequested";
  case ErrorCode::EmptyDataset: return "EmptyDataset";
  case ErrorCode::EmptyInput: return "EmptyInput";
  case ErrorCode::EmptyReference: return "EmptyReference";
  case ErrorCode::ScorerUnavailable: return "ScorerUnavailable";
  case ErrorCode::SessionBusy: return "SessionBusy";
  case ErrorCode::SessionUnknown: return "SessionUnknown";
  case ErrorCode::NoPendingPlan: return "NoPendingPlan";
  case ErrorCode::InvalidFormat: return "InvalidFormat";
  case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

} // namespace babelbot
