#include "cbp/error.hpp"

namespace cbp {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::RowSumNonzero: return "RowSumNonzero";
    case ErrorCode::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::EmptyModel: return "EmptyModel";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::TruncationNotConverged: return "TruncationNotConverged";
    case ErrorCode::GreenDivergent: return "GreenDivergent";
    case ErrorCode::Undecided: return "Undecided";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownSite: return "UnknownSite";
    case ErrorCode::DuplicateSite: return "DuplicateSite";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::MomentOrderMissing: return "MomentOrderMissing";
    case ErrorCode::MomentLawMismatch: return "MomentLawMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BracketNotFound: return "BracketNotFound";
    case ErrorCode::AlphaZero: return "AlphaZero";
    case ErrorCode::DegenerateMinor: return "DegenerateMinor";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
    case ErrorCode::SiteAlreadyCatalyst: return "SiteAlreadyCatalyst";
    case ErrorCode::PopulationCapExceeded: return "PopulationCapExceeded";
    case ErrorCode::AllReplicatesTruncated: return "AllReplicatesTruncated";
    case ErrorCode::StiffnessFailure: return "StiffnessFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SingularSystem:
    case ErrorCode::TruncationNotConverged:
    case ErrorCode::GreenDivergent:
    case ErrorCode::Undecided:
    case ErrorCode::NoConvergence:
    case ErrorCode::BracketNotFound:
    case ErrorCode::DegenerateMinor:
    case ErrorCode::PopulationCapExceeded:
    case ErrorCode::AllReplicatesTruncated:
    case ErrorCode::StiffnessFailure:
      return false;
    default:
      return true;
  }
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, std::string(to_string(code)) + ": " + message);
}

}  // namespace cbp
