#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbp {

/// Machine-readable failure codes shared by every module.
enum class ErrorCode {
  // chain
  RowSumNonzero,
  NegativeOffDiagonal,
  NotIrreducible,
  EmptyModel,
  SingularSystem,
  TruncationNotConverged,
  GreenDivergent,
  Undecided,
  // model / config
  InvalidConfig,
  UnknownSite,
  DuplicateSite,
  AlphaOutOfRange,
  MomentOrderMissing,
  MomentLawMismatch,
  // spectral
  NoConvergence,
  BracketNotFound,
  // critset
  AlphaZero,
  DegenerateMinor,
  // moments
  RegimeMismatch,
  SiteAlreadyCatalyst,
  // sim / oracle
  PopulationCapExceeded,
  AllReplicatesTruncated,
  StiffnessFailure,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for failures caused by bad input (CLI exit code 1); false for
/// numeric non-convergence (exit code 2).
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace cbp
