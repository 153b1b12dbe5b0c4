#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace midc {

enum class ErrorCode {
  kNotSymmetric,
  kNotPSD,
  kNotPD,
  kDegenerateReference,
  kDegenerateCovariance,
  kDimensionMismatch,
  kSingularA,
  kBadRange,
  kInfeasibleRiccati,
  kAssumptionViolated,
  kSingularF,
  kSingularGramian,
  kRankDeficientB,
  kTooFewSamples,
  kZeroTruth,
  kInvalidConfig,
  kInfeasibleObjective,
};

/// Which hypothesis of the terminal-weight construction failed.
enum class Assumption {
  kNone,
  kSingularA,
  kSingularGramian,
  kNoAdmissibleSplit,
  kSingularCalF,
  kSingularCalFComplement,
  kSingularQ,
  kIndefiniteSqrtArgument,
};

std::string_view to_string(ErrorCode code);
std::string_view to_string(Assumption assumption);

/// Exception type for every failure raised by the library.  `index` carries a
/// time step or iteration number when one is meaningful, otherwise -1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail, int index = -1,
        Assumption assumption = Assumption::kNone);

  ErrorCode code() const noexcept { return code_; }
  int index() const noexcept { return index_; }
  Assumption assumption() const noexcept { return assumption_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  int index_;
  Assumption assumption_;
  std::string detail_;
};

inline Error assumption_violated(Assumption which, const std::string& detail,
                                 int index = -1) {
  return Error(ErrorCode::kAssumptionViolated, detail, index, which);
}

}  // namespace midc
