#include "midc/error.hpp"

namespace midc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kNotPSD: return "NotPSD";
    case ErrorCode::kNotPD: return "NotPD";
    case ErrorCode::kDegenerateReference: return "DegenerateReference";
    case ErrorCode::kDegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSingularA: return "SingularA";
    case ErrorCode::kBadRange: return "BadRange";
    case ErrorCode::kInfeasibleRiccati: return "InfeasibleRiccati";
    case ErrorCode::kAssumptionViolated: return "AssumptionViolated";
    case ErrorCode::kSingularF: return "SingularF";
    case ErrorCode::kSingularGramian: return "SingularGramian";
    case ErrorCode::kRankDeficientB: return "RankDeficientB";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kZeroTruth: return "ZeroTruth";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInfeasibleObjective: return "InfeasibleObjective";
  }
  return "Unknown";
}

std::string_view to_string(Assumption assumption) {
  switch (assumption) {
    case Assumption::kNone: return "none";
    case Assumption::kSingularA: return "singular A_k";
    case Assumption::kSingularGramian: return "singular controllability Gramian G_c(T,0)";
    case Assumption::kNoAdmissibleSplit: return "no admissible reachability split index";
    case Assumption::kSingularCalF: return "singular S0 + I/2 - (S0^1/2 ST S0^1/2 + I/4)^1/2";
    case Assumption::kSingularCalFComplement: return "singular -S0 + I/2 + (S0^1/2 ST S0^1/2 + I/4)^1/2";
    case Assumption::kSingularQ: return "singular Lyapunov iterate Q_k";
    case Assumption::kIndefiniteSqrtArgument: return "indefinite square-root argument";
  }
  return "unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& detail, int index,
                           Assumption assumption) {
  std::string msg(to_string(code));
  if (assumption != Assumption::kNone) {
    msg += "(";
    msg += to_string(assumption);
    msg += ")";
  }
  if (index >= 0) msg += " at index " + std::to_string(index);
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& detail, int index,
             Assumption assumption)
    : std::runtime_error(format_message(code, detail, index, assumption)),
      code_(code),
      index_(index),
      assumption_(assumption),
      detail_(detail) {}

}  // namespace midc
