#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>

#include "midc/error.hpp"
#include "midc/maxent.hpp"

namespace midc {

/// Steer N(mu_ini, sigma_ini) at k = 0 to N(mu_fin, sigma_fin) at k = T.
struct DensitySteeringProblem {
  LinearSystem sys;
  VectorXd mu_ini;
  MatrixXd sigma_ini;
  VectorXd mu_fin;
  MatrixXd sigma_fin;

  static DensitySteeringProblem centered(LinearSystem sys, MatrixXd sigma_ini,
                                         MatrixXd sigma_fin);

  void validate() const;
  bool zero_means() const;
  /// Same covariances with both boundary means set to zero.
  DensitySteeringProblem deviation() const;
};

/// Minimum-energy open-loop input u_bar and the mean trajectory it produces.
struct MeanSteering {
  VectorSeq u_bar;    // k in [0, T-1]
  VectorSeq mu_star;  // k in [0, T]
};

/// Why an alternation stopped before the requested iteration count.
struct AlternationStop {
  ErrorCode code = ErrorCode::kAssumptionViolated;
  Assumption assumption = Assumption::kNone;
  int iteration = -1;
  std::string detail;
};

struct AlternationOptions {
  int iterations = 10;
  bool early_stop = false;
  // relative change of every prior covariance below which early_stop fires
  double tol = 1e-10;
};

/// Iterates of the policy/prior alternation.  priors[i] is rho^(i) and
/// policies[i] the policy computed from it; objective holds
/// J(pi^0, rho^0), J(pi^0, rho^1), J(pi^1, rho^1), ... one value per
/// half-step.
struct AlternationTrace {
  std::vector<GaussianPrior> priors;
  std::vector<AffinePolicy> policies;
  std::vector<double> objective;
  std::vector<double> terminal_cov_error;  // relative, one per policy
  std::optional<AlternationStop> stop;

  int iterations() const { return static_cast<int>(policies.size()); }
};

/// Output of the non-centered alternation: the deviation trace and the
/// shifted policies/priors that solve the original problem.
struct GeneralAlternation {
  MeanSteering steering;
  AlternationTrace deviation;
  std::vector<AffinePolicy> policies;
  std::vector<GaussianPrior> priors;
  std::vector<double> objective;
  std::vector<double> terminal_mean_error;  // absolute, one per policy
};

struct ObjectiveTerms {
  double control = 0.0;  // sum_k E[1/2 ||u_k||^2]
  double kl = 0.0;       // sum_k E[KL(pi_k(.|x_k) || rho_k)]
  double total() const { return control + kl; }
};

struct NonzeroMeanPolicyAux {
  VectorSeq r;  // k in [0, T], r_T = 0
  RiccatiSolution gamma;
};

/// B_k -> sqrt(eps) B_k R_k^{-1/2}, turning a weighted input cost into the
/// unit-weight form.
LinearSystem reduce_weighted_cost(const LinearSystem& sys,
                                  std::span<const MatrixXd> r, double eps);

/// B (Sigma_rho^{-1} + I)^{-1/2}.
MatrixXd effective_input_matrix(const MatrixXd& b, const MatrixXd& sigma_rho);
MatrixSeq effective_input_matrices(const LinearSystem& sys,
                                   const GaussianPrior& prior);

AffinePolicy mi_policy_for_prior(const DensitySteeringProblem& prob,
                                 const GaussianPrior& prior);

/// Optimal zero-mean prior for a fixed policy: Sigma_pi + P Sigma_x P^T with
/// Sigma_x propagated from N(0, sigma_ini).
GaussianPrior mi_prior_for_policy(const DensitySteeringProblem& prob,
                                  const AffinePolicy& policy);

/// Closed-form J(pi, rho) with x_0 ~ N(mu_ini, sigma_ini).  Returns
/// kInfiniteDivergence when some policy covariance is singular.
ObjectiveTerms objective_terms(const DensitySteeringProblem& prob,
                               const AffinePolicy& policy,
                               const GaussianPrior& prior);
double objective_j(const DensitySteeringProblem& prob,
                   const AffinePolicy& policy, const GaussianPrior& prior);

/// Sum over k of E[KL(pi_k(.|x_k) || rho_k)] with x_k under pi.
double expected_policy_kl(const DensitySteeringProblem& prob,
                          const AffinePolicy& policy,
                          const GaussianPrior& prior);

AlternationTrace alternate_midc(const DensitySteeringProblem& prob,
                                const GaussianPrior& prior0,
                                const AlternationOptions& opts = {});

MeanSteering mean_steering(const DensitySteeringProblem& prob);
MeanSteering mean_steering(const DensitySteeringProblem& prob,
                           std::span<const MatrixXd> input);

/// pi_k(u|x) = pi_dev_k(u - u_bar_k | x - mu_star_k) in affine form.
AffinePolicy shift_policy(const AffinePolicy& dev, const MeanSteering& ms);
GaussianPrior shift_prior(const GaussianPrior& dev, const MeanSteering& ms);

GeneralAlternation alternate_midc_general(const DensitySteeringProblem& prob,
                                          const GaussianPrior& prior0,
                                          const AlternationOptions& opts = {});

/// Optimal policy for a fixed prior with arbitrary means and terminal
/// weight F.
std::pair<AffinePolicy, NonzeroMeanPolicyAux> mi_policy_nonzero_mean_prior(
    const LinearSystem& sys, const GaussianPrior& prior, const MatrixXd& F);

/// Relative Frobenius error ||a - b|| / max(||b||, tiny).
double relative_difference(const MatrixXd& a, const MatrixXd& b);

}  // namespace midc
