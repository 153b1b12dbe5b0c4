#pragma once

#include <optional>
#include <span>

#include "midc/linear_system.hpp"

namespace midc {

/// Backward Riccati solution Pi_0..Pi_T with Pi_T = F.  The same type holds
/// the entropy-regularized recursion and the prior-weighted (KL) recursion.
struct RiccatiSolution {
  MatrixSeq value;  // index k in [0, T]; entries below a failure are empty
  MatrixXd terminal;
  std::vector<bool> feasible;  // per k in [0, T-1]
  std::optional<int> first_infeasible;

  bool ok() const { return !first_infeasible.has_value(); }
};

/// Q_k of the forward Lyapunov recursion and the terminal weight F = Q_T^{-1}
/// that steers the closed-loop covariance to a prescribed terminal value.
struct TerminalWeightSolution {
  MatrixSeq Q;      // k in [0, T]
  MatrixSeq Q_inv;  // Q_k^{-1}, formed before rounding Q_k to double
  MatrixXd F;
  MatrixXd S0;
  MatrixXd ST;
  MatrixXd calF;
  int split_index = 0;  // smallest admissible reachability split k_r
};

/// Pi_k = A^T Pi A - A^T Pi B (I + B^T Pi B)^{-1} B^T Pi A,  Pi_T = F.
/// Stops at the first k where I + B^T Pi_{k+1} B is not positive definite
/// and records it instead of throwing.
RiccatiSolution riccati_me(const LinearSystem& sys,
                           std::span<const MatrixXd> input, const MatrixXd& F);

/// Gamma_k recursion with (Sigma_rho^{-1} + I + B^T Gamma B) in place of
/// (I + B^T Pi B); uses the system's own B_k.
RiccatiSolution riccati_mi(const LinearSystem& sys, const GaussianPrior& prior,
                           const MatrixXd& F);

/// Gaussian policy of the soft-terminal entropy-regularized problem:
/// cov_k = (I + B^T Pi_{k+1} B)^{-1}, gain_k = -cov_k B^T Pi_{k+1} A_k.
AffinePolicy me_policy(const LinearSystem& sys, std::span<const MatrixXd> input,
                       const RiccatiSolution& ricc);

/// Smallest k_r in [1, T] with G_r(k,0) invertible for k >= k_r and G_r(T,k)
/// invertible for k < k_r, or nullopt.
std::optional<int> admissible_split_index(const LinearSystem& sys,
                                          std::span<const MatrixXd> input);

/// Terminal weight steering N(0, sigma_ini) to N(0, sigma_fin).  Each
/// hypothesis is checked and reported as a distinct AssumptionViolated.
TerminalWeightSolution me_terminal_weight(const LinearSystem& sys,
                                          std::span<const MatrixXd> input,
                                          const MatrixXd& sigma_ini,
                                          const MatrixXd& sigma_fin);

/// me_policy(riccati_me(F = Q_T^{-1})).
AffinePolicy me_density_policy(const LinearSystem& sys,
                               std::span<const MatrixXd> input,
                               const MatrixXd& sigma_ini,
                               const MatrixXd& sigma_fin);

}  // namespace midc
