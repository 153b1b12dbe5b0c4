#pragma once

#include <span>

#include "midc/gaussian.hpp"

namespace midc {

/// Discrete-time linear system x_{k+1} = A_k x_k + B_k u_k over k = 0..T-1.
class LinearSystem {
 public:
  LinearSystem(MatrixSeq a, MatrixSeq b);

  static LinearSystem time_invariant(const MatrixXd& a, const MatrixXd& b,
                                     int horizon);

  int horizon() const { return static_cast<int>(a_.size()); }
  int state_dim() const { return static_cast<int>(a_.front().rows()); }
  int input_dim() const { return static_cast<int>(b_.front().cols()); }

  const MatrixXd& A(int k) const { return a_.at(static_cast<std::size_t>(k)); }
  const MatrixXd& B(int k) const { return b_.at(static_cast<std::size_t>(k)); }
  std::span<const MatrixXd> A() const { return a_; }
  std::span<const MatrixXd> B() const { return b_; }

  /// True when every A_k passes the invertibility threshold.
  bool dynamics_invertible() const { return invertible_; }
  bool input_full_column_rank() const;

  /// Same dynamics with a replacement input-matrix sequence.
  LinearSystem with_input_matrices(MatrixSeq b) const;

 private:
  MatrixSeq a_;
  MatrixSeq b_;
  bool invertible_ = false;
};

/// pi_k(u | x) = N(gain_k x + offset_k, cov_k).
struct AffinePolicy {
  MatrixSeq gain;
  VectorSeq offset;
  MatrixSeq cov;

  int horizon() const { return static_cast<int>(gain.size()); }
  /// Zero offsets and Im(gain_k) contained in Im(cov_k).
  bool in_zero_mean_class(double tol = 1e-9) const;
};

/// rho_k = N(mean_k, cov_k) with strictly PD covariances.
struct GaussianPrior {
  VectorSeq mean;
  MatrixSeq cov;

  static GaussianPrior zero_mean(MatrixSeq covs);
  static GaussianPrior identity(int input_dim, int horizon);

  int horizon() const { return static_cast<int>(cov.size()); }
  bool is_zero_mean() const;
  void validate() const;
};

/// State means and covariances for k = 0..T.
struct MomentTrajectory {
  VectorSeq mean;
  MatrixSeq cov;
};

/// Phi(k, l): A_{k-1}...A_l for k > l, I for k = l, and the inverse product
/// for k < l (requires invertible dynamics).
MatrixXd state_transition(const LinearSystem& sys, int k, int l);

/// G_r(k1, k0) = sum_{k=k0}^{k1-1} Phi(k1, k+1) B_k B_k^T Phi(k1, k+1)^T.
MatrixXd reachability_gramian(const LinearSystem& sys, int k1, int k0);
MatrixXd reachability_gramian(const LinearSystem& sys, int k1, int k0,
                              std::span<const MatrixXd> input);

/// G_c(k1, k0) = sum_{k=k0}^{k1-1} Phi(k0, k+1) B_k B_k^T Phi(k0, k+1)^T.
MatrixXd controllability_gramian(const LinearSystem& sys, int k1, int k0);
MatrixXd controllability_gramian(const LinearSystem& sys, int k1, int k0,
                                 std::span<const MatrixXd> input);

/// Exact mean/covariance recursion of the closed loop under an affine
/// Gaussian policy.
MomentTrajectory propagate_moments(const LinearSystem& sys,
                                   const AffinePolicy& policy,
                                   const Gaussian& init);

void check_policy_dims(const LinearSystem& sys, const AffinePolicy& policy);
void check_prior_dims(const LinearSystem& sys, const GaussianPrior& prior);

}  // namespace midc
