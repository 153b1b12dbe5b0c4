#include "midc/linear_system.hpp"

#include <string>

#include "midc/error.hpp"

namespace midc {

namespace {

std::string shape(const MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_range(const LinearSystem& sys, int k, const char* name) {
  if (k < 0 || k > sys.horizon()) {
    throw Error(ErrorCode::kBadRange, std::string(name) + " = " +
                                          std::to_string(k) +
                                          " outside [0, T]");
  }
}

void check_input(const LinearSystem& sys, std::span<const MatrixXd> input) {
  if (static_cast<int>(input.size()) != sys.horizon()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "effective input sequence length differs from horizon");
  }
  for (std::size_t k = 0; k < input.size(); ++k) {
    if (input[k].rows() != sys.state_dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "effective input matrix has wrong row count",
                  static_cast<int>(k));
    }
  }
}

}  // namespace

LinearSystem::LinearSystem(MatrixSeq a, MatrixSeq b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (a_.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "horizon must be at least 1");
  }
  if (a_.size() != b_.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "A and B sequences differ in length");
  }
  const auto n = a_.front().rows();
  const auto m = b_.front().cols();
  if (n == 0) throw Error(ErrorCode::kDimensionMismatch, "state dimension is zero");
  invertible_ = true;
  for (std::size_t k = 0; k < a_.size(); ++k) {
    if (a_[k].rows() != n || a_[k].cols() != n) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "A_k is " + shape(a_[k]) + ", expected square of size " +
                      std::to_string(n),
                  static_cast<int>(k));
    }
    if (b_[k].rows() != n || b_[k].cols() != m) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "B_k is " + shape(b_[k]) + ", inconsistent with B_0",
                  static_cast<int>(k));
    }
    invertible_ = invertible_ && is_invertible(a_[k]);
  }
}

LinearSystem LinearSystem::time_invariant(const MatrixXd& a, const MatrixXd& b,
                                          int horizon) {
  if (horizon < 1) throw Error(ErrorCode::kBadRange, "horizon must be >= 1");
  const auto t = static_cast<std::size_t>(horizon);
  return LinearSystem(MatrixSeq(t, a), MatrixSeq(t, b));
}

bool LinearSystem::input_full_column_rank() const {
  for (const auto& b : b_) {
    if (!has_full_column_rank(b)) return false;
  }
  return true;
}

LinearSystem LinearSystem::with_input_matrices(MatrixSeq b) const {
  return LinearSystem(a_, std::move(b));
}

bool AffinePolicy::in_zero_mean_class(double tol) const {
  for (std::size_t k = 0; k < gain.size(); ++k) {
    if (offset[k].norm() > tol) return false;
    const MatrixXd proj = cov[k] * pseudo_inverse(cov[k]);
    const MatrixXd residual =
        (MatrixXd::Identity(cov[k].rows(), cov[k].cols()) - proj) * gain[k];
    if (residual.norm() > tol * std::max(1.0, gain[k].norm())) return false;
  }
  return true;
}

GaussianPrior GaussianPrior::zero_mean(MatrixSeq covs) {
  GaussianPrior prior;
  prior.mean.reserve(covs.size());
  for (const auto& c : covs) prior.mean.push_back(VectorXd::Zero(c.rows()));
  prior.cov = std::move(covs);
  return prior;
}

GaussianPrior GaussianPrior::identity(int input_dim, int horizon) {
  return zero_mean(MatrixSeq(static_cast<std::size_t>(horizon),
                             MatrixXd::Identity(input_dim, input_dim)));
}

bool GaussianPrior::is_zero_mean() const {
  for (const auto& m : mean) {
    if (m.norm() != 0.0) return false;
  }
  return true;
}

void GaussianPrior::validate() const {
  if (mean.size() != cov.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "prior mean/cov length mismatch");
  }
  for (std::size_t k = 0; k < cov.size(); ++k) {
    if (mean[k].size() != cov[k].rows()) {
      throw Error(ErrorCode::kDimensionMismatch, "prior mean/cov size mismatch",
                  static_cast<int>(k));
    }
    require_pd(cov[k], "prior covariance");
  }
}

void check_policy_dims(const LinearSystem& sys, const AffinePolicy& policy) {
  const int t = sys.horizon();
  if (policy.horizon() != t || static_cast<int>(policy.offset.size()) != t ||
      static_cast<int>(policy.cov.size()) != t) {
    throw Error(ErrorCode::kDimensionMismatch, "policy horizon differs from system");
  }
  for (int k = 0; k < t; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    if (policy.gain[ks].rows() != sys.input_dim() ||
        policy.gain[ks].cols() != sys.state_dim() ||
        policy.offset[ks].size() != sys.input_dim() ||
        policy.cov[ks].rows() != sys.input_dim() ||
        policy.cov[ks].cols() != sys.input_dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "policy parameter dimensions inconsistent with system", k);
    }
  }
}

void check_prior_dims(const LinearSystem& sys, const GaussianPrior& prior) {
  if (prior.horizon() != sys.horizon() ||
      prior.mean.size() != prior.cov.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "prior horizon differs from system");
  }
  for (int k = 0; k < sys.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    if (prior.cov[ks].rows() != sys.input_dim() ||
        prior.mean[ks].size() != sys.input_dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "prior dimensions inconsistent with system", k);
    }
  }
}

MatrixXd state_transition(const LinearSystem& sys, int k, int l) {
  check_range(sys, k, "k");
  check_range(sys, l, "l");
  const int n = sys.state_dim();
  MatrixXd phi = MatrixXd::Identity(n, n);
  if (k > l) {
    for (int j = l; j < k; ++j) phi = sys.A(j) * phi;
  } else if (k < l) {
    if (!sys.dynamics_invertible()) {
      throw Error(ErrorCode::kSingularA,
                  "backward transition requires invertible A_k");
    }
    // A_k^{-1} A_{k+1}^{-1} ... A_{l-1}^{-1}
    for (int j = l - 1; j >= k; --j) {
      phi = sys.A(j).partialPivLu().solve(phi);
    }
  }
  return phi;
}

MatrixXd reachability_gramian(const LinearSystem& sys, int k1, int k0) {
  return reachability_gramian(sys, k1, k0, sys.B());
}

MatrixXd reachability_gramian(const LinearSystem& sys, int k1, int k0,
                              std::span<const MatrixXd> input) {
  check_range(sys, k0, "k0");
  check_range(sys, k1, "k1");
  if (k0 >= k1) throw Error(ErrorCode::kBadRange, "Gramian needs k0 < k1");
  check_input(sys, input);
  const int n = sys.state_dim();
  MatrixXd g = MatrixXd::Zero(n, n);
  for (int k = k0; k < k1; ++k) {
    const MatrixXd pb = state_transition(sys, k1, k + 1) *
                        input[static_cast<std::size_t>(k)];
    g += pb * pb.transpose();
  }
  return symmetrize(g);
}

MatrixXd controllability_gramian(const LinearSystem& sys, int k1, int k0) {
  return controllability_gramian(sys, k1, k0, sys.B());
}

MatrixXd controllability_gramian(const LinearSystem& sys, int k1, int k0,
                                 std::span<const MatrixXd> input) {
  check_range(sys, k0, "k0");
  check_range(sys, k1, "k1");
  if (k0 >= k1) throw Error(ErrorCode::kBadRange, "Gramian needs k0 < k1");
  check_input(sys, input);
  const int n = sys.state_dim();
  MatrixXd g = MatrixXd::Zero(n, n);
  for (int k = k0; k < k1; ++k) {
    const MatrixXd pb = state_transition(sys, k0, k + 1) *
                        input[static_cast<std::size_t>(k)];
    g += pb * pb.transpose();
  }
  return symmetrize(g);
}

MomentTrajectory propagate_moments(const LinearSystem& sys,
                                   const AffinePolicy& policy,
                                   const Gaussian& init) {
  check_policy_dims(sys, policy);
  if (init.dim() != sys.state_dim() || init.cov.rows() != sys.state_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "initial distribution dimension differs from state dimension");
  }
  MomentTrajectory traj;
  traj.mean.reserve(static_cast<std::size_t>(sys.horizon() + 1));
  traj.cov.reserve(static_cast<std::size_t>(sys.horizon() + 1));
  traj.mean.push_back(init.mean);
  traj.cov.push_back(init.cov);
  for (int k = 0; k < sys.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd closed = sys.A(k) + sys.B(k) * policy.gain[ks];
    const VectorXd& mu = traj.mean.back();
    const VectorXd u_mean = policy.gain[ks] * mu + policy.offset[ks];
    VectorXd next_mean = sys.A(k) * mu + sys.B(k) * u_mean;
    MatrixXd next_cov = closed * traj.cov.back() * closed.transpose() +
                        sys.B(k) * policy.cov[ks] * sys.B(k).transpose();
    traj.mean.push_back(std::move(next_mean));
    traj.cov.push_back(symmetrize(next_cov));
  }
  return traj;
}

}  // namespace midc
