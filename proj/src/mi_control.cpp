#include "midc/mi_control.hpp"

#include <algorithm>
#include <cmath>

namespace midc {

namespace {

void require_zero_means(const DensitySteeringProblem& prob) {
  if (!prob.zero_means()) {
    throw Error(ErrorCode::kInvalidConfig,
                "centered solver called with nonzero boundary means");
  }
}

AlternationStop stop_from(const Error& e, int iteration) {
  return {e.code(), e.assumption(), iteration, e.detail()};
}

bool priors_converged(const GaussianPrior& prev, const GaussianPrior& next,
                      double tol) {
  for (std::size_t k = 0; k < prev.cov.size(); ++k) {
    if (relative_difference(next.cov[k], prev.cov[k]) > tol) return false;
  }
  return true;
}

}  // namespace

DensitySteeringProblem DensitySteeringProblem::centered(LinearSystem sys,
                                                        MatrixXd sigma_ini,
                                                        MatrixXd sigma_fin) {
  const int n = sys.state_dim();
  return {std::move(sys), VectorXd::Zero(n), std::move(sigma_ini),
          VectorXd::Zero(n), std::move(sigma_fin)};
}

void DensitySteeringProblem::validate() const {
  const int n = sys.state_dim();
  if (mu_ini.size() != n || mu_fin.size() != n || sigma_ini.rows() != n ||
      sigma_fin.rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "boundary marginals do not match the state dimension");
  }
  require_pd(sigma_ini, "initial covariance");
  require_pd(sigma_fin, "terminal covariance");
}

bool DensitySteeringProblem::zero_means() const {
  return mu_ini.norm() == 0.0 && mu_fin.norm() == 0.0;
}

DensitySteeringProblem DensitySteeringProblem::deviation() const {
  return centered(sys, sigma_ini, sigma_fin);
}

double relative_difference(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), std::numeric_limits<double>::min());
}

LinearSystem reduce_weighted_cost(const LinearSystem& sys,
                                  std::span<const MatrixXd> r, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kNotPD, "cost scale must be positive");
  if (static_cast<int>(r.size()) != sys.horizon()) {
    throw Error(ErrorCode::kDimensionMismatch, "weight sequence length differs from horizon");
  }
  MatrixSeq b;
  b.reserve(r.size());
  for (int k = 0; k < sys.horizon(); ++k) {
    const MatrixXd& rk = r[static_cast<std::size_t>(k)];
    if (rk.rows() != sys.input_dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "weight has wrong size", k);
    }
    require_pd(rk, "input weight");
    b.push_back(std::sqrt(eps) * sys.B(k) * spd_inv_sqrt(rk));
  }
  return sys.with_input_matrices(std::move(b));
}

MatrixXd effective_input_matrix(const MatrixXd& b, const MatrixXd& sigma_rho) {
  if (sigma_rho.rows() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "prior covariance size differs from input dimension");
  }
  require_pd(sigma_rho, "prior covariance");
  const auto m = sigma_rho.rows();
  const MatrixXd w = symmetrize(sym_inverse(sigma_rho) + MatrixXd::Identity(m, m));
  return b * spd_inv_sqrt(w);
}

MatrixSeq effective_input_matrices(const LinearSystem& sys,
                                   const GaussianPrior& prior) {
  check_prior_dims(sys, prior);
  MatrixSeq out;
  out.reserve(prior.cov.size());
  for (int k = 0; k < sys.horizon(); ++k) {
    out.push_back(effective_input_matrix(sys.B(k), prior.cov[static_cast<std::size_t>(k)]));
  }
  return out;
}

AffinePolicy mi_policy_for_prior(const DensitySteeringProblem& prob,
                                 const GaussianPrior& prior) {
  require_zero_means(prob);
  prob.validate();
  const LinearSystem& sys = prob.sys;
  check_prior_dims(sys, prior);
  prior.validate();
  if (!prior.is_zero_mean()) {
    throw Error(ErrorCode::kInvalidConfig, "prior must have zero means");
  }
  const MatrixSeq beff = effective_input_matrices(sys, prior);
  const TerminalWeightSolution tw =
      me_terminal_weight(sys, beff, prob.sigma_ini, prob.sigma_fin);

  AffinePolicy policy;
  const int m = sys.input_dim();
  for (int k = 0; k < sys.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd& b = sys.B(k);
    const MatrixXd& q_inv = tw.Q_inv[ks + 1];
    using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const MatrixXld bl = b.cast<long double>();
    const MatrixXld ql = q_inv.cast<long double>();
    MatrixXld inner = prior.cov[ks].cast<long double>().fullPivLu().inverse() +
                      MatrixXld::Identity(m, m) + bl.transpose() * ql * bl;
    inner = (inner + inner.transpose()) / 2.0L;
    if (!is_positive_definite(MatrixXd(inner.cast<double>()))) {
      throw Error(ErrorCode::kInfeasibleRiccati,
                  "Sigma_rho^{-1} + I + B^T Q^{-1} B not positive definite", k);
    }
    MatrixXld cov_l = inner.fullPivLu().inverse();
    cov_l = (cov_l + cov_l.transpose()) / 2.0L;
    const MatrixXd cov = cov_l.cast<double>();
    policy.gain.push_back(
        (-cov_l * bl.transpose() * ql * sys.A(k).cast<long double>()).cast<double>());
    policy.offset.push_back(VectorXd::Zero(m));
    policy.cov.push_back(cov);
  }
  return policy;
}

GaussianPrior mi_prior_for_policy(const DensitySteeringProblem& prob,
                                  const AffinePolicy& policy) {
  check_policy_dims(prob.sys, policy);
  const MomentTrajectory traj = propagate_moments(
      prob.sys, policy, Gaussian::centered(prob.sigma_ini));
  MatrixSeq covs;
  covs.reserve(policy.cov.size());
  for (std::size_t k = 0; k < policy.cov.size(); ++k) {
    const MatrixXd& p = policy.gain[k];
    covs.push_back(congruence(p, traj.cov[k], policy.cov[k]));
  }
  return GaussianPrior::zero_mean(std::move(covs));
}

ObjectiveTerms objective_terms(const DensitySteeringProblem& prob,
                               const AffinePolicy& policy,
                               const GaussianPrior& prior) {
  const LinearSystem& sys = prob.sys;
  check_policy_dims(sys, policy);
  check_prior_dims(sys, prior);
  const MomentTrajectory traj =
      propagate_moments(sys, policy, Gaussian(prob.mu_ini, prob.sigma_ini));
  ObjectiveTerms terms;
  for (int k = 0; k < sys.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd& p = policy.gain[ks];
    const VectorXd u_mean = p * traj.mean[ks] + policy.offset[ks];
    const MatrixXd spread = symmetrize(p * traj.cov[ks] * p.transpose());
    terms.control +=
        0.5 * (policy.cov[ks].trace() + u_mean.squaredNorm() + spread.trace());

    const Gaussian rho(prior.mean[ks], prior.cov[ks]);
    const double kl = kl_gaussian(Gaussian(u_mean, policy.cov[ks]), rho);
    if (!std::isfinite(kl)) {
      terms.kl = kInfiniteDivergence;
      continue;
    }
    const Eigen::LLT<MatrixXd> llt(prior.cov[ks]);
    terms.kl += kl + 0.5 * llt.solve(spread).trace();
  }
  return terms;
}

double objective_j(const DensitySteeringProblem& prob,
                   const AffinePolicy& policy, const GaussianPrior& prior) {
  return objective_terms(prob, policy, prior).total();
}

double expected_policy_kl(const DensitySteeringProblem& prob,
                          const AffinePolicy& policy,
                          const GaussianPrior& prior) {
  return objective_terms(prob, policy, prior).kl;
}

AlternationTrace alternate_midc(const DensitySteeringProblem& prob,
                                const GaussianPrior& prior0,
                                const AlternationOptions& opts) {
  require_zero_means(prob);
  if (opts.iterations < 0) throw Error(ErrorCode::kInvalidConfig, "negative iteration count");
  AlternationTrace trace;
  trace.priors.push_back(prior0);
  const Gaussian init = Gaussian::centered(prob.sigma_ini);
  for (int i = 0; i < opts.iterations; ++i) {
    const GaussianPrior& rho = trace.priors.back();
    AffinePolicy pi;
    try {
      pi = mi_policy_for_prior(prob, rho);
    } catch (const Error& e) {
      trace.stop = stop_from(e, i);
      break;
    }
    const MomentTrajectory traj = propagate_moments(prob.sys, pi, init);
    trace.terminal_cov_error.push_back(
        relative_difference(traj.cov.back(), prob.sigma_fin));
    trace.objective.push_back(objective_j(prob, pi, rho));
    GaussianPrior next = mi_prior_for_policy(prob, pi);
    trace.objective.push_back(objective_j(prob, pi, next));
    trace.policies.push_back(std::move(pi));
    const bool done = opts.early_stop && priors_converged(rho, next, opts.tol);
    trace.priors.push_back(std::move(next));
    if (done) break;
  }
  return trace;
}

MeanSteering mean_steering(const DensitySteeringProblem& prob) {
  return mean_steering(prob, prob.sys.B());
}

MeanSteering mean_steering(const DensitySteeringProblem& prob,
                           std::span<const MatrixXd> input) {
  const LinearSystem& sys = prob.sys;
  const int t = sys.horizon();
  const int n = sys.state_dim();
  if (prob.mu_ini.size() != n || prob.mu_fin.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "boundary means do not match the state dimension");
  }
  const MatrixXd gr = reachability_gramian(sys, t, 0, input);
  if (!is_invertible_symmetric(gr)) {
    throw Error(ErrorCode::kSingularGramian, "G_r(T,0) is singular");
  }
  const VectorXd gap = prob.mu_fin - state_transition(sys, t, 0) * prob.mu_ini;
  const VectorXd lambda = sym_inverse(gr) * gap;

  MeanSteering ms;
  ms.mu_star.push_back(prob.mu_ini);
  for (int k = 0; k < t; ++k) {
    const MatrixXd& b = input[static_cast<std::size_t>(k)];
    VectorXd u = b.transpose() * state_transition(sys, t, k + 1).transpose() * lambda;
    ms.mu_star.push_back(sys.A(k) * ms.mu_star.back() + b * u);
    ms.u_bar.push_back(std::move(u));
  }
  return ms;
}

AffinePolicy shift_policy(const AffinePolicy& dev, const MeanSteering& ms) {
  AffinePolicy out = dev;
  for (std::size_t k = 0; k < dev.gain.size(); ++k) {
    out.offset[k] = dev.offset[k] + ms.u_bar[k] - dev.gain[k] * ms.mu_star[k];
  }
  return out;
}

GaussianPrior shift_prior(const GaussianPrior& dev, const MeanSteering& ms) {
  GaussianPrior out = dev;
  for (std::size_t k = 0; k < dev.mean.size(); ++k) {
    out.mean[k] = dev.mean[k] + ms.u_bar[k];
  }
  return out;
}

GeneralAlternation alternate_midc_general(const DensitySteeringProblem& prob,
                                          const GaussianPrior& prior0,
                                          const AlternationOptions& opts) {
  prob.validate();
  GeneralAlternation out;
  out.steering = mean_steering(prob);
  out.deviation = alternate_midc(prob.deviation(), prior0, opts);
  for (const auto& p : out.deviation.policies) {
    AffinePolicy shifted = shift_policy(p, out.steering);
    const MomentTrajectory traj = propagate_moments(
        prob.sys, shifted, Gaussian(prob.mu_ini, prob.sigma_ini));
    out.terminal_mean_error.push_back((traj.mean.back() - prob.mu_fin).norm());
    out.policies.push_back(std::move(shifted));
  }
  for (const auto& r : out.deviation.priors) {
    out.priors.push_back(shift_prior(r, out.steering));
  }
  for (std::size_t i = 0; i < out.policies.size(); ++i) {
    out.objective.push_back(objective_j(prob, out.policies[i], out.priors[i]));
    out.objective.push_back(objective_j(prob, out.policies[i], out.priors[i + 1]));
  }
  return out;
}

std::pair<AffinePolicy, NonzeroMeanPolicyAux> mi_policy_nonzero_mean_prior(
    const LinearSystem& sys, const GaussianPrior& prior, const MatrixXd& F) {
  check_prior_dims(sys, prior);
  prior.validate();
  if (!sys.dynamics_invertible()) {
    throw Error(ErrorCode::kSingularA, "nonzero-mean prior policy needs invertible A_k");
  }
  require_symmetric(F, "terminal weight F");
  if (!is_invertible_symmetric(F)) {
    throw Error(ErrorCode::kSingularF, "terminal weight F is singular");
  }
  NonzeroMeanPolicyAux aux;
  aux.gamma = riccati_mi(sys, prior, F);
  if (!aux.gamma.ok()) {
    throw Error(ErrorCode::kInfeasibleRiccati,
                "Sigma_rho^{-1} + I + B^T Gamma B not positive definite",
                *aux.gamma.first_infeasible);
  }
  const int t = sys.horizon();
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const MatrixXd eye_m = MatrixXd::Identity(m, m);
  const auto& gamma = aux.gamma.value;

  // Per-step quantities shared by the r recursion and the policy.
  std::vector<Eigen::PartialPivLU<MatrixXd>> mean_factor;
  MatrixSeq covs;
  for (int k = 0; k < t; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd& b = sys.B(k);
    const MatrixXd btgb = b.transpose() * gamma[ks + 1] * b;
    mean_factor.emplace_back(eye_m + prior.cov[ks] * (eye_m + btgb));
    covs.push_back(sym_inverse(symmetrize(sym_inverse(prior.cov[ks]) + eye_m + btgb)));
  }

  aux.r.assign(static_cast<std::size_t>(t + 1), VectorXd::Zero(n));
  for (int k = t - 1; k >= 0; --k) {
    const auto ks = static_cast<std::size_t>(k);
    if (!is_invertible_symmetric(gamma[ks])) {
      throw Error(ErrorCode::kInfeasibleRiccati, "Gamma_k is singular", k);
    }
    const MatrixXd& a = sys.A(k);
    const VectorXd pull = a.transpose() * gamma[ks + 1] * sys.B(k) *
                          mean_factor[ks].solve(prior.mean[ks]);
    aux.r[ks] = a.partialPivLu().solve(aux.r[ks + 1]) - sym_inverse(gamma[ks]) * pull;
  }

  AffinePolicy policy;
  for (int k = 0; k < t; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd& b = sys.B(k);
    const MatrixXd bt_gamma = b.transpose() * gamma[ks + 1];
    policy.gain.push_back(-covs[ks] * bt_gamma * sys.A(k));
    policy.offset.push_back(mean_factor[ks].solve(prior.mean[ks]) +
                            covs[ks] * bt_gamma * aux.r[ks + 1]);
    policy.cov.push_back(covs[ks]);
  }
  return {std::move(policy), std::move(aux)};
}

}  // namespace midc
