#include "midc/bridge.hpp"

#include <cmath>

namespace midc {

namespace {

void check_same_shape(const ProcessDistribution& p, const ProcessDistribution& q) {
  if (p.horizon() != q.horizon() || p.dim() != q.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "processes differ in horizon or dimension");
  }
}

void require_full_column_rank(const LinearSystem& sys) {
  if (!sys.input_full_column_rank()) {
    throw Error(ErrorCode::kRankDeficientB, "bridge formulation needs full-column-rank B_k");
  }
}

MatrixSeq input_pinvs(const LinearSystem& sys) {
  MatrixSeq out;
  out.reserve(static_cast<std::size_t>(sys.horizon()));
  for (int k = 0; k < sys.horizon(); ++k) out.push_back(pseudo_inverse(sys.B(k)));
  return out;
}

bool outside_range(const MatrixXd& proj, const MatrixXd& v) {
  const MatrixXd residual = v - proj * v;
  return residual.norm() > 1e-9 * std::max(1.0, v.norm());
}

// Innovation e_k = B^+ (x_{k+1} - A x_k) under p: mean and covariance.
std::pair<VectorXd, MatrixXd> innovation_moments(const LinearSystem& sys,
                                                 const ProcessDistribution& p,
                                                 const MomentTrajectory& marg,
                                                 const MatrixXd& b_pinv, int k) {
  const auto ks = static_cast<std::size_t>(k);
  const MatrixXd d = p.drift[ks] - sys.A(k);
  const VectorXd mean = b_pinv * (d * marg.mean[ks] + p.offset[ks]);
  const MatrixXd cov = congruence(b_pinv, d, marg.cov[ks], p.noise[ks]);
  return {mean, cov};
}

}  // namespace

void ProcessDistribution::validate() const {
  initial.validate();
  const auto t = drift.size();
  if (offset.size() != t || noise.size() != t || t == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "process sequences differ in length");
  }
  const int n = dim();
  for (std::size_t k = 0; k < t; ++k) {
    if (drift[k].rows() != n || drift[k].cols() != n || offset[k].size() != n ||
        noise[k].rows() != n) {
      throw Error(ErrorCode::kDimensionMismatch, "process step has wrong size",
                  static_cast<int>(k));
    }
    require_psd(noise[k], "step noise covariance");
  }
}

MomentTrajectory ProcessDistribution::marginals() const {
  MomentTrajectory traj;
  traj.mean.push_back(initial.mean);
  traj.cov.push_back(initial.cov);
  for (std::size_t k = 0; k < drift.size(); ++k) {
    traj.mean.push_back(drift[k] * traj.mean.back() + offset[k]);
    traj.cov.push_back(
        symmetrize(drift[k] * traj.cov.back() * drift[k].transpose() + noise[k]));
  }
  return traj;
}

ProcessDistribution reference_process(const LinearSystem& sys,
                                      const GaussianPrior& prior,
                                      const Gaussian& init) {
  check_prior_dims(sys, prior);
  if (init.dim() != sys.state_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "initial law has wrong dimension");
  }
  ProcessDistribution p;
  p.initial = init;
  for (int k = 0; k < sys.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd& b = sys.B(k);
    p.drift.push_back(sys.A(k));
    p.offset.push_back(b * prior.mean[ks]);
    p.noise.push_back(symmetrize(b * prior.cov[ks] * b.transpose()));
  }
  return p;
}

ProcessDistribution controlled_process(const LinearSystem& sys,
                                       const AffinePolicy& policy,
                                       const Gaussian& init) {
  check_policy_dims(sys, policy);
  if (init.dim() != sys.state_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "initial law has wrong dimension");
  }
  ProcessDistribution p;
  p.initial = init;
  for (int k = 0; k < sys.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd& b = sys.B(k);
    p.drift.push_back(sys.A(k) + b * policy.gain[ks]);
    p.offset.push_back(b * policy.offset[ks]);
    p.noise.push_back(symmetrize(b * policy.cov[ks] * b.transpose()));
  }
  return p;
}

double potential_v(const LinearSystem& sys, const Trajectory& traj) {
  if (static_cast<int>(traj.states.size()) != sys.horizon() + 1) {
    throw Error(ErrorCode::kDimensionMismatch, "trajectory length must be T + 1");
  }
  double v = 0.0;
  for (int k = 0; k < sys.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const VectorXd step = traj.states[ks + 1] - sys.A(k) * traj.states[ks];
    v += 0.5 * (pseudo_inverse(sys.B(k)) * step).squaredNorm();
  }
  return v;
}

double expected_potential(const LinearSystem& sys, const ProcessDistribution& p) {
  if (p.horizon() != sys.horizon() || p.dim() != sys.state_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "process does not match system");
  }
  const MomentTrajectory marg = p.marginals();
  double total = 0.0;
  for (int k = 0; k < sys.horizon(); ++k) {
    const auto [mean, cov] = innovation_moments(sys, p, marg, pseudo_inverse(sys.B(k)), k);
    total += 0.5 * (mean.squaredNorm() + cov.trace());
  }
  return total;
}

double kl_process(const ProcessDistribution& p, const ProcessDistribution& q) {
  check_same_shape(p, q);
  double total = kl_gaussian_on_support(p.initial, q.initial);
  if (!std::isfinite(total)) return kInfiniteDivergence;
  const MomentTrajectory marg = p.marginals();
  const int n = p.dim();
  for (int k = 0; k < p.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const double noise_kl = kl_gaussian_on_support(
        Gaussian(VectorXd::Zero(n), p.noise[ks]), Gaussian(VectorXd::Zero(n), q.noise[ks]));
    if (!std::isfinite(noise_kl)) return kInfiniteDivergence;

    const MatrixXd sq_pinv = pseudo_inverse(q.noise[ks]);
    const MatrixXd proj = q.noise[ks] * sq_pinv;
    const MatrixXd d = p.drift[ks] - q.drift[ks];
    const VectorXd dbar = d * marg.mean[ks] + p.offset[ks] - q.offset[ks];
    const MatrixXd spread = d * spd_sqrt(marg.cov[ks]);
    if (outside_range(proj, dbar) || outside_range(proj, spread)) {
      return kInfiniteDivergence;
    }
    total += noise_kl + 0.5 * (dbar.dot(sq_pinv * dbar) +
                               (spread.transpose() * sq_pinv * spread).trace());
  }
  return total;
}

double sb_objective(const ProcessDistribution& p, const ProcessDistribution& q,
                    const LinearSystem& sys) {
  const double kl = kl_process(p, q);
  if (!std::isfinite(kl)) return kInfiniteDivergence;
  return kl + expected_potential(sys, p);
}

GaussianPrior refine_reference(const LinearSystem& sys, const ProcessDistribution& p) {
  require_full_column_rank(sys);
  const MomentTrajectory marg = p.marginals();
  GaussianPrior prior;
  for (int k = 0; k < sys.horizon(); ++k) {
    auto [mean, cov] = innovation_moments(sys, p, marg, pseudo_inverse(sys.B(k)), k);
    prior.mean.push_back(std::move(mean));
    prior.cov.push_back(std::move(cov));
  }
  return prior;
}

AffinePolicy policy_from_process(const LinearSystem& sys, const ProcessDistribution& p) {
  require_full_column_rank(sys);
  AffinePolicy policy;
  for (int k = 0; k < sys.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd b_pinv = pseudo_inverse(sys.B(k));
    policy.gain.push_back(b_pinv * (p.drift[ks] - sys.A(k)));
    policy.offset.push_back(b_pinv * p.offset[ks]);
    policy.cov.push_back(symmetrize(b_pinv * p.noise[ks] * b_pinv.transpose()));
  }
  return policy;
}

ProcessDistribution bridge_step(const DensitySteeringProblem& prob,
                                const GaussianPrior& prior) {
  if (!prob.zero_means() || !prior.is_zero_mean()) {
    throw Error(ErrorCode::kInvalidConfig, "bridge step expects centered marginals and prior");
  }
  // The bridge for a reference built from the prior is the process controlled
  // by the optimal policy for that prior.
  return controlled_process(prob.sys, mi_policy_for_prior(prob, prior),
                            Gaussian::centered(prob.sigma_ini));
}

BridgeTrace alternate_sb(const DensitySteeringProblem& prob,
                         const GaussianPrior& prior0, const Gaussian& init_ref,
                         const AlternationOptions& opts) {
  prob.validate();
  require_full_column_rank(prob.sys);
  BridgeTrace trace;
  trace.priors.push_back(prior0);
  trace.references.push_back(reference_process(prob.sys, prior0, init_ref));
  for (int i = 0; i < opts.iterations; ++i) {
    const GaussianPrior& rho = trace.priors.back();
    ProcessDistribution bridge;
    try {
      bridge = bridge_step(prob, rho);
    } catch (const Error& e) {
      trace.stop = AlternationStop{e.code(), e.assumption(), i, e.detail()};
      break;
    }
    const double before = sb_objective(bridge, trace.references.back(), prob.sys);
    GaussianPrior next = refine_reference(prob.sys, bridge);
    ProcessDistribution next_ref = reference_process(prob.sys, next, init_ref);
    const double after = sb_objective(bridge, next_ref, prob.sys);
    trace.policies.push_back(policy_from_process(prob.sys, bridge));
    trace.controlled.push_back(std::move(bridge));
    trace.objective.push_back(before);
    trace.objective.push_back(after);
    if (!std::isfinite(before) || !std::isfinite(after)) {
      trace.stop = AlternationStop{ErrorCode::kInfeasibleObjective, Assumption::kNone, i,
                                   "bridge objective is infinite"};
      break;
    }
    bool done = false;
    if (opts.early_stop) {
      done = true;
      for (std::size_t k = 0; k < next.cov.size() && done; ++k) {
        done = relative_difference(next.cov[k], rho.cov[k]) <= opts.tol;
      }
    }
    trace.priors.push_back(std::move(next));
    trace.references.push_back(std::move(next_ref));
    if (done) break;
  }
  return trace;
}

GeneralBridge alternate_sb_general(const DensitySteeringProblem& prob,
                                   const GaussianPrior& prior0,
                                   const Gaussian& init_ref,
                                   const AlternationOptions& opts) {
  prob.validate();
  require_full_column_rank(prob.sys);
  const LinearSystem& sys = prob.sys;
  GeneralBridge out;
  out.steering = mean_steering(prob);
  const Gaussian dev_ref(init_ref.mean - prob.mu_ini, init_ref.cov);
  out.deviation = alternate_sb(prob.deviation(), prior0, dev_ref, opts);

  for (const auto& dev : out.deviation.controlled) {
    ProcessDistribution p = dev;
    p.initial = Gaussian(prob.mu_ini, prob.sigma_ini);
    for (int k = 0; k < sys.horizon(); ++k) {
      const auto ks = static_cast<std::size_t>(k);
      p.offset[ks] = dev.offset[ks] + sys.B(k) * out.steering.u_bar[ks] -
                     (dev.drift[ks] - sys.A(k)) * out.steering.mu_star[ks];
    }
    out.controlled.push_back(std::move(p));
  }
  for (const auto& rho : out.deviation.priors) {
    out.priors.push_back(shift_prior(rho, out.steering));
    out.references.push_back(reference_process(sys, out.priors.back(), init_ref));
  }
  for (std::size_t i = 0; i < out.controlled.size(); ++i) {
    out.objective.push_back(sb_objective(out.controlled[i], out.references[i], sys));
    out.objective.push_back(sb_objective(out.controlled[i], out.references[i + 1], sys));
  }
  return out;
}

std::pair<ProcessDistribution, VectorSeq> plain_bridge(
    const LinearSystem& sys, const Gaussian& snapshot_ini,
    const Gaussian& snapshot_fin, const NoiseEstimate& theta) {
  const int t = sys.horizon();
  MatrixSeq root;
  MatrixSeq beff;
  for (int k = 0; k < t; ++k) {
    require_pd(theta.at(k), "noise covariance estimate");
    root.push_back(spd_sqrt(theta.at(k)));
    beff.push_back(sys.B(k) * root.back());
  }
  const DensitySteeringProblem prob{sys, snapshot_ini.mean, snapshot_ini.cov,
                                    snapshot_fin.mean, snapshot_fin.cov};
  prob.validate();
  const MeanSteering ms = mean_steering(prob, beff);
  const AffinePolicy me = me_density_policy(sys, beff, prob.sigma_ini, prob.sigma_fin);

  ProcessDistribution p;
  p.initial = snapshot_ini;
  VectorSeq ref_mean;
  for (int k = 0; k < t; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd closed = beff[ks] * me.gain[ks];
    p.drift.push_back(sys.A(k) + closed);
    p.offset.push_back(beff[ks] * ms.u_bar[ks] - closed * ms.mu_star[ks]);
    p.noise.push_back(symmetrize(beff[ks] * me.cov[ks] * beff[ks].transpose()));
    ref_mean.push_back(root[ks] * ms.u_bar[ks]);
  }
  return {std::move(p), std::move(ref_mean)};
}

namespace {

// Second moment of the innovation around the reference noise mean, per step.
MatrixSeq innovation_second_moments(const LinearSystem& sys,
                                    const ProcessDistribution& p,
                                    const VectorSeq& ref_mean) {
  const MomentTrajectory marg = p.marginals();
  const MatrixSeq pinv = input_pinvs(sys);
  MatrixSeq out;
  for (int k = 0; k < sys.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const auto [mean, cov] = innovation_moments(sys, p, marg, pinv[ks], k);
    const VectorXd gap = mean - ref_mean[ks];
    out.push_back(symmetrize(cov + gap * gap.transpose()));
  }
  return out;
}

IdentificationResult identify(const LinearSystem& sys, const Gaussian& snapshot_ini,
                              const Gaussian& snapshot_fin, NoiseEstimate theta,
                              int iterations) {
  require_full_column_rank(sys);
  if (iterations < 0) throw Error(ErrorCode::kInvalidConfig, "negative iteration count");
  IdentificationResult result;
  for (int i = 0; i < iterations; ++i) {
    result.history.push_back(theta);
    auto [bridge, ref_mean] = plain_bridge(sys, snapshot_ini, snapshot_fin, theta);
    MatrixSeq moments = innovation_second_moments(sys, bridge, ref_mean);
    if (theta.time_invariant) {
      MatrixXd avg = MatrixXd::Zero(sys.input_dim(), sys.input_dim());
      for (const auto& m : moments) avg += m;
      theta.sigma = {symmetrize(avg / static_cast<double>(moments.size()))};
    } else {
      theta.sigma = std::move(moments);
    }
    result.bridges.push_back(std::move(bridge));
  }
  result.estimate = std::move(theta);
  return result;
}

}  // namespace

IdentificationResult sbid_estimate(const LinearSystem& sys,
                                   const Gaussian& snapshot_ini,
                                   const Gaussian& snapshot_fin,
                                   const MatrixXd& theta0, int iterations) {
  if (theta0.rows() != sys.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "initial noise estimate has wrong size");
  }
  return identify(sys, snapshot_ini, snapshot_fin, NoiseEstimate{{theta0}, true},
                  iterations);
}

IdentificationResult sbtvid_estimate(const LinearSystem& sys,
                                     const Gaussian& snapshot_ini,
                                     const Gaussian& snapshot_fin,
                                     const MatrixSeq& theta0, int iterations) {
  if (static_cast<int>(theta0.size()) != sys.horizon()) {
    throw Error(ErrorCode::kDimensionMismatch, "initial noise sequence length differs from horizon");
  }
  for (const auto& th : theta0) {
    if (th.rows() != sys.input_dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "initial noise estimate has wrong size");
    }
  }
  return identify(sys, snapshot_ini, snapshot_fin, NoiseEstimate{theta0, false},
                  iterations);
}

}  // namespace midc
