#pragma once

#include <optional>
#include <utility>

#include "midc/mi_control.hpp"

namespace midc {

/// Markov Gaussian path law: x_0 ~ initial,
/// x_{k+1} | x_k ~ N(drift_k x_k + offset_k, noise_k).
struct ProcessDistribution {
  Gaussian initial;
  MatrixSeq drift;
  VectorSeq offset;
  MatrixSeq noise;

  int horizon() const { return static_cast<int>(drift.size()); }
  int dim() const { return initial.dim(); }
  void validate() const;
  MomentTrajectory marginals() const;
};

struct Trajectory {
  VectorSeq states;  // length T + 1
};

/// Noise covariance per step, or a single entry broadcast over all steps.
struct NoiseEstimate {
  MatrixSeq sigma;
  bool time_invariant = false;

  const MatrixXd& at(int k) const {
    return time_invariant ? sigma.front() : sigma.at(static_cast<std::size_t>(k));
  }
};

ProcessDistribution reference_process(const LinearSystem& sys,
                                      const GaussianPrior& prior,
                                      const Gaussian& init);
ProcessDistribution controlled_process(const LinearSystem& sys,
                                       const AffinePolicy& policy,
                                       const Gaussian& init);

/// sum_k 1/2 ||B_k^+ (x_{k+1} - A_k x_k)||^2.
double potential_v(const LinearSystem& sys, const Trajectory& traj);
double expected_potential(const LinearSystem& sys, const ProcessDistribution& p);

/// KL between Markov Gaussian path laws via the chain rule.  Returns
/// kInfiniteDivergence when a support condition fails.
double kl_process(const ProcessDistribution& p, const ProcessDistribution& q);
double sb_objective(const ProcessDistribution& p, const ProcessDistribution& q,
                    const LinearSystem& sys);

/// Reference refinement for a fixed controlled process:
/// Sigma_rho_k = B^+ [(Abar - A) Sigma_k (Abar - A)^T + S_k] B^+^T.
GaussianPrior refine_reference(const LinearSystem& sys,
                               const ProcessDistribution& p);

/// Bridge-side policy recovery: P = B^+ (Abar - A), q = B^+ c,
/// Sigma = B^+ S B^+^T.
AffinePolicy policy_from_process(const LinearSystem& sys,
                                 const ProcessDistribution& p);

/// Schrodinger-bridge step: the controlled process closest to the reference
/// built from the prior, subject to the two centered marginals.
ProcessDistribution bridge_step(const DensitySteeringProblem& prob,
                                const GaussianPrior& prior);

/// priors[i] is rho^(i); controlled[i] the bridge computed from it;
/// references[i] the reference process built from priors[i].  objective
/// holds one sb_objective value per half-step.
struct BridgeTrace {
  std::vector<GaussianPrior> priors;
  std::vector<AffinePolicy> policies;
  std::vector<ProcessDistribution> controlled;
  std::vector<ProcessDistribution> references;
  std::vector<double> objective;
  std::optional<AlternationStop> stop;

  int iterations() const { return static_cast<int>(controlled.size()); }
};

BridgeTrace alternate_sb(const DensitySteeringProblem& prob,
                         const GaussianPrior& prior0, const Gaussian& init_ref,
                         const AlternationOptions& opts = {});

struct GeneralBridge {
  MeanSteering steering;
  BridgeTrace deviation;
  std::vector<GaussianPrior> priors;
  std::vector<ProcessDistribution> controlled;
  std::vector<ProcessDistribution> references;
  std::vector<double> objective;
};

GeneralBridge alternate_sb_general(const DensitySteeringProblem& prob,
                                   const GaussianPrior& prior0,
                                   const Gaussian& init_ref,
                                   const AlternationOptions& opts = {});

/// Noise-covariance identification from two snapshots without the input
/// potential.  history[i] is the estimate entering iteration i.
struct IdentificationResult {
  NoiseEstimate estimate;
  std::vector<NoiseEstimate> history;
  std::vector<ProcessDistribution> bridges;
};

IdentificationResult sbid_estimate(const LinearSystem& sys,
                                   const Gaussian& snapshot_ini,
                                   const Gaussian& snapshot_fin,
                                   const MatrixXd& theta0, int iterations);
IdentificationResult sbtvid_estimate(const LinearSystem& sys,
                                     const Gaussian& snapshot_ini,
                                     const Gaussian& snapshot_fin,
                                     const MatrixSeq& theta0, int iterations);

/// One plain-bridge step for the reference with noise N(m_k, Theta_k):
/// returns the bridge and the reference noise means m_k.
std::pair<ProcessDistribution, VectorSeq> plain_bridge(
    const LinearSystem& sys, const Gaussian& snapshot_ini,
    const Gaussian& snapshot_fin, const NoiseEstimate& theta);

}  // namespace midc
