#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "midc/bridge.hpp"

namespace midc {

enum class Method { kAlg4, kSbid, kSbtvid };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct ExperimentConfig {
  int T = 10;
  int n = 2;
  int particles = 100;
  int trials = 10;
  int alt_iters = 10;
  double alpha = 1.0;
  std::uint64_t base_seed = 20240607;
  // Empty means A = 0.8 I + 0.3 U with U uniform on [-0.5, 0.5] per trial.
  std::optional<MatrixXd> a_explicit;
  // Empty means B = I.
  std::optional<MatrixXd> b_explicit;
  std::vector<Method> methods{Method::kAlg4, Method::kSbid, Method::kSbtvid};
  // Use exact propagated moments as snapshots instead of particle fits.
  bool exact_snapshots = false;

  int input_dim() const;
  void validate() const;
};

struct MethodOutcome {
  Method method = Method::kAlg4;
  bool ok = false;
  std::string failure;
  std::vector<double> rel_err;  // k in [0, T-1]
  MatrixSeq estimate;           // k in [0, T-1]
};

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  MatrixXd A;
  Gaussian snapshot_ini;
  Gaussian snapshot_fin;
  int regularized_snapshots = 0;
  std::vector<MethodOutcome> outcomes;  // same order as cfg.methods
};

struct AggregateRow {
  int k = 0;
  Method method = Method::kAlg4;
  double mean_rel_err = 0.0;
  double std_rel_err = 0.0;  // sample standard deviation (divisor n - 1)
  int n_success = 0;
};

struct ExperimentResult {
  ExperimentConfig cfg;
  std::vector<TrialResult> trials;
  std::vector<AggregateRow> rows;  // method-major, then k
};

/// alpha ((T-1-k)/(T-1) * 0.1 I + k/(T-1) I).
MatrixXd true_noise_cov(int k, int T, int n, double alpha);

/// Particles x_0 ~ init, x_{k+1} = A_k x_k + B_k w_k, w_k ~ N(0, noise_k).
std::vector<Trajectory> simulate_particles(const LinearSystem& sys,
                                           const MatrixSeq& noise,
                                           const Gaussian& init, int count,
                                           std::uint64_t seed,
                                           std::uint64_t trial = 0);

/// Maximum-likelihood Gaussian (divisor N).
Gaussian fit_gaussian_ml(const VectorSeq& samples);

/// ||est - truth||_F / ||truth||_F.
double relative_error(const MatrixXd& est, const MatrixXd& truth);

/// Adds 1e-9 tr(cov)/n I when cov is not strictly positive definite.
/// Returns true when the shift was applied.
bool regularize_snapshot(Gaussian& g);

MatrixXd draw_system_matrix(int n, std::uint64_t seed, std::uint64_t trial);

TrialResult run_trial(const ExperimentConfig& cfg, int trial);
ExperimentResult run_experiment(const ExperimentConfig& cfg);
std::vector<AggregateRow> aggregate(const ExperimentConfig& cfg,
                                    const std::vector<TrialResult>& trials);

}  // namespace midc
