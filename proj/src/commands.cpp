#include "midc/commands.hpp"

#include <cstdio>

namespace midc {

SolveOutput solve_midc_command(const DensitySteeringProblem& prob, int iterations) {
  AlternationOptions opts;
  opts.iterations = iterations;
  const GeneralAlternation res = alternate_midc_general(
      prob, GaussianPrior::identity(prob.sys.input_dim(), prob.sys.horizon()), opts);

  SolveOutput out;
  out.json = trace_to_json(prob, res).dump(2) + "\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%4s  %24s  %24s  %12s  %12s\n", "iter",
                "J after policy step", "J after prior step", "cov err", "mean err");
  out.table = line;
  for (std::size_t i = 0; i < res.policies.size(); ++i) {
    std::snprintf(line, sizeof(line), "%4zu  %24.17g  %24.17g  %12.3e  %12.3e\n", i,
                  res.objective[2 * i], res.objective[2 * i + 1],
                  res.deviation.terminal_cov_error[i], res.terminal_mean_error[i]);
    out.table += line;
  }
  if (res.deviation.stop) {
    const auto& s = *res.deviation.stop;
    out.table += "stopped at iteration " + std::to_string(s.iteration) + ": " +
                 std::string(to_string(s.code));
    if (s.assumption != Assumption::kNone) {
      out.table += "(" + std::string(to_string(s.assumption)) + ")";
    }
    out.table += " " + s.detail + "\n";
  }
  return out;
}

NoiseEstimate estimate_noise(const LinearSystem& sys, const Snapshots& snaps,
                             Method method, int iterations) {
  const int m = sys.input_dim();
  const MatrixXd eye = MatrixXd::Identity(m, m);
  switch (method) {
    case Method::kAlg4: {
      const DensitySteeringProblem prob{sys, snaps.initial.mean, snaps.initial.cov,
                                        snaps.final.mean, snaps.final.cov};
      AlternationOptions opts;
      opts.iterations = iterations;
      const GeneralBridge res = alternate_sb_general(
          prob, GaussianPrior::identity(m, sys.horizon()), snaps.initial, opts);
      if (res.deviation.stop) {
        const auto& s = *res.deviation.stop;
        throw Error(s.code, s.detail, s.iteration, s.assumption);
      }
      return NoiseEstimate{res.priors.back().cov, false};
    }
    case Method::kSbid:
      return sbid_estimate(sys, snaps.initial, snaps.final, eye, iterations).estimate;
    case Method::kSbtvid:
      return sbtvid_estimate(sys, snaps.initial, snaps.final,
                             MatrixSeq(static_cast<std::size_t>(sys.horizon()), eye),
                             iterations)
          .estimate;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown method");
}

EstimateOutput estimate_noise_command(const LinearSystem& sys, const Snapshots& snaps,
                                      Method method, int iterations) {
  EstimateOutput out;
  out.estimate = estimate_noise(sys, snaps, method, iterations);
  out.csv = noise_estimate_csv(out.estimate, sys.horizon());
  Json j{{"method", std::string(to_string(method))},
         {"iterations", iterations},
         {"estimate", to_json(out.estimate)}};
  out.json = j.dump(2) + "\n";
  return out;
}

ExperimentOutput experiment_command(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  out.result = run_experiment(cfg);
  out.csv = experiment_csv(out.result);
  out.json = experiment_metadata(out.result).dump(2) + "\n";
  char alpha[40];
  std::snprintf(alpha, sizeof(alpha), "%g", cfg.alpha);
  out.stem = std::string("experiment_alpha_") + alpha;
  return out;
}

}  // namespace midc
