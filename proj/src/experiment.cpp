#include "midc/experiment.hpp"

#include <cmath>
#include <string>

#include "midc/rng.hpp"

namespace midc {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kAlg4: return "alg4";
    case Method::kSbid: return "sbid";
    case Method::kSbtvid: return "sbtvid";
  }
  return "unknown";
}

Method method_from_string(std::string_view s) {
  if (s == "alg4") return Method::kAlg4;
  if (s == "sbid") return Method::kSbid;
  if (s == "sbtvid") return Method::kSbtvid;
  throw Error(ErrorCode::kInvalidConfig, "unknown method '" + std::string(s) + "'");
}

int ExperimentConfig::input_dim() const {
  return b_explicit ? static_cast<int>(b_explicit->cols()) : n;
}

void ExperimentConfig::validate() const {
  if (T < 2) throw Error(ErrorCode::kInvalidConfig, "T must be at least 2");
  if (n < 1) throw Error(ErrorCode::kInvalidConfig, "n must be positive");
  if (particles < 2) throw Error(ErrorCode::kInvalidConfig, "particles must be at least 2");
  if (trials < 1) throw Error(ErrorCode::kInvalidConfig, "trials must be at least 1");
  if (alt_iters < 0) throw Error(ErrorCode::kInvalidConfig, "alt_iters must be nonnegative");
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidConfig, "alpha must be positive");
  if (methods.empty()) throw Error(ErrorCode::kInvalidConfig, "no methods selected");
  if (a_explicit && (a_explicit->rows() != n || a_explicit->cols() != n)) {
    throw Error(ErrorCode::kDimensionMismatch, "explicit A must be n x n");
  }
  if (b_explicit && b_explicit->rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "explicit B must have n rows");
  }
}

MatrixXd true_noise_cov(int k, int T, int n, double alpha) {
  if (T < 2) throw Error(ErrorCode::kBadRange, "true noise schedule needs T >= 2");
  if (k < 0 || k > T - 1) throw Error(ErrorCode::kBadRange, "k outside [0, T-1]", k);
  const double span = static_cast<double>(T - 1);
  const double weight = static_cast<double>(T - 1 - k) / span * 0.1 +
                        static_cast<double>(k) / span;
  return alpha * weight * MatrixXd::Identity(n, n);
}

std::vector<Trajectory> simulate_particles(const LinearSystem& sys,
                                           const MatrixSeq& noise,
                                           const Gaussian& init, int count,
                                           std::uint64_t seed,
                                           std::uint64_t trial) {
  if (count < 1) throw Error(ErrorCode::kInvalidConfig, "particle count must be positive");
  if (static_cast<int>(noise.size()) != sys.horizon()) {
    throw Error(ErrorCode::kDimensionMismatch, "noise sequence length differs from horizon");
  }
  init.validate();
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const MatrixXd init_root = spd_sqrt(init.cov);
  MatrixSeq noise_root;
  for (const auto& c : noise) noise_root.push_back(spd_sqrt(c));

  std::vector<Trajectory> out(static_cast<std::size_t>(count));
  for (int p = 0; p < count; ++p) {
    const auto pu = static_cast<std::uint64_t>(p);
    const CounterRng init_rng(seed, trial, RngPurpose::kInitialState, pu);
    VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = init_rng.normal(static_cast<std::uint64_t>(i));
    VectorSeq& states = out[static_cast<std::size_t>(p)].states;
    states.push_back(init.mean + init_root * z);
    for (int k = 0; k < sys.horizon(); ++k) {
      const CounterRng step_rng(seed, trial, RngPurpose::kProcessNoise, pu,
                                static_cast<std::uint64_t>(k));
      VectorXd w(m);
      for (int i = 0; i < m; ++i) w(i) = step_rng.normal(static_cast<std::uint64_t>(i));
      const auto ks = static_cast<std::size_t>(k);
      states.push_back(sys.A(k) * states.back() + sys.B(k) * (noise_root[ks] * w));
    }
  }
  return out;
}

Gaussian fit_gaussian_ml(const VectorSeq& samples) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::kTooFewSamples, "maximum-likelihood fit needs at least 2 samples");
  }
  const auto d = samples.front().size();
  VectorXd mean = VectorXd::Zero(d);
  for (const auto& s : samples) {
    if (s.size() != d) throw Error(ErrorCode::kDimensionMismatch, "samples differ in dimension");
    mean += s;
  }
  const double count = static_cast<double>(samples.size());
  mean /= count;
  MatrixXd cov = MatrixXd::Zero(d, d);
  for (const auto& s : samples) {
    const VectorXd c = s - mean;
    cov += c * c.transpose();
  }
  return {mean, symmetrize(cov / count)};
}

double relative_error(const MatrixXd& est, const MatrixXd& truth) {
  const double denom = truth.norm();
  if (denom == 0.0) throw Error(ErrorCode::kZeroTruth, "relative error against a zero matrix");
  if (est.rows() != truth.rows() || est.cols() != truth.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "relative error arguments differ in shape");
  }
  return (est - truth).norm() / denom;
}

bool regularize_snapshot(Gaussian& g) {
  if (is_positive_definite(g.cov)) return false;
  const auto n = g.cov.rows();
  double shift = 1e-9 * g.cov.trace() / static_cast<double>(n);
  if (!(shift > 0.0)) shift = 1e-9;
  g.cov += shift * MatrixXd::Identity(n, n);
  return true;
}

MatrixXd draw_system_matrix(int n, std::uint64_t seed, std::uint64_t trial) {
  const CounterRng rng(seed, trial, RngPurpose::kSystem);
  MatrixXd upsilon(n, n);
  std::uint64_t counter = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) upsilon(i, j) = rng.uniform(counter++, -0.5, 0.5);
  }
  return 0.8 * MatrixXd::Identity(n, n) + 0.3 * upsilon;
}

namespace {

MethodOutcome run_method(Method method, const ExperimentConfig& cfg,
                         const LinearSystem& sys, const Gaussian& ini,
                         const Gaussian& fin, const MatrixSeq& truth) {
  MethodOutcome out;
  out.method = method;
  const int m = sys.input_dim();
  const MatrixXd eye = MatrixXd::Identity(m, m);
  try {
    switch (method) {
      case Method::kAlg4: {
        const DensitySteeringProblem prob{sys, ini.mean, ini.cov, fin.mean, fin.cov};
        AlternationOptions opts;
        opts.iterations = cfg.alt_iters;
        const GeneralBridge res = alternate_sb_general(
            prob, GaussianPrior::identity(m, cfg.T), ini, opts);
        if (res.deviation.stop) {
          const auto& s = *res.deviation.stop;
          throw Error(s.code, s.detail, s.iteration, s.assumption);
        }
        out.estimate = res.priors.back().cov;
        break;
      }
      case Method::kSbid: {
        const NoiseEstimate est = sbid_estimate(sys, ini, fin, eye, cfg.alt_iters).estimate;
        for (int k = 0; k < cfg.T; ++k) out.estimate.push_back(est.at(k));
        break;
      }
      case Method::kSbtvid: {
        out.estimate = sbtvid_estimate(sys, ini, fin, MatrixSeq(cfg.T, eye),
                                       cfg.alt_iters).estimate.sigma;
        break;
      }
    }
    for (int k = 0; k < cfg.T; ++k) {
      out.rel_err.push_back(relative_error(out.estimate[static_cast<std::size_t>(k)],
                                           truth[static_cast<std::size_t>(k)]));
    }
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.failure = std::string(to_string(e.code()));
    if (e.assumption() != Assumption::kNone) {
      out.failure += "(" + std::string(to_string(e.assumption())) + ")";
    }
    out.failure += ": " + e.detail();
    out.rel_err.clear();
    out.estimate.clear();
  }
  return out;
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, int trial) {
  cfg.validate();
  TrialResult res;
  res.trial = trial;
  res.seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
  const int n = cfg.n;
  const int m = cfg.input_dim();
  res.A = cfg.a_explicit ? *cfg.a_explicit : draw_system_matrix(n, res.seed, 0);
  const MatrixXd b = cfg.b_explicit ? *cfg.b_explicit : MatrixXd::Identity(n, n);
  const LinearSystem sys = LinearSystem::time_invariant(res.A, b, cfg.T);

  MatrixSeq truth;
  for (int k = 0; k < cfg.T; ++k) truth.push_back(true_noise_cov(k, cfg.T, m, cfg.alpha));
  const Gaussian init = Gaussian::standard(n);

  if (cfg.exact_snapshots) {
    Gaussian g = init;
    for (int k = 0; k < cfg.T; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      g = Gaussian(sys.A(k) * g.mean,
                   symmetrize(sys.A(k) * g.cov * sys.A(k).transpose() +
                              sys.B(k) * truth[ks] * sys.B(k).transpose()));
    }
    res.snapshot_ini = init;
    res.snapshot_fin = g;
  } else {
    const auto paths = simulate_particles(sys, truth, init, cfg.particles, res.seed, 0);
    VectorSeq first;
    VectorSeq last;
    for (const auto& p : paths) {
      first.push_back(p.states.front());
      last.push_back(p.states.back());
    }
    res.snapshot_ini = fit_gaussian_ml(first);
    res.snapshot_fin = fit_gaussian_ml(last);
  }
  res.regularized_snapshots += regularize_snapshot(res.snapshot_ini) ? 1 : 0;
  res.regularized_snapshots += regularize_snapshot(res.snapshot_fin) ? 1 : 0;

  for (Method method : cfg.methods) {
    res.outcomes.push_back(
        run_method(method, cfg, sys, res.snapshot_ini, res.snapshot_fin, truth));
  }
  return res;
}

std::vector<AggregateRow> aggregate(const ExperimentConfig& cfg,
                                    const std::vector<TrialResult>& trials) {
  std::vector<AggregateRow> rows;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    for (int k = 0; k < cfg.T; ++k) {
      AggregateRow row;
      row.k = k;
      row.method = cfg.methods[mi];
      std::vector<double> values;
      for (const auto& t : trials) {
        const MethodOutcome& o = t.outcomes[mi];
        if (o.ok) values.push_back(o.rel_err[static_cast<std::size_t>(k)]);
      }
      row.n_success = static_cast<int>(values.size());
      if (!values.empty()) {
        double sum = 0.0;
        for (double v : values) sum += v;
        row.mean_rel_err = sum / static_cast<double>(values.size());
        if (values.size() > 1) {
          double ss = 0.0;
          for (double v : values) ss += (v - row.mean_rel_err) * (v - row.mean_rel_err);
          row.std_rel_err = std::sqrt(ss / static_cast<double>(values.size() - 1));
        }
      } else {
        row.mean_rel_err = std::nan("");
        row.std_rel_err = std::nan("");
      }
      rows.push_back(row);
    }
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult res;
  res.cfg = cfg;
  for (int t = 0; t < cfg.trials; ++t) res.trials.push_back(run_trial(cfg, t));
  res.rows = aggregate(cfg, res.trials);
  return res;
}

}  // namespace midc
