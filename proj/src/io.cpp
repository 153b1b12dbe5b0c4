#include "midc/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "midc/rng.hpp"

#ifndef MIDC_VERSION
#define MIDC_VERSION "0.0.0"
#endif

namespace midc {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ += ',';
    out_ += csv_field(fields[i]);
  }
  out_ += "\r\n";
}

Json to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

namespace {

template <typename Seq>
Json seq_to_json(const Seq& seq) {
  Json out = Json::array();
  for (const auto& x : seq) out.push_back(to_json(x));
  return out;
}

Json spectrum(const MatrixXd& sym) {
  if (sym.size() == 0) return Json::array();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(sym), Eigen::EigenvaluesOnly);
  return to_json(VectorXd(es.eigenvalues()));
}

MatrixSeq matrix_seq_from_json(const Json& j, int horizon, const char* what) {
  const bool is_list = j.is_array() && !j.empty() && j[0].is_array() &&
                       !j[0].empty() && j[0][0].is_array();
  if (!is_list) return MatrixSeq(static_cast<std::size_t>(horizon), matrix_from_json(j));
  if (static_cast<int>(j.size()) != horizon) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " list length differs from T");
  }
  MatrixSeq out;
  for (const auto& m : j) out.push_back(matrix_from_json(m));
  return out;
}

}  // namespace

Json to_json(const Gaussian& g) {
  return Json{{"mean", to_json(g.mean)}, {"cov", to_json(g.cov)}};
}

Json to_json(const LinearSystem& sys) {
  return Json{{"T", sys.horizon()},
              {"n", sys.state_dim()},
              {"m", sys.input_dim()},
              {"A", seq_to_json(sys.A())},
              {"B", seq_to_json(sys.B())}};
}

Json to_json(const AffinePolicy& p) {
  return Json{{"gain", seq_to_json(p.gain)},
              {"offset", seq_to_json(p.offset)},
              {"cov", seq_to_json(p.cov)}};
}

Json to_json(const GaussianPrior& p) {
  return Json{{"mean", seq_to_json(p.mean)}, {"cov", seq_to_json(p.cov)}};
}

Json to_json(const DensitySteeringProblem& prob) {
  return Json{{"system", to_json(prob.sys)},
              {"mu_ini", to_json(prob.mu_ini)},
              {"sigma_ini", to_json(prob.sigma_ini)},
              {"mu_fin", to_json(prob.mu_fin)},
              {"sigma_fin", to_json(prob.sigma_fin)}};
}

Json to_json(const NoiseEstimate& est) {
  return Json{{"time_invariant", est.time_invariant}, {"sigma", seq_to_json(est.sigma)}};
}

Json to_json(const ProcessDistribution& p) {
  return Json{{"initial", to_json(p.initial)},
              {"drift", seq_to_json(p.drift)},
              {"offset", seq_to_json(p.offset)},
              {"noise", seq_to_json(p.noise)}};
}

MatrixXd matrix_from_json(const Json& j) {
  if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "matrix must be a non-empty list of rows");
  }
  if (j[0].is_number()) {
    throw Error(ErrorCode::kDimensionMismatch, "matrix must be a list of rows, got a flat list");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged matrix rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

VectorXd vector_from_json(const Json& j) {
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) throw Error(ErrorCode::kDimensionMismatch, "vector must be a list");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Gaussian gaussian_from_json(const Json& j) {
  const MatrixXd cov = matrix_from_json(j.at("cov"));
  VectorXd mean = j.contains("mean") ? vector_from_json(j.at("mean"))
                                     : VectorXd::Zero(cov.rows());
  Gaussian g(std::move(mean), cov);
  g.validate();
  return g;
}

LinearSystem system_from_json(const Json& j) {
  const int t = j.at("T").get<int>();
  if (t < 1) throw Error(ErrorCode::kBadRange, "T must be at least 1");
  LinearSystem sys(matrix_seq_from_json(j.at("A"), t, "A"),
                   matrix_seq_from_json(j.at("B"), t, "B"));
  if (j.contains("n") && j.at("n").get<int>() != sys.state_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "declared n differs from A");
  }
  if (j.contains("m") && j.at("m").get<int>() != sys.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "declared m differs from B");
  }
  return sys;
}

DensitySteeringProblem problem_from_json(const Json& j) {
  LinearSystem sys = system_from_json(j.at("system"));
  const int n = sys.state_dim();
  DensitySteeringProblem prob{
      std::move(sys),
      j.contains("mu_ini") ? vector_from_json(j.at("mu_ini")) : VectorXd::Zero(n),
      matrix_from_json(j.at("sigma_ini")),
      j.contains("mu_fin") ? vector_from_json(j.at("mu_fin")) : VectorXd::Zero(n),
      matrix_from_json(j.at("sigma_fin"))};
  prob.validate();
  return prob;
}

Snapshots snapshots_from_json(const Json& j) {
  return {gaussian_from_json(j.at("initial")), gaussian_from_json(j.at("final"))};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidConfig, "cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

Json trace_to_json(const DensitySteeringProblem& prob, const GeneralAlternation& res) {
  Json iters = Json::array();
  const AlternationTrace& dev = res.deviation;
  for (int i = 0; i < dev.iterations(); ++i) {
    const auto is = static_cast<std::size_t>(i);
    Json spectra = Json::array();
    for (const auto& c : res.priors[is + 1].cov) spectra.push_back(spectrum(c));
    iters.push_back(Json{{"iteration", i},
                         {"J_policy_step", res.objective[2 * is]},
                         {"J_prior_step", res.objective[2 * is + 1]},
                         {"terminal_cov_rel_err", dev.terminal_cov_error[is]},
                         {"terminal_mean_err", res.terminal_mean_error[is]},
                         {"prior_cov_spectra", std::move(spectra)}});
  }
  Json out{{"problem", to_json(prob)},
           {"mean_steering",
            Json{{"u_bar", seq_to_json(res.steering.u_bar)},
                 {"mu_star", seq_to_json(res.steering.mu_star)}}},
           {"iterations", std::move(iters)}};
  if (!res.policies.empty()) {
    out["policy"] = to_json(res.policies.back());
    out["prior"] = to_json(res.priors[res.policies.size()]);
  }
  if (dev.stop) {
    out["stopped"] = Json{{"code", std::string(to_string(dev.stop->code))},
                          {"assumption", std::string(to_string(dev.stop->assumption))},
                          {"iteration", dev.stop->iteration},
                          {"detail", dev.stop->detail}};
  }
  return out;
}

std::string noise_estimate_csv(const NoiseEstimate& est, int horizon) {
  CsvWriter csv;
  const auto m = est.sigma.front().rows();
  std::vector<std::string> header{"k"};
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      header.push_back("theta_" + std::to_string(i) + "_" + std::to_string(j));
    }
  }
  header.push_back("spectral_norm");
  for (Eigen::Index i = 0; i < m; ++i) header.push_back("eig_" + std::to_string(i));
  csv.row(header);
  for (int k = 0; k < horizon; ++k) {
    const MatrixXd& th = est.at(k);
    std::vector<std::string> row{std::to_string(k)};
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) row.push_back(format_double(th(i, j)));
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(th), Eigen::EigenvaluesOnly);
    const VectorXd ev = es.eigenvalues();
    row.push_back(format_double(ev.cwiseAbs().maxCoeff()));
    for (Eigen::Index i = 0; i < m; ++i) row.push_back(format_double(ev(i)));
    csv.row(row);
  }
  return csv.str();
}

std::string experiment_csv(const ExperimentResult& res) {
  CsvWriter csv;
  csv.row({"k", "method", "mean_rel_err", "std_rel_err", "n_success"});
  for (const auto& r : res.rows) {
    csv.row({std::to_string(r.k), std::string(to_string(r.method)),
             format_double(r.mean_rel_err), format_double(r.std_rel_err),
             std::to_string(r.n_success)});
  }
  return csv.str();
}

Json experiment_metadata(const ExperimentResult& res) {
  const ExperimentConfig& cfg = res.cfg;
  Json methods = Json::array();
  for (Method m : cfg.methods) methods.push_back(std::string(to_string(m)));
  Json config{{"T", cfg.T},
              {"n", cfg.n},
              {"m", cfg.input_dim()},
              {"particles", cfg.particles},
              {"trials", cfg.trials},
              {"alt_iters", cfg.alt_iters},
              {"alpha", cfg.alpha},
              {"base_seed", cfg.base_seed},
              {"A_spec", cfg.a_explicit ? Json(to_json(*cfg.a_explicit))
                                        : Json("random-0.8I-plus-0.3U")},
              {"B_spec", cfg.b_explicit ? Json(to_json(*cfg.b_explicit)) : Json("identity")},
              {"methods", std::move(methods)},
              {"exact_snapshots", cfg.exact_snapshots}};
  Json trials = Json::array();
  int regularized = 0;
  for (const auto& t : res.trials) {
    Json failures = Json::array();
    for (const auto& o : t.outcomes) {
      if (!o.ok) {
        failures.push_back(Json{{"method", std::string(to_string(o.method))},
                                {"detail", o.failure}});
      }
    }
    regularized += t.regularized_snapshots;
    trials.push_back(Json{{"trial", t.trial},
                          {"seed", t.seed},
                          {"A", to_json(t.A)},
                          {"regularized_snapshots", t.regularized_snapshots},
                          {"failures", std::move(failures)}});
  }
  return Json{{"config", std::move(config)},
              {"trials", std::move(trials)},
              {"rng", std::string(kRngName)},
              {"seed_derivation", "trial seed = base_seed + trial index"},
              {"std_convention", "sample standard deviation, divisor n_success - 1"},
              {"snapshot_regularization",
               Json{{"rule", "add 1e-9 tr(cov)/n I when not positive definite"},
                    {"applied", regularized}}},
              {"versions",
               Json{{"midc", MIDC_VERSION},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                  std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)}}}};
}

}  // namespace midc
