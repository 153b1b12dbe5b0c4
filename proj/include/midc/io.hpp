#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "midc/bridge.hpp"
#include "midc/experiment.hpp"

namespace midc {

using Json = nlohmann::ordered_json;

/// Shortest-safe text form of a double: 17 significant digits.
std::string format_double(double x);

/// RFC-4180 CSV with CRLF line endings.
class CsvWriter {
 public:
  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

std::string csv_field(std::string_view s);

Json to_json(const MatrixXd& m);
Json to_json(const VectorXd& v);
Json to_json(const Gaussian& g);
Json to_json(const LinearSystem& sys);
Json to_json(const AffinePolicy& p);
Json to_json(const GaussianPrior& p);
Json to_json(const DensitySteeringProblem& prob);
Json to_json(const NoiseEstimate& est);
Json to_json(const ProcessDistribution& p);

MatrixXd matrix_from_json(const Json& j);
VectorXd vector_from_json(const Json& j);
Gaussian gaussian_from_json(const Json& j);
/// Fields T, A, B with optional n, m.  A and B may each be a single matrix
/// (time-invariant) or a list of T matrices.
LinearSystem system_from_json(const Json& j);
/// {"system": ..., "sigma_ini", "sigma_fin", optional "mu_ini", "mu_fin"}.
DensitySteeringProblem problem_from_json(const Json& j);

struct Snapshots {
  Gaussian initial;
  Gaussian final;
};
/// {"initial": {"mean", "cov"}, "final": {"mean", "cov"}}.
Snapshots snapshots_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

/// Per-iteration summary of a non-centered alternation.
Json trace_to_json(const DensitySteeringProblem& prob, const GeneralAlternation& res);

/// Rows k, flattened Theta_k (row-major), spectral norm, eigenvalues.
std::string noise_estimate_csv(const NoiseEstimate& est, int horizon);

/// Columns k, method, mean_rel_err, std_rel_err, n_success.
std::string experiment_csv(const ExperimentResult& res);
Json experiment_metadata(const ExperimentResult& res);

}  // namespace midc
