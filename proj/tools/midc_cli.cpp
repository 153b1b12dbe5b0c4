#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "midc/commands.hpp"
#include "midc/verification.hpp"

namespace {

int report(const midc::Error& e) {
  std::cerr << "error: " << midc::to_string(e.code());
  if (e.assumption() != midc::Assumption::kNone) {
    std::cerr << " (" << midc::to_string(e.assumption()) << ")";
  }
  if (e.index() >= 0) std::cerr << " at index " << e.index();
  std::cerr << ": " << e.detail() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mutual-information density control and Schrodinger bridge tools"};
  app.require_subcommand(1);

  std::string problem_path;
  std::string solve_out;
  int solve_iters = 10;
  auto* solve = app.add_subcommand("solve-midc", "Run the policy/prior alternation on a problem file");
  solve->add_option("--problem", problem_path, "Problem JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--iters", solve_iters, "Alternation iterations")->check(CLI::PositiveNumber);
  solve->add_option("--out", solve_out, "Write the JSON trace here (default: stdout)");

  std::string system_path;
  std::string snapshots_path;
  std::string method_name;
  std::string estimate_out;
  int estimate_iters = 10;
  auto* estimate = app.add_subcommand("estimate-noise", "Estimate the process-noise covariance from two snapshots");
  estimate->add_option("--system", system_path, "System JSON")->required()->check(CLI::ExistingFile);
  estimate->add_option("--snapshots", snapshots_path, "Snapshots JSON")->required()->check(CLI::ExistingFile);
  estimate->add_option("--method", method_name, "Estimator")
      ->required()
      ->check(CLI::IsMember({"alg4", "sbid", "sbtvid"}));
  estimate->add_option("--iters", estimate_iters, "Iterations")->check(CLI::PositiveNumber);
  estimate->add_option("--out", estimate_out, "Write <prefix>.csv and <prefix>.json instead of printing the CSV");

  midc::ExperimentConfig cfg;
  std::string out_dir = ".";
  auto* experiment = app.add_subcommand("experiment", "Noise-covariance estimation experiment for one alpha");
  experiment->add_option("--alpha", cfg.alpha, "True noise scale")->required()->check(CLI::PositiveNumber);
  experiment->add_option("--trials", cfg.trials, "Number of trials")->check(CLI::PositiveNumber);
  experiment->add_option("--particles", cfg.particles, "Particles per trial")->check(CLI::Range(2, 100000000));
  experiment->add_option("--seed", cfg.base_seed, "Base seed");
  experiment->add_option("--out-dir", out_dir, "Output directory");

  auto* verify = app.add_subcommand("verify", "Run the acceptance property suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      const auto prob = midc::problem_from_json(midc::read_json_file(problem_path));
      const auto out = midc::solve_midc_command(prob, solve_iters);
      if (solve_out.empty()) {
        std::cout << out.json;
        std::cerr << out.table;
      } else {
        midc::write_text_file(solve_out, out.json);
        std::cout << out.table;
      }
    } else if (*estimate) {
      const auto sys = midc::system_from_json(midc::read_json_file(system_path));
      const auto snaps = midc::snapshots_from_json(midc::read_json_file(snapshots_path));
      const auto out = midc::estimate_noise_command(sys, snaps, midc::method_from_string(method_name),
                                                    estimate_iters);
      if (estimate_out.empty()) {
        std::cout << out.csv;
      } else {
        midc::write_text_file(estimate_out + ".csv", out.csv);
        midc::write_text_file(estimate_out + ".json", out.json);
      }
    } else if (*experiment) {
      cfg.validate();
      const auto out = midc::experiment_command(cfg);
      std::filesystem::create_directories(out_dir);
      const std::filesystem::path base = std::filesystem::path(out_dir) / out.stem;
      midc::write_text_file(base.string() + ".csv", out.csv);
      midc::write_text_file(base.string() + ".json", out.json);
      std::cout << out.csv;
    } else if (*verify) {
      bool all = true;
      for (const auto& c : midc::acceptance_checks()) {
        midc::CheckResult r;
        try {
          r = c.run();
        } catch (const std::exception& e) {
          r = {c.id, c.name, false, std::string("exception: ") + e.what()};
        }
        all = all && r.passed;
        std::cout << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": "
                  << r.detail << std::endl;
      }
      return all ? 0 : 1;
    }
  } catch (const midc::Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
