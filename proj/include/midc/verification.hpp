#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "midc/bridge.hpp"

namespace midc {

struct InstanceOptions {
  int max_n = 4;
  int max_T = 10;
  bool identity_input = false;  // B = I (m = n)
  bool nonzero_means = false;
};

/// Seeded random steering instance, or nullopt when the terminal-weight
/// hypotheses fail for the identity prior.
std::optional<DensitySteeringProblem> random_instance(std::uint64_t seed,
                                                      const InstanceOptions& opts = {});

/// First `count` feasible instances scanning seeds from `first_seed`.
std::vector<DensitySteeringProblem> feasible_instances(int count, std::uint64_t first_seed,
                                                       const InstanceOptions& opts = {});

/// Random SPD matrix with eigenvalues in [lo, hi].
MatrixXd random_spd(int dim, double lo, double hi, std::uint64_t seed, std::uint64_t stream);

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct NamedCheck {
  int id;
  std::string name;
  std::function<CheckResult()> run;
};

/// The acceptance suite, one entry per criterion.
std::vector<NamedCheck> acceptance_checks();
std::vector<CheckResult> run_acceptance_checks();

CheckResult check_golden_scalar();
CheckResult check_lyapunov_riccati_identity();
CheckResult check_terminal_marginals();
CheckResult check_monotone_descent();
CheckResult check_effective_input_equivalence();
CheckResult check_bridge_iterate_equality();
CheckResult check_prior_optimality();
CheckResult check_zero_mean_prior_optimality();
CheckResult check_process_identities();
CheckResult check_experiment_shape();
CheckResult check_determinism();

}  // namespace midc
