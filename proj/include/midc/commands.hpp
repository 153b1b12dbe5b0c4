#pragma once

#include <string>

#include "midc/io.hpp"

namespace midc {

/// Rendered outputs of the CLI subcommands, kept separate from file
/// handling so they can be compared byte for byte.
struct SolveOutput {
  std::string json;
  std::string table;
};

struct EstimateOutput {
  NoiseEstimate estimate;
  std::string csv;
  std::string json;
};

struct ExperimentOutput {
  ExperimentResult result;
  std::string csv;
  std::string json;
  std::string stem;  // file name stem, e.g. "experiment_alpha_0.2"
};

SolveOutput solve_midc_command(const DensitySteeringProblem& prob, int iterations);

/// Noise estimate from two snapshots.  alg4 uses the generalized bridge with
/// the initial snapshot as reference initial law.
NoiseEstimate estimate_noise(const LinearSystem& sys, const Snapshots& snaps,
                             Method method, int iterations);
EstimateOutput estimate_noise_command(const LinearSystem& sys, const Snapshots& snaps,
                                      Method method, int iterations);

ExperimentOutput experiment_command(const ExperimentConfig& cfg);

}  // namespace midc
