#pragma once

#include "marti/advtrain.hpp"
#include "marti/core.hpp"
#include "marti/mnorm.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace marti::cli {

/// Where a dataset comes from: a LIBSVM file, or one of the built-in generators.
struct DataSpec {
  std::string path;                 ///< LIBSVM file; takes precedence when non-empty
  std::string generator;  ///< "linear" or "two_ring"; empty picks the command default
  Index n = 506;                    ///< linear: samples
  Index d = 13;                     ///< linear: features
  double noise = 1.5;               ///< linear: noise scale
  Index n_raw = 1000;               ///< two_ring: draws before the annulus is removed
  double eta = 1.6;                 ///< two_ring: annulus parameter
  std::optional<std::uint64_t> seed;  ///< generator seed; derived from the run seed if absent

  /// Generator seeds default to run_seed + offset.
  Dataset load(std::uint64_t run_seed, std::uint64_t offset) const;
};

/// identity | diagonal (diag) | file (whitespace-separated square matrix).
struct WeightSpec {
  std::string kind = "identity";
  std::vector<double> diag;
  std::string path;

  Matrix matrix(Index dim) const;
};

struct ExperimentConfig {
  DataSpec data;
  std::optional<DataSpec> test_data;
  WeightSpec weight;
  double rho = 0.08;
  double epsilon = 1.0;
  double gamma = 2.0;
  int iterations = 20000;
  std::optional<double> t0;  ///< solver step size; tuned on {1e-3, 1e-2, 1e-1} when absent
  std::vector<double> xi_grid = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  double split_fraction = 0.6;
  std::uint64_t seed = 0;
  std::string out = "out";

  // Networks.
  std::vector<Index> hidden = {4, 3, 2};
  TrainConfig train;
  double erm_epsilon = 1e-8;
  double erm_lambda = 1e8;
  double dro_epsilon = 1e3;
  int boundary_resolution = 61;
  double boundary_extent = 3.0;
  std::vector<double> sweep_epsilons = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8,
                                        0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5};

  // Attack evaluation.
  std::string model_kind = "mlp";  ///< "mlp" or "regression"
  std::map<std::string, std::string> checkpoints;
  std::string betas;  ///< betas.csv from train-regression
  std::vector<std::string> attacks = {"pgm", "fgsm", "dro"};
  std::vector<double> dro_gammas = {0.5, 1.0, 2.0, 4.0};
  int attack_steps = 1;
  double attack_alpha = 1.0;

  // Duality verification grid.
  int verify_instances = 50;
  Index verify_n_max = 5;
  Index verify_d_max = 3;

  /// Reads a JSON object; unknown keys are errors.
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  std::string to_json() const;

  /// Fills command-dependent defaults: the generator kind, and for network commands a
  /// held-out two-ring set at eta = 1.2 when test_data is absent.
  void resolve(const std::string& command);

  /// Checks every numeric field against the preconditions of the module that consumes it.
  void validate(const std::string& command) const;
};

}  // namespace marti::cli
