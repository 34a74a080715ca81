#pragma once

#include "config.hpp"

#include <functional>
#include <iosfwd>

namespace marti::cli {

/// Closed form the verifier compares the dual against; replaceable for mutation tests.
using ClosedForm = std::function<double(const ModelParams&, const Dataset&, const WeightMatrix&,
                                        const RobustnessConfig&)>;

struct VerifyHooks {
  ClosedForm closed_form;  ///< empty means perturbed_value(...).total
};

/// Tolerances applied by verify.
inline constexpr double kVerifyGapTol = 5e-3;
inline constexpr double kVerifyClosedFormTol = 1e-6;

// Each command writes into cfg.out (which must exist) and returns the process exit status.
int cmd_train_regression(const ExperimentConfig& cfg, std::ostream& log);
int cmd_train_mlp(const ExperimentConfig& cfg, std::ostream& log);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);
int cmd_attack_eval(const ExperimentConfig& cfg, std::ostream& log);
/// Failing instances are listed on err.
int cmd_verify(const ExperimentConfig& cfg, std::ostream& log, std::ostream& err,
               const VerifyHooks& hooks = {});

/// Parses `marti-dro <command> [--config P] [--seed N] [--out DIR]`, echoes the effective
/// config to DIR/run_config.json and runs the command. Errors go to err with exit status 2.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const VerifyHooks& hooks = {});

}  // namespace marti::cli
