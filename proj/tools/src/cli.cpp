#include "commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace marti::cli {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const VerifyHooks& hooks) {
  CLI::App app{"Perturbed-martingale DRO experiments", "marti-dro"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"train-regression", "Fit OLS, ridge and martingale DRO; RMSE under attack"},
      {"train-mlp", "Adversarially train ERM, DRO and martingale networks on two-ring data"},
      {"attack-eval", "Evaluate checkpoints or regression coefficients under attacks"},
      {"verify", "Check strong duality and the closed form on small instances"},
      {"sweep", "Train martingale networks over an epsilon grid and emit boundaries"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "Run seed (overrides the config)");
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(config_path);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out = *out_dir;
    cfg.resolve(command);
    cfg.validate(command);
    std::filesystem::create_directories(cfg.out);
    std::ofstream(std::filesystem::path(cfg.out) / "run_config.json") << cfg.to_json();

    if (command == "train-regression") return cmd_train_regression(cfg, out);
    if (command == "train-mlp") return cmd_train_mlp(cfg, out);
    if (command == "attack-eval") return cmd_attack_eval(cfg, out);
    if (command == "verify") return cmd_verify(cfg, out, err, hooks);
    return cmd_sweep(cfg, out);
  } catch (const std::exception& e) {
    err << "marti-dro " << command << ": error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace marti::cli
