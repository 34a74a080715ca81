#include <doctest.h>

#include "commands.hpp"

#include "marti/advtrain.hpp"
#include "marti/dataio.hpp"
#include "marti/objectives.hpp"
#include "marti/solver.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace marti;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("marti_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(slurp(p));
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

struct RunResult {
  int status;
  std::string out, err;
};

RunResult run(std::vector<std::string> args, const cli::VerifyHooks& hooks = {}) {
  args.insert(args.begin(), "marti-dro");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err, hooks);
  return {status, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const std::string& json) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << json;
  return p;
}

const char* kSmallMlp = R"({
  "data": {"generator": "two_ring", "n_raw": 200},
  "epsilon": 1.0,
  "train": {"epochs": 3},
  "boundary_resolution": 5,
  "xi_grid": [0.0, 0.5, 1.0],
  "sweep_epsilons": [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5]
})";

}  // namespace

TEST_CASE("train-regression at epsilon 0 reproduces ridge") {
  const fs::path dir = scratch("reg0");
  const fs::path cfg = write_config(dir, R"({"data": {"generator": "linear", "n": 120, "d": 4},
    "epsilon": 0.0, "iterations": 20000, "xi_grid": [0.0, 0.5, 1.0]})");
  const RunResult r = run({"train-regression", "--config", cfg.string(), "--out", (dir / "o").string(), "--seed", "3"});
  REQUIRE_MESSAGE(r.status == 0, r.err);

  const auto betas = read_csv(dir / "o" / "betas.csv");
  REQUIRE(betas.size() == 4);
  CHECK(betas[0] == std::vector<std::string>{"method", "b1", "b2", "b3", "b4"});
  Vector ridge(4), mart(4);
  for (Index j = 0; j < 4; ++j) {
    ridge(j) = std::stod(betas[2][j + 1]);
    mart(j) = std::stod(betas[3][j + 1]);
  }
  CHECK(betas[2][0] == "ridge");
  CHECK(betas[3][0] == "martingale");
  CHECK((ridge - mart).norm() <= 1e-4);

  // Independent ridge fit on the same split.
  const auto [tr, te] = split(gen_linear_regression(120, 4, 3), {0.6, 3});
  const Vector want = ridge_coefficients(encode_regression(tr), Matrix::Identity(4, 4), 0.08);
  CHECK((ridge - want).norm() <= 1e-12);

  const auto rmse = read_csv(dir / "o" / "rmse_vs_attack.csv");
  CHECK(rmse[0] == std::vector<std::string>{"method", "xi", "rmse"});
  REQUIRE(rmse.size() == 1 + 3 * 3);
  const Dataset ete = encode_regression(te);
  const ModelParams p = ModelParams::from_coefficients(want);
  const double clean = std::sqrt((ete.features() * p.beta).squaredNorm() / static_cast<double>(ete.rows()));
  CHECK(rmse[4][0] == "ridge");
  CHECK(std::stod(rmse[4][1]) == 0.0);
  CHECK(std::stod(rmse[4][2]) == doctest::Approx(clean).epsilon(1e-10));

  const std::string echoed = slurp(dir / "o" / "run_config.json");
  CHECK(echoed.find("\"seed\": 3") != std::string::npos);
  CHECK(echoed.find("\"epsilon\": 0.0") != std::string::npos);
}

TEST_CASE("outputs are byte-identical for the same config and seed; inputs are untouched") {
  const fs::path dir = scratch("repro");
  write_libsvm((dir / "data.libsvm").string(), gen_linear_regression(80, 3, 9));
  const std::string before = slurp(dir / "data.libsvm");
  const fs::path cfg = write_config(dir, "{\"data\": {\"path\": \"" + (dir / "data.libsvm").string() +
                                             "\"}, \"iterations\": 500}");
  REQUIRE(run({"train-regression", "--config", cfg.string(), "--out", (dir / "a").string()}).status == 0);
  REQUIRE(run({"train-regression", "--config", cfg.string(), "--out", (dir / "b").string()}).status == 0);
  for (const char* f : {"betas.csv", "rmse_vs_attack.csv", "solver_trace.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  CHECK(slurp(dir / "data.libsvm") == before);
}

TEST_CASE("verify passes on the default grid and catches a wrong-sign Tikhonov term") {
  const fs::path dir = scratch("verify");
  const RunResult ok = run({"verify", "--out", dir.string()});
  CHECK_MESSAGE(ok.status == 0, ok.err);
  const auto rows = read_csv(dir / "duality_report.csv");
  CHECK(rows[0] == std::vector<std::string>{"instance_id", "dual", "primal_lower", "closed_form", "gap"});
  CHECK(rows.size() == 51);

  cli::VerifyHooks mutated;
  mutated.closed_form = [](const ModelParams& b, const Dataset& x, const WeightMatrix& w,
                           const RobustnessConfig& rc) {
    const ObjectiveReport rep = perturbed_value(b, x, w, rc);
    return rep.total - 2.0 * rep.tikhonov_term;
  };
  const RunResult bad = run({"verify", "--out", (dir / "m").string()}, mutated);
  CHECK(bad.status == 1);
  CHECK(bad.err.find("instance 0 fails") != std::string::npos);
}

TEST_CASE("verify enforces small instances") {
  const fs::path dir = scratch("verify_big");
  const fs::path cfg = write_config(dir, R"({"verify": {"n_max": 11}})");
  const RunResult r = run({"verify", "--config", cfg.string(), "--out", dir.string()});
  CHECK(r.status == 2);
  CHECK(r.err.find("n_max") != std::string::npos);
}

TEST_CASE("config errors surface before any computation") {
  const fs::path dir = scratch("errors");
  CHECK(run({"train-regression", "--config", write_config(dir, R"({"rho": -1})").string(), "--out", dir.string()}).status == 2);
  CHECK(run({"train-regression", "--config", write_config(dir, R"({"rhoo": 1})").string(), "--out", dir.string()}).status == 2);
  CHECK(run({"train-regression", "--config", write_config(dir, "{").string(), "--out", dir.string()}).status == 2);
  CHECK(run({"train-regression", "--config", (dir / "missing.json").string()}).status == 2);
  CHECK(run({"frobnicate"}).status != 0);
  CHECK_FALSE(fs::exists(dir / "betas.csv"));
}

TEST_CASE("train-mlp traces, checkpoints and boundaries") {
  const fs::path dir = scratch("mlp");
  const fs::path cfg = write_config(dir, kSmallMlp);
  const fs::path out = dir / "o";
  const RunResult r = run({"train-mlp", "--config", cfg.string(), "--out", out.string()});
  REQUIRE_MESSAGE(r.status == 0, r.err);

  const auto trace = read_csv(out / "trace.csv");
  CHECK(trace[0] == std::vector<std::string>{"model", "index", "perturbation_norm"});
  int mart_rows = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i][0] != "martingale") continue;
    ++mart_rows;
    CHECK(std::stod(trace[i][2]) <= 1.0 + 1e-9);
  }
  CHECK(mart_rows > 0);

  // The ERM proxy's step losses match plain SGD from the same initialization.
  const Dataset train_set = gen_two_ring(200, 1.6, 1000);
  TrainConfig plain;
  plain.epochs = 3;
  plain.inner_steps = 0;
  const TrainResult sgd = train(Mlp({2, 4, 3, 2, 2}, 0), train_set, WeightMatrix::identity(2), plain);
  std::vector<double> erm;
  for (const auto& row : read_csv(out / "losses.csv")) {
    if (row[0] == "erm") erm.push_back(std::stod(row[2]));
  }
  REQUIRE(erm.size() == sgd.trace.step_losses.size());
  for (std::size_t i = 0; i < erm.size(); ++i) CHECK(std::abs(erm[i] - sgd.trace.step_losses[i]) <= 1e-6);

  const auto boundary = read_csv(out / "boundary.csv");
  CHECK(boundary[0] == std::vector<std::string>{"x1", "x2", "erm", "dro", "martingale"});
  CHECK(boundary.size() == 26);
  for (const char* m : {"erm.json", "dro.json", "martingale.json"}) CHECK(fs::exists(out / m));
}

TEST_CASE("attack-eval on checkpoints") {
  const fs::path dir = scratch("attack");
  const fs::path cfg = write_config(dir, kSmallMlp);
  REQUIRE(run({"train-mlp", "--config", cfg.string(), "--out", (dir / "t").string()}).status == 0);
  const std::string ckpt = (dir / "t" / "martingale.json").string();
  const std::string before = slurp(ckpt);
  const fs::path acfg = write_config(dir, std::string(R"({"data": {"generator": "two_ring", "n_raw": 200},
    "xi_grid": [0.0, 0.5, 1.0], "dro_gammas": [1.0, 2.0], "checkpoints": {"martingale": ")") + ckpt + "\"}}");
  const RunResult a = run({"attack-eval", "--config", acfg.string(), "--out", (dir / "a").string()});
  REQUIRE_MESSAGE(a.status == 0, a.err);
  const RunResult b = run({"attack-eval", "--config", acfg.string(), "--out", (dir / "b").string()});
  REQUIRE(b.status == 0);
  CHECK(slurp(dir / "a" / "attack_results.csv") == slurp(dir / "b" / "attack_results.csv"));
  CHECK(slurp(ckpt) == before);

  const auto rows = read_csv(dir / "a" / "attack_results.csv");
  CHECK(rows[0] == std::vector<std::string>{"model", "attack", "xi", "metric"});
  REQUIRE(rows.size() == 1 + 1 + 3 + 3 + 2);
  const std::string clean = rows[1][3];
  CHECK(rows[1][1] == "none");
  CHECK(rows[2][1] == "pgm");
  CHECK(rows[2][2] == "0");
  CHECK(rows[2][3] == clean);
  CHECK(rows[5][1] == "fgsm");
  CHECK(rows[5][3] == clean);
}

TEST_CASE("attack-eval on regression coefficients") {
  const fs::path dir = scratch("attack_reg");
  const fs::path cfg = write_config(dir, R"({"data": {"generator": "linear", "n": 100, "d": 3},
    "iterations": 300, "xi_grid": [0.0, 1.0]})");
  REQUIRE(run({"train-regression", "--config", cfg.string(), "--out", (dir / "t").string()}).status == 0);
  const fs::path acfg = write_config(dir, R"({"data": {"generator": "linear", "n": 100, "d": 3},
    "model_kind": "regression", "attacks": ["pgm"], "xi_grid": [0.0, 1.0], "betas": ")" +
                                                (dir / "t" / "betas.csv").string() + "\"}");
  REQUIRE(run({"attack-eval", "--config", acfg.string(), "--out", (dir / "a").string()}).status == 0);
  // Same split, same attack: the pgm rows reproduce rmse_vs_attack.csv.
  const auto mine = read_csv(dir / "a" / "attack_results.csv");
  const auto theirs = read_csv(dir / "t" / "rmse_vs_attack.csv");
  int matched = 0;
  for (const auto& m : mine) {
    for (const auto& t : theirs) {
      if (m[1] == "pgm" && m[0] == t[0] && m[2] == t[1]) {
        CHECK(m[3] == t[2]);
        ++matched;
      }
    }
  }
  CHECK(matched == 6);
}

TEST_CASE("sweep writes one boundary file per epsilon") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = write_config(dir, kSmallMlp);
  const RunResult r = run({"sweep", "--config", cfg.string(), "--out", dir.string()});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  for (int k = 2; k <= 15; ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "boundary_eps_%.2f.csv", k / 10.0);
    CHECK_MESSAGE(fs::exists(dir / name), name);
  }
  CHECK(read_csv(dir / "sweep.csv").size() == 15);
}
