#include "commands.hpp"

#include "marti/advtrain.hpp"
#include "marti/attacks.hpp"
#include "marti/dataio.hpp"
#include "marti/dual.hpp"
#include "marti/objectives.hpp"
#include "marti/solver.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace marti::cli {

namespace {

std::string num(double v) { return format_double(v); }

class CsvFile {
 public:
  CsvFile(const ExperimentConfig& cfg, const std::string& name, const std::string& header)
      : path_((std::filesystem::path(cfg.out) / name).string()), out_(path_) {
    if (!out_) throw Error(ErrorCode::Io, "cannot write " + path_);
    out_ << header << '\n';
  }

  template <class... T>
  void row(const T&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(fields), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I, class = std::enable_if_t<std::is_integral_v<I>>>
  static std::string cell(I v) { return std::to_string(v); }

  std::string path_;
  std::ofstream out_;
};

struct RegressionSplit {
  Dataset train, test;
  Matrix q;
  WeightMatrix w;
};

RegressionSplit regression_split(const ExperimentConfig& cfg) {
  const Dataset raw = cfg.data.load(cfg.seed, 0);
  auto [tr, te] = split(raw, {cfg.split_fraction, cfg.seed});
  Matrix q = cfg.weight.matrix(raw.dim());
  WeightMatrix w = WeightMatrix::response_fixed(q);
  return {encode_regression(tr), encode_regression(te), std::move(q), std::move(w)};
}

AttackConfig pgm_config(const ExperimentConfig& cfg, AttackKind kind, double budget) {
  AttackConfig ac;
  ac.kind = kind;
  ac.steps = cfg.attack_steps;
  ac.alpha = cfg.attack_alpha;
  if (kind == AttackKind::DRO) {
    ac.gamma = budget;
  } else {
    ac.xi = budget;
  }
  return ac;
}

// Budgets swept for one attack kind; the DRO attack is parameterized by its penalty.
const std::vector<double>& budgets(const ExperimentConfig& cfg, AttackKind kind) {
  return kind == AttackKind::DRO ? cfg.dro_gammas : cfg.xi_grid;
}

std::vector<Index> mlp_dims(const ExperimentConfig& cfg, Index input) {
  std::vector<Index> dims{input};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(2);
  return dims;
}

TrainConfig train_config(const ExperimentConfig& cfg, double epsilon, double lambda) {
  TrainConfig t = cfg.train;
  t.epsilon = epsilon;
  t.lambda = lambda;
  t.seed = cfg.seed;
  return t;
}

double class1_probability(const Mlp& net, const Vector& x) {
  const Vector s = net.scores(x);
  return 1.0 / (1.0 + std::exp(s(0) - s(1)));
}

// Decision-boundary samples on a square grid: x1,x2 followed by one probability per net.
void write_boundary(const ExperimentConfig& cfg, const std::string& name,
                    const std::vector<std::pair<std::string, const Mlp*>>& nets) {
  std::string header = "x1,x2";
  for (const auto& [label, net] : nets) header += "," + label;
  CsvFile f(cfg, name, header);
  const int r = cfg.boundary_resolution;
  const double e = cfg.boundary_extent;
  std::ostringstream line;
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      const Vector x = (Vector(2) << -e + 2 * e * i / (r - 1), -e + 2 * e * j / (r - 1)).finished();
      std::string cells = num(x(0)) + "," + num(x(1));
      for (const auto& entry : nets) cells += "," + num(class1_probability(*entry.second, x));
      f.row(cells);
    }
  }
}

double clean_accuracy(const Mlp& net, const Dataset& data) {
  AttackConfig none;
  none.xi = 0.0;
  return adversarial_accuracy(net, data, none);
}

}  // namespace

int cmd_train_regression(const ExperimentConfig& cfg, std::ostream& log) {
  const RegressionSplit s = regression_split(cfg);
  RobustnessConfig rc;
  rc.rho = cfg.rho;
  rc.epsilon = cfg.epsilon;
  rc.loss = LossSpec::quadratic(cfg.gamma);

  const Vector ols = ols_coefficients(s.train);
  const Vector ridge = ridge_coefficients(s.train, s.q, cfg.rho);
  const ModelParams init = ModelParams::from_coefficients(ols);
  SolveOptions opts;
  opts.iterations = cfg.iterations;
  opts.schedule.t0 = cfg.t0 ? *cfg.t0 : tune_step_size(s.train, s.w, rc, init);
  opts.record_every = std::max(1, cfg.iterations / 1000);
  const SolveTrace trace = solve(s.train, s.w, rc, init, opts);
  const Vector mart = trace.best_beta.coefficients();

  const std::vector<std::pair<std::string, Vector>> models = {
      {"ols", ols}, {"ridge", ridge}, {"martingale", mart}};

  std::string header = "method";
  for (Index j = 0; j < ols.size(); ++j) header += ",b" + std::to_string(j + 1);
  CsvFile betas(cfg, "betas.csv", header);
  for (const auto& [name, b] : models) {
    std::string cells = name;
    for (Index j = 0; j < b.size(); ++j) cells += "," + num(b(j));
    betas.row(cells);
  }

  CsvFile rmse(cfg, "rmse_vs_attack.csv", "method,xi,rmse");
  for (const auto& [name, b] : models) {
    for (double xi : cfg.xi_grid) {
      rmse.row(name, xi, adversarial_rmse(ModelParams::from_coefficients(b), s.test,
                                          pgm_config(cfg, AttackKind::PGM, xi)));
    }
  }

  CsvFile tr(cfg, "solver_trace.csv", "iteration,objective,subgradient_norm");
  for (const auto& smp : trace.samples) tr.row(smp.iteration, smp.objective, smp.subgradient_norm);

  log << "train-regression: N_train=" << s.train.rows() << " N_test=" << s.test.rows()
      << " t0=" << opts.schedule.t0 << " objective=" << trace.best_value
      << " |mart - ridge|=" << (mart - ridge).norm() << "\n";
  return 0;
}

int cmd_train_mlp(const ExperimentConfig& cfg, std::ostream& log) {
  const Dataset train_set = cfg.data.load(cfg.seed, 1000);
  const Dataset test_set = cfg.test_data->load(cfg.seed, 2000);
  const Index d = train_set.dim();
  const WeightMatrix w(d, {}, cfg.weight.matrix(d));
  const Mlp init(mlp_dims(cfg, d), cfg.seed);

  const std::vector<std::pair<std::string, TrainConfig>> runs = {
      {"erm", train_config(cfg, cfg.erm_epsilon, cfg.erm_lambda)},
      {"dro", train_config(cfg, cfg.dro_epsilon, cfg.train.lambda)},
      {"martingale", train_config(cfg, cfg.epsilon, cfg.train.lambda)}};

  CsvFile trace(cfg, "trace.csv", "model,index,perturbation_norm");
  CsvFile losses(cfg, "losses.csv", "model,step,loss");
  CsvFile epochs(cfg, "epochs.csv", "model,epoch,robust_loss,clean_loss,max_perturbation");
  CsvFile metrics(cfg, "metrics.csv", "model,clean_test_accuracy,curvature_warnings");
  std::vector<TrainResult> results;
  for (const auto& [name, tc] : runs) {
    TrainResult r = train(init, train_set, w, tc);
    for (std::size_t i = 0; i < r.trace.perturbation_norms.size(); ++i) {
      trace.row(name, i, r.trace.perturbation_norms[i]);
    }
    for (std::size_t i = 0; i < r.trace.step_losses.size(); ++i) losses.row(name, i, r.trace.step_losses[i]);
    for (const auto& e : r.trace.epochs) {
      epochs.row(name, e.epoch, e.robust_loss, e.clean_loss, e.max_perturbation);
    }
    metrics.row(name, clean_accuracy(r.net, test_set), r.trace.curvature_warnings);
    r.net.save((std::filesystem::path(cfg.out) / (name + ".json")).string());
    log << "train-mlp: " << name << " robust loss " << r.trace.epochs.front().robust_loss << " -> "
        << r.trace.epochs.back().robust_loss << "\n";
    results.push_back(std::move(r));
  }
  if (d == 2) {
    write_boundary(cfg, "boundary.csv",
                   {{"erm", &results[0].net}, {"dro", &results[1].net}, {"martingale", &results[2].net}});
  } else {
    log << "train-mlp: input is " << d << "-dimensional, boundary.csv skipped\n";
  }
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  const Dataset train_set = cfg.data.load(cfg.seed, 1000);
  const Dataset test_set = cfg.test_data->load(cfg.seed, 2000);
  const Index d = train_set.dim();
  if (d != 2) throw Error(ErrorCode::DimensionMismatch, "sweep draws 2-D decision boundaries");
  const WeightMatrix w(d, {}, cfg.weight.matrix(d));
  const Mlp init(mlp_dims(cfg, d), cfg.seed);
  CsvFile summary(cfg, "sweep.csv", "epsilon,robust_loss,clean_loss,clean_test_accuracy,boundary_file");
  for (double eps : cfg.sweep_epsilons) {
    const TrainResult r = train(init, train_set, w, train_config(cfg, eps, cfg.train.lambda));
    char name[64];
    std::snprintf(name, sizeof name, "boundary_eps_%.2f.csv", eps);
    write_boundary(cfg, name, {{"martingale", &r.net}});
    const EpochRecord& last = r.trace.epochs.back();
    summary.row(eps, last.robust_loss, last.clean_loss, clean_accuracy(r.net, test_set), name);
  }
  log << "sweep: " << cfg.sweep_epsilons.size() << " boundary files\n";
  return 0;
}

int cmd_attack_eval(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<AttackKind> kinds;
  for (const auto& a : cfg.attacks) kinds.push_back(attack_kind_from_string(a));
  CsvFile res(cfg, "attack_results.csv", "model,attack,xi,metric");

  if (cfg.model_kind == "mlp") {
    const Dataset test_set = cfg.test_data->load(cfg.seed, 2000);
    for (const auto& [name, path] : cfg.checkpoints) {
      const Mlp net = Mlp::load(path);
      res.row(name, "none", 0.0, clean_accuracy(net, test_set));
      for (AttackKind k : kinds) {
        for (double b : budgets(cfg, k)) {
          res.row(name, to_string(k), b, adversarial_accuracy(net, test_set, pgm_config(cfg, k, b)));
        }
      }
    }
    log << "attack-eval: " << cfg.checkpoints.size() << " networks on " << test_set.rows() << " samples\n";
    return 0;
  }

  const RegressionSplit s = regression_split(cfg);
  std::ifstream in(cfg.betas);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + cfg.betas);
  std::string line;
  std::getline(in, line);
  int models = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string name, cell;
    std::getline(ss, name, ',');
    std::vector<double> b;
    while (std::getline(ss, cell, ',')) b.push_back(std::stod(cell));
    const Vector coef = Eigen::Map<const Vector>(b.data(), static_cast<Index>(b.size()));
    const ModelParams p = ModelParams::from_coefficients(coef);
    AttackConfig none;
    none.xi = 0.0;
    res.row(name, "none", 0.0, adversarial_rmse(p, s.test, none));
    for (AttackKind k : kinds) {
      for (double bud : budgets(cfg, k)) res.row(name, to_string(k), bud, adversarial_rmse(p, s.test, pgm_config(cfg, k, bud)));
    }
    ++models;
  }
  log << "attack-eval: " << models << " regression models on " << s.test.rows() << " samples\n";
  return 0;
}

int cmd_verify(const ExperimentConfig& cfg, std::ostream& log, std::ostream& err,
               const VerifyHooks& hooks) {
  const ClosedForm closed = hooks.closed_form
                                ? hooks.closed_form
                                : ClosedForm([](const ModelParams& b, const Dataset& x, const WeightMatrix& w,
                                                const RobustnessConfig& rc) { return perturbed_value(b, x, w, rc).total; });
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CsvFile report(cfg, "duality_report.csv", "instance_id,dual,primal_lower,closed_form,gap");
  std::vector<int> failing;
  for (int k = 0; k < cfg.verify_instances; ++k) {
    const Index n = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(cfg.verify_n_max));
    const Index d = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(cfg.verify_d_max));
    Matrix x(n, d);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < d; ++j) x(i, j) = normal(rng);
    }
    Vector beta(d), diag(d);
    for (Index j = 0; j < d; ++j) {
      beta(j) = normal(rng);
      diag(j) = 0.5 + unit(rng);
    }
    RobustnessConfig rc;
    rc.rho = 0.01 + 0.98 * unit(rng);
    rc.epsilon = 2.0 * std::sqrt(rc.rho) * (0.01 + 0.98 * unit(rng));
    rc.loss = LossSpec::quadratic(cfg.gamma, 0.3 * normal(rng));
    const Dataset data(x);
    const WeightMatrix w = WeightMatrix::diagonal(diag);
    const ModelParams b{beta};
    const DualityReport rep = verify_duality(b, data, w, rc);
    const double cf = closed(b, data, w, rc);
    const double gap = (rep.dual_value - rep.primal_lower) / std::abs(rep.dual_value);
    const double cf_err = std::abs(rep.dual_value - cf) / std::max(std::abs(cf), 1e-300);
    report.row(k, rep.dual_value, rep.primal_lower, cf, gap);
    if (!(gap <= kVerifyGapTol && gap >= -1e-9 && cf_err <= kVerifyClosedFormTol)) {
      failing.push_back(k);
      err << "verify: instance " << k << " fails: gap " << gap << ", closed-form error " << cf_err << "\n";
    }
  }
  log << "verify: " << cfg.verify_instances - static_cast<int>(failing.size()) << "/" << cfg.verify_instances
      << " instances within tolerance\n";
  return failing.empty() ? 0 : 1;
}

}  // namespace marti::cli
