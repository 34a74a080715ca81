#include "config.hpp"

#include "marti/dataio.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace marti::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidArgument, "config: " + what); }

// Reads fields of one JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) bad(where_ + " must be an object");
  }

  template <class T>
  void get(const char* key, T& into) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      into = j_.at(key).get<T>();
    } catch (const json::exception&) {
      bad(where_ + key + " has the wrong type");
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& into) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v{};
    get(key, v);
    into = v;
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) const { return j_.at(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) bad("unknown key " + where_ + k);
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

DataSpec read_data(const json& j, const std::string& where) {
  DataSpec d;
  Reader r(j, where + ".");
  r.get("path", d.path);
  r.get("generator", d.generator);
  r.get("n", d.n);
  r.get("d", d.d);
  r.get("noise", d.noise);
  r.get("n_raw", d.n_raw);
  r.get("eta", d.eta);
  r.get("seed", d.seed);
  r.finish();
  return d;
}

json write_data(const DataSpec& d) {
  json j;
  if (!d.path.empty()) {
    j["path"] = d.path;
    return j;
  }
  j["generator"] = d.generator;
  if (d.generator != "two_ring") {
    j["n"] = d.n;
    j["d"] = d.d;
    j["noise"] = d.noise;
  } else {
    j["n_raw"] = d.n_raw;
    j["eta"] = d.eta;
  }
  j["seed"] = d.seed ? json(*d.seed) : json(nullptr);
  return j;
}

void validate_data(const DataSpec& d, const std::string& where) {
  if (!d.path.empty() || d.generator.empty()) return;
  if (d.generator == "linear") {
    if (d.n < 2 || d.d < 1) bad(where + ": linear generator needs n >= 2, d >= 1");
    if (!(d.noise >= 0.0)) bad(where + ": noise must be >= 0");
  } else if (d.generator == "two_ring") {
    if (d.n_raw < 1) bad(where + ": n_raw must be >= 1");
    if (!(d.eta > 1.0)) bad(where + ": eta must exceed 1");
  } else {
    bad(where + ": unknown generator " + d.generator);
  }
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

Dataset DataSpec::load(std::uint64_t run_seed, std::uint64_t offset) const {
  if (!path.empty()) return read_libsvm(path);
  const std::uint64_t s = seed ? *seed : run_seed + offset;
  if (generator == "two_ring") return gen_two_ring(n_raw, eta, s);
  return gen_linear_regression(n, d, s, noise);
}

Matrix WeightSpec::matrix(Index dim) const {
  if (kind == "identity") return Matrix::Identity(dim, dim);
  if (kind == "diagonal") {
    if (static_cast<Index>(diag.size()) != dim) {
      throw Error(ErrorCode::DimensionMismatch, "config: weight.diag has the wrong length");
    }
    return Eigen::Map<const Vector>(diag.data(), dim).asDiagonal();
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open weight file " + path);
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  if (!in.eof()) throw Error(ErrorCode::InvalidArgument, "weight file " + path + " has a non-numeric token");
  if (static_cast<Index>(vals.size()) != dim * dim) {
    throw Error(ErrorCode::DimensionMismatch, "weight file " + path + " is not " + std::to_string(dim) +
                                                  " x " + std::to_string(dim));
  }
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      vals.data(), dim, dim);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig c;
  Reader r(j, "");
  if (r.has("data")) c.data = read_data(r.at("data"), "data");
  if (r.has("test_data") && !r.at("test_data").is_null()) c.test_data = read_data(r.at("test_data"), "test_data");
  if (r.has("weight")) {
    Reader w(r.at("weight"), "weight.");
    w.get("kind", c.weight.kind);
    w.get("diag", c.weight.diag);
    w.get("path", c.weight.path);
    w.finish();
  }
  r.get("rho", c.rho);
  r.get("epsilon", c.epsilon);
  r.get("gamma", c.gamma);
  r.get("iterations", c.iterations);
  r.get("t0", c.t0);
  r.get("xi_grid", c.xi_grid);
  r.get("split_fraction", c.split_fraction);
  r.get("seed", c.seed);
  r.get("out", c.out);
  r.get("hidden", c.hidden);
  if (r.has("train")) {
    Reader t(r.at("train"), "train.");
    t.get("lambda", c.train.lambda);
    t.get("inner_steps", c.train.inner_steps);
    t.get("inner_lr", c.train.inner_lr);
    t.get("random_start", c.train.random_start);
    t.get("epochs", c.train.epochs);
    t.get("batch_size", c.train.batch_size);
    t.get("lr", c.train.schedule.t0);
    std::string sched = c.train.schedule.kind == StepSchedule::Kind::InvSqrt ? "invsqrt" : "constant";
    t.get("schedule", sched);
    if (sched == "invsqrt") {
      c.train.schedule.kind = StepSchedule::Kind::InvSqrt;
    } else if (sched == "constant") {
      c.train.schedule.kind = StepSchedule::Kind::Constant;
    } else {
      bad("train.schedule must be invsqrt or constant");
    }
    t.finish();
  }
  r.get("erm_epsilon", c.erm_epsilon);
  r.get("erm_lambda", c.erm_lambda);
  r.get("dro_epsilon", c.dro_epsilon);
  r.get("boundary_resolution", c.boundary_resolution);
  r.get("boundary_extent", c.boundary_extent);
  r.get("sweep_epsilons", c.sweep_epsilons);
  r.get("model_kind", c.model_kind);
  r.get("checkpoints", c.checkpoints);
  r.get("betas", c.betas);
  r.get("attacks", c.attacks);
  r.get("dro_gammas", c.dro_gammas);
  r.get("attack_steps", c.attack_steps);
  r.get("attack_alpha", c.attack_alpha);
  if (r.has("verify")) {
    Reader v(r.at("verify"), "verify.");
    v.get("instances", c.verify_instances);
    v.get("n_max", c.verify_n_max);
    v.get("d_max", c.verify_d_max);
    v.finish();
  }
  r.finish();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["data"] = write_data(data);
  j["test_data"] = test_data ? write_data(*test_data) : json(nullptr);
  j["weight"] = {{"kind", weight.kind}, {"diag", weight.diag}, {"path", weight.path}};
  j["rho"] = rho;
  j["epsilon"] = epsilon;
  j["gamma"] = gamma;
  j["iterations"] = iterations;
  j["t0"] = t0 ? json(*t0) : json(nullptr);
  j["xi_grid"] = xi_grid;
  j["split_fraction"] = split_fraction;
  j["seed"] = seed;
  j["out"] = out;
  j["hidden"] = hidden;
  j["train"] = {{"lambda", train.lambda},
                {"inner_steps", train.inner_steps},
                {"inner_lr", train.inner_lr},
                {"random_start", train.random_start},
                {"epochs", train.epochs},
                {"batch_size", train.batch_size},
                {"lr", train.schedule.t0},
                {"schedule", train.schedule.kind == StepSchedule::Kind::InvSqrt ? "invsqrt" : "constant"}};
  j["erm_epsilon"] = erm_epsilon;
  j["erm_lambda"] = erm_lambda;
  j["dro_epsilon"] = dro_epsilon;
  j["boundary_resolution"] = boundary_resolution;
  j["boundary_extent"] = boundary_extent;
  j["sweep_epsilons"] = sweep_epsilons;
  j["model_kind"] = model_kind;
  j["checkpoints"] = checkpoints;
  j["betas"] = betas;
  j["attacks"] = attacks;
  j["dro_gammas"] = dro_gammas;
  j["attack_steps"] = attack_steps;
  j["attack_alpha"] = attack_alpha;
  j["verify"] = {{"instances", verify_instances}, {"n_max", verify_n_max}, {"d_max", verify_d_max}};
  return j.dump(2) + "\n";
}

void ExperimentConfig::resolve(const std::string& command) {
  const bool network = command == "train-mlp" || command == "sweep" ||
                       (command == "attack-eval" && model_kind == "mlp");
  if (data.generator.empty()) data.generator = network ? "two_ring" : "linear";
  if (network && !test_data) {
    test_data = data;
    test_data->eta = 1.2;
    test_data->seed.reset();
  }
  if (test_data && test_data->generator.empty()) test_data->generator = data.generator;
}

void ExperimentConfig::validate(const std::string& command) const {
  validate_data(data, "data");
  if (test_data) validate_data(*test_data, "test_data");
  if (weight.kind != "identity" && weight.kind != "diagonal" && weight.kind != "file") {
    bad("weight.kind must be identity, diagonal or file");
  }
  if (weight.kind == "diagonal") {
    for (double v : weight.diag) {
      if (!positive(v)) bad("weight.diag entries must be positive");
    }
  }
  if (weight.kind == "file" && weight.path.empty()) bad("weight.path is required for kind file");
  if (!(rho >= 0.0) || !std::isfinite(rho)) bad("rho must be finite and >= 0");
  if (!(epsilon >= 0.0)) bad("epsilon must be >= 0");
  if (!positive(gamma)) bad("gamma must be positive");
  if (iterations < 1) bad("iterations must be >= 1");
  if (t0 && !positive(*t0)) bad("t0 must be positive");
  for (double xi : xi_grid) {
    if (!(xi >= 0.0) || !std::isfinite(xi)) bad("xi_grid entries must be finite and >= 0");
  }
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) bad("split_fraction must lie in (0, 1)");
  if (out.empty()) bad("out must be non-empty");

  if (command == "train-mlp" || command == "sweep") {
    TrainConfig t = train;
    t.epsilon = epsilon;
    t.validate();
    if (!positive(epsilon)) bad("epsilon must be positive for network training");
    for (Index h : hidden) {
      if (h < 1) bad("hidden layer widths must be >= 1");
    }
    if (!positive(erm_epsilon) || !positive(erm_lambda) || !positive(dro_epsilon)) {
      bad("erm_epsilon, erm_lambda and dro_epsilon must be positive");
    }
    if (boundary_resolution < 2) bad("boundary_resolution must be >= 2");
    if (!positive(boundary_extent)) bad("boundary_extent must be positive");
    if (command == "sweep" && sweep_epsilons.empty()) bad("sweep_epsilons must be non-empty");
    for (double e : sweep_epsilons) {
      if (!positive(e)) bad("sweep_epsilons entries must be positive");
    }
  }
  if (command == "attack-eval") {
    if (model_kind != "mlp" && model_kind != "regression") bad("model_kind must be mlp or regression");
    if (model_kind == "mlp" && checkpoints.empty()) bad("attack-eval needs at least one checkpoint");
    if (model_kind == "regression" && betas.empty()) bad("attack-eval on regression needs betas");
    for (double g : dro_gammas) {
      if (!positive(g)) bad("dro_gammas entries must be positive");
    }
    if (attack_steps < 1) bad("attack_steps must be >= 1");
    if (!positive(attack_alpha)) bad("attack_alpha must be positive");
  }
  if (command == "verify") {
    if (verify_instances < 1) bad("verify.instances must be >= 1");
    if (verify_n_max < 1 || verify_n_max > 10) bad("verify.n_max must lie in [1, 10]");
    if (verify_d_max < 1 || verify_d_max > 4) bad("verify.d_max must lie in [1, 4]");
    if (!positive(rho)) bad("verify needs rho > 0");
  }
}

}  // namespace marti::cli
