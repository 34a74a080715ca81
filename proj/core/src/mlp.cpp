#include "marti/mlp.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace marti {

namespace {

constexpr const char* kFormat = "marti-mlp";
constexpr int kVersion = 1;

double elu(double z) noexcept { return z > 0.0 ? z : std::expm1(z); }
double elu_prime(double z) noexcept { return z > 0.0 ? 1.0 : std::exp(z); }

}  // namespace

Mlp::Mlp(std::vector<Index> dims, std::uint64_t seed) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw Error(ErrorCode::InvalidArgument, "mlp needs input and output dims");
  for (Index d : dims_) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "mlp layer dims must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    DenseLayer layer;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    layer.weights.resize(dims_[l + 1], dims_[l]);
    for (Index r = 0; r < layer.weights.rows(); ++r) {
      for (Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = scale * normal(rng);
    }
    layer.bias = Vector::Zero(dims_[l + 1]);
    layers_.push_back(std::move(layer));
  }
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error(ErrorCode::InvalidArgument, "mlp needs at least one layer");
  dims_.push_back(layers_.front().weights.cols());
  for (const auto& layer : layers_) {
    if (layer.weights.cols() != dims_.back() || layer.bias.size() != layer.weights.rows()) {
      throw Error(ErrorCode::DimensionMismatch, "mlp layer shapes do not chain");
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "mlp parameters must be finite");
    }
    dims_.push_back(layer.weights.rows());
  }
}

void Mlp::check_label(const Vector& x, Index label) const {
  require_same_dim(input_dim(), x.size(), "mlp input");
  if (label < 0 || label >= classes()) {
    throw Error(ErrorCode::InvalidArgument, "label outside [0, classes)");
  }
}

Vector Mlp::scores(const Vector& x) const {
  require_same_dim(input_dim(), x.size(), "mlp input");
  Vector a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vector z = layers_[l].weights * a + layers_[l].bias;
    if (l + 1 < layers_.size()) z = z.unaryExpr([](double v) { return elu(v); });
    a = std::move(z);
  }
  return a;
}

Index Mlp::predict(const Vector& x) const {
  Index best = 0;
  scores(x).maxCoeff(&best);
  return best;
}

double Mlp::loss(const Vector& x, Index label) const {
  check_label(x, label);
  const Vector s = scores(x);
  const double m = s.maxCoeff();
  return m + std::log((s.array() - m).exp().sum()) - s(label);
}

ForwardBackward Mlp::forward_backward(const Vector& x, Index label) const {
  check_label(x, label);
  const std::size_t depth = layers_.size();
  std::vector<Vector> acts(depth + 1);
  std::vector<Vector> pre(depth);
  acts[0] = x;
  for (std::size_t l = 0; l < depth; ++l) {
    pre[l] = layers_[l].weights * acts[l] + layers_[l].bias;
    acts[l + 1] = l + 1 < depth ? Vector(pre[l].unaryExpr([](double v) { return elu(v); }))
                                : pre[l];
  }
  const Vector& s = acts[depth];
  const double m = s.maxCoeff();
  const Vector e = (s.array() - m).exp().matrix();
  const double z = e.sum();

  ForwardBackward out;
  out.loss = m + std::log(z) - s(label);
  out.grad_params.resize(depth);
  Vector delta = e / z;
  delta(label) -= 1.0;
  for (std::size_t l = depth; l-- > 0;) {
    out.grad_params[l].weights = delta * acts[l].transpose();
    out.grad_params[l].bias = delta;
    Vector back = layers_[l].weights.transpose() * delta;
    if (l > 0) {
      back = back.cwiseProduct(pre[l - 1].unaryExpr([](double v) { return elu_prime(v); }));
    }
    delta = std::move(back);
  }
  out.grad_input = std::move(delta);
  return out;
}

void Mlp::apply_update(const LayerGrads& grads, double step) {
  if (grads.size() != layers_.size()) throw Error(ErrorCode::DimensionMismatch, "grad layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].weights -= step * grads[l].weights;
    layers_[l].bias -= step * grads[l].bias;
  }
}

Index Mlp::num_params() const {
  Index n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

Vector Mlp::flatten() const {
  Vector out(num_params());
  Index k = 0;
  for (const auto& layer : layers_) {
    for (Index r = 0; r < layer.weights.rows(); ++r) {
      for (Index c = 0; c < layer.weights.cols(); ++c) out(k++) = layer.weights(r, c);
    }
    for (Index r = 0; r < layer.bias.size(); ++r) out(k++) = layer.bias(r);
  }
  return out;
}

void Mlp::unflatten(const Vector& params) {
  require_same_dim(num_params(), params.size(), "mlp parameter vector");
  Index k = 0;
  for (auto& layer : layers_) {
    for (Index r = 0; r < layer.weights.rows(); ++r) {
      for (Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = params(k++);
    }
    for (Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = params(k++);
  }
}

std::string Mlp::to_json() const {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["activation"] = "elu";
  j["dims"] = dims_;
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : layers_) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Index r = 0; r < layer.weights.rows(); ++r) {
      for (Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    }
    std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    j["layers"].push_back({{"weights", w}, {"bias", b}});
  }
  return j.dump(2);
}

Mlp Mlp::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat || j.at("version").get<int>() != kVersion) {
      throw Error(ErrorCode::Io, "unsupported checkpoint format or version");
    }
    const auto dims = j.at("dims").get<std::vector<Index>>();
    const auto& jl = j.at("layers");
    if (dims.size() < 2 || jl.size() != dims.size() - 1) {
      throw Error(ErrorCode::Io, "checkpoint dims and layers disagree");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < jl.size(); ++l) {
      const auto w = jl[l].at("weights").get<std::vector<double>>();
      const auto b = jl[l].at("bias").get<std::vector<double>>();
      const Index rows = dims[l + 1];
      const Index cols = dims[l];
      if (static_cast<Index>(w.size()) != rows * cols || static_cast<Index>(b.size()) != rows) {
        throw Error(ErrorCode::Io, "checkpoint layer size mismatch");
      }
      DenseLayer layer;
      layer.weights.resize(rows, cols);
      for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      }
      layer.bias = Eigen::Map<const Vector>(b.data(), rows);
      layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed checkpoint: ") + e.what());
  }
}

void Mlp::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << to_json() << '\n';
}

Mlp Mlp::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.dims_ != b.dims_) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].weights != b.layers_[l].weights || a.layers_[l].bias != b.layers_[l].bias) {
      return false;
    }
  }
  return true;
}

LayerGrads zero_grads(const Mlp& net) {
  LayerGrads g;
  for (const auto& layer : net.layers()) {
    g.push_back({Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
                 Vector::Zero(layer.bias.size())});
  }
  return g;
}

void accumulate(LayerGrads& into, const LayerGrads& g, double scale) {
  if (into.size() != g.size()) throw Error(ErrorCode::DimensionMismatch, "grad layers");
  for (std::size_t l = 0; l < g.size(); ++l) {
    into[l].weights += scale * g[l].weights;
    into[l].bias += scale * g[l].bias;
  }
}

}  // namespace marti
