#pragma once

#include "marti/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace marti {

struct DenseLayer {
  Matrix weights;  ///< out x in
  Vector bias;     ///< out
};

/// Parameter gradients, one entry per layer, same shapes as the layers.
using LayerGrads = std::vector<DenseLayer>;

struct ForwardBackward {
  double loss = 0.0;
  LayerGrads grad_params;
  Vector grad_input;
};

/// Fully connected network with ELU hidden layers and a softmax cross-entropy head.
///
/// dims = {input, hidden..., classes}. Labels are class indices in [0, classes).
class Mlp {
 public:
  Mlp() = default;
  /// Gaussian init with variance 1/fan_in, biases zero.
  Mlp(std::vector<Index> dims, std::uint64_t seed);
  explicit Mlp(std::vector<DenseLayer> layers);

  const std::vector<Index>& dims() const noexcept { return dims_; }
  Index input_dim() const { return dims_.front(); }
  Index classes() const { return dims_.back(); }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  Vector scores(const Vector& x) const;
  Index predict(const Vector& x) const;
  double loss(const Vector& x, Index label) const;
  ForwardBackward forward_backward(const Vector& x, Index label) const;

  /// params -= step * grads
  void apply_update(const LayerGrads& grads, double step);

  Index num_params() const;
  Vector flatten() const;
  void unflatten(const Vector& params);

  std::string to_json() const;
  static Mlp from_json(const std::string& text);
  void save(const std::string& path) const;
  static Mlp load(const std::string& path);

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  void check_label(const Vector& x, Index label) const;

  std::vector<Index> dims_;
  std::vector<DenseLayer> layers_;
};

LayerGrads zero_grads(const Mlp& net);
void accumulate(LayerGrads& into, const LayerGrads& g, double scale = 1.0);

/// Maps a +/-1 target to class 1 / class 0.
inline Index class_label(double target) noexcept { return target > 0.0 ? 1 : 0; }

}  // namespace marti
