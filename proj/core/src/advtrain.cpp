#include "marti/advtrain.hpp"

#include "marti/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace marti {

void TrainConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::NonpositiveRadius, "epsilon must be positive");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be nonnegative");
  if (inner_steps < 0) throw Error(ErrorCode::InvalidArgument, "inner_steps must be >= 0");
  if (!(inner_lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "inner_lr must be positive");
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(schedule.t0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "step size must be positive");
}

namespace {

double penalized(const Mlp& net, const Vector& x, Index label, const WeightMatrix& w,
                 double lambda, const Vector& delta) {
  const double n = m_norm(w, delta);
  return net.loss(x + delta, label) - lambda * n * n;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined key
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Vector random_start(const WeightMatrix& w, double eps, std::uint64_t key) {
  std::mt19937_64 rng(key);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector d(w.dim());
  for (Index i = 0; i < d.size(); ++i) d(i) = w.is_fixed(i) ? 0.0 : normal(rng);
  const double n = m_norm(w, d);
  if (!(n > 0.0)) return Vector::Zero(w.dim());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return project_m_ball(w, d * (eps * unif(rng) / n), eps);
}

}  // namespace

InnerResult inner_maximize(const Mlp& net, const Vector& x, Index label, const WeightMatrix& w,
                           const TrainConfig& cfg, const Vector& start) {
  require_same_dim(net.input_dim(), x.size(), "inner_maximize input");
  require_same_dim(w.dim(), x.size(), "inner_maximize weight");
  InnerResult best;
  best.delta = Vector::Zero(x.size());
  best.value = net.loss(x, label);
  if (cfg.inner_steps == 0) return best;

  Vector delta = start.size() == 0 ? Vector::Zero(x.size()) : project_m_ball(w, start, cfg.epsilon);
  for (int t = 0; t < cfg.inner_steps; ++t) {
    const ForwardBackward fb = net.forward_backward(x + delta, label);
    const double dn = m_norm(w, delta);
    const double v = fb.loss - cfg.lambda * dn * dn;
    if (v > best.value) {
      best.value = v;
      best.delta = delta;
    }
    Vector grad = fb.grad_input - 2.0 * cfg.lambda * w.apply(delta);
    for (Index j : w.fixed_coords()) grad(j) = 0.0;
    const double step = cfg.inner_lr / std::sqrt(static_cast<double>(t) + 1.0);
    delta = project_m_ball(w, delta + step * grad, cfg.epsilon);
  }
  const double last = penalized(net, x, label, w, cfg.lambda, delta);
  if (last > best.value) {
    best.value = last;
    best.delta = delta;
  }

  // Second difference of the loss along Delta, compared with the penalty curvature.
  const double dn = best.delta.norm();
  if (dn > 0.0) {
    const Vector dir = best.delta / dn;
    const double h = 1e-3;
    const double curv = (net.loss(x + best.delta + h * dir, label) - 2.0 * net.loss(x + best.delta, label) +
                         net.loss(x + best.delta - h * dir, label)) /
                        (h * h);
    best.curvature_warning = curv > 2.0 * cfg.lambda * w.min_eigenvalue();
  }
  return best;
}

EpochRecord evaluate_robust(const Mlp& net, const Dataset& data, const WeightMatrix& w,
                            const TrainConfig& cfg) {
  const auto n = static_cast<std::size_t>(data.rows());
  std::vector<double> robust(n), clean(n), norms(n);
  parallel_for(n, [&](std::size_t i) {
    const Vector x = data.row(static_cast<Index>(i));
    const Index label = class_label(data.targets()(static_cast<Index>(i)));
    const InnerResult r = inner_maximize(net, x, label, w, cfg);
    robust[i] = r.value;
    clean[i] = net.loss(x, label);
    norms[i] = m_norm(w, r.delta);
  });
  EpochRecord rec;
  rec.robust_loss = std::accumulate(robust.begin(), robust.end(), 0.0) / static_cast<double>(n);
  rec.clean_loss = std::accumulate(clean.begin(), clean.end(), 0.0) / static_cast<double>(n);
  rec.max_perturbation = *std::max_element(norms.begin(), norms.end());
  return rec;
}

TrainResult train(const Mlp& init, const Dataset& data, const WeightMatrix& w,
                  const TrainConfig& cfg) {
  cfg.validate();
  require_same_dim(init.input_dim(), data.dim(), "train input");
  require_same_dim(w.dim(), data.dim(), "train weight");
  if (!data.has_targets()) throw Error(ErrorCode::InvalidArgument, "training needs targets");

  TrainResult out{init, {}};
  TrainTrace& trace = out.trace;
  const auto n = static_cast<std::size_t>(data.rows());
  trace.epochs.push_back(evaluate_robust(out.net, data, w, cfg));

  std::vector<std::size_t> order(n);
  int k = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(mix(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t lo = 0; lo < n; lo += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t hi = std::min(n, lo + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t m = hi - lo;
      std::vector<ForwardBackward> grads(m);
      std::vector<double> norms(m);
      std::vector<char> warned(m, 0);
      parallel_for(m, [&](std::size_t b) {
        const std::size_t i = order[lo + b];
        const Vector x = data.row(static_cast<Index>(i));
        const Index label = class_label(data.targets()(static_cast<Index>(i)));
        Vector start;
        if (cfg.random_start) {
          start = random_start(w, cfg.epsilon,
                               mix(mix(cfg.seed, static_cast<std::uint64_t>(epoch)), i));
        }
        const InnerResult r = inner_maximize(out.net, x, label, w, cfg, start);
        grads[b] = out.net.forward_backward(x + r.delta, label);
        norms[b] = m_norm(w, r.delta);
        warned[b] = r.curvature_warning ? 1 : 0;
      });
      LayerGrads total = zero_grads(out.net);
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < m; ++b) {
        accumulate(total, grads[b].grad_params, 1.0 / static_cast<double>(m));
        batch_loss += grads[b].loss / static_cast<double>(m);
        trace.perturbation_norms.push_back(norms[b]);
        trace.curvature_warnings += warned[b];
      }
      trace.step_losses.push_back(batch_loss);
      out.net.apply_update(total, cfg.schedule.at(k));
      ++k;
    }
    EpochRecord rec = evaluate_robust(out.net, data, w, cfg);
    rec.epoch = epoch;
    trace.epochs.push_back(rec);
  }
  return out;
}

}  // namespace marti
