#pragma once

#include <cmath>

namespace marti::detail {

struct GoldenResult {
  double x;
  double fx;
  int evaluations;
};

/// Golden-section minimization of a unimodal f on [lo, hi]; stops once the
/// bracket is narrower than tol * max(1, |x|). Endpoints are probed too.
template <class F>
GoldenResult golden_min(F&& f, double lo, double hi, double tol, int max_iter) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int evals = 2;
  for (int it = 0; it < max_iter; ++it) {
    if (b - a <= tol * std::fmax(1.0, std::fabs(0.5 * (a + b)))) break;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  GoldenResult best{c, fc, evals};
  if (fd < best.fx) best = {d, fd, evals};
  const double flo = f(lo);
  const double fhi = f(hi);
  best.evaluations += 2;
  if (flo < best.fx) best = {lo, flo, best.evaluations};
  if (fhi < best.fx) best = {hi, fhi, best.evaluations};
  return best;
}

}  // namespace marti::detail
