#include "sbfl/prior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sbfl::prior {

QuantizerSpec make_uniform_quantizer(int bits, double lo, double hi) {
  if (bits < 1 || bits > 24) throw std::invalid_argument("quantizer bits must be in [1, 24]");
  if (!(hi > lo)) throw std::invalid_argument("quantizer range must satisfy hi > lo");
  int n = 1 << bits;
  QuantizerSpec spec;
  spec.bits = bits;
  spec.boundaries.resize(static_cast<size_t>(n) + 1);
  spec.outputs.resize(static_cast<size_t>(n));
  double width = hi - lo;
  for (int i = 0; i <= n; ++i)
    spec.boundaries[static_cast<size_t>(i)] = lo + width * static_cast<double>(i) / n;
  // Midpoint outputs make quantization idempotent: every output lies strictly
  // inside its own bin.
  for (int i = 0; i < n; ++i)
    spec.outputs[static_cast<size_t>(i)] =
        0.5 * (spec.boundaries[static_cast<size_t>(i)] + spec.boundaries[static_cast<size_t>(i) + 1]);
  validate(spec);
  return spec;
}

void validate(const QuantizerSpec& spec) {
  if (spec.bits < 1 || spec.bits > 24) throw std::invalid_argument("quantizer bits must be in [1, 24]");
  size_t n = static_cast<size_t>(1) << spec.bits;
  if (spec.boundaries.size() != n + 1)
    throw std::invalid_argument("quantizer needs 2^bits + 1 boundaries");
  if (spec.outputs.size() != n)
    throw std::invalid_argument("quantizer needs 2^bits outputs");
  for (size_t i = 0; i + 1 < spec.boundaries.size(); ++i) {
    if (!std::isfinite(spec.boundaries[i]) || !(spec.boundaries[i] < spec.boundaries[i + 1]))
      throw std::invalid_argument("quantizer boundaries must be finite and strictly increasing");
  }
  if (!std::isfinite(spec.boundaries.back()))
    throw std::invalid_argument("quantizer boundaries must be finite and strictly increasing");
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(spec.outputs[i]) || spec.outputs[i] < spec.boundaries[i] ||
        spec.outputs[i] > spec.boundaries[i + 1])
      throw std::invalid_argument("quantizer outputs must lie inside their bins");
  }
}

double scalar_quantize(double x, const QuantizerSpec& spec) {
  if (!std::isfinite(x)) throw std::invalid_argument("quantizer input must be finite");
  // Bins are half-open [b_i, b_{i+1}); inputs outside the range saturate.
  auto it = std::upper_bound(spec.boundaries.begin(), spec.boundaries.end(), x);
  long idx = static_cast<long>(it - spec.boundaries.begin()) - 1;
  long top = static_cast<long>(spec.outputs.size()) - 1;
  idx = std::clamp(idx, 0L, top);
  return spec.outputs[static_cast<size_t>(idx)];
}

GaussianPriorParams estimate_gaussian_prior(const GradientVector& g) {
  if (g.empty()) throw std::invalid_argument("prior estimate needs a nonempty gradient");
  double mu = 0.0;
  for (double v : g) mu += v;
  mu /= static_cast<double>(g.size());
  double ss = 0.0;
  for (double v : g) {
    double d = v - mu;
    ss += d * d;
  }
  // Rounding can leave a tiny negative residue; the scale is clamped at zero.
  double var = std::max(ss / static_cast<double>(g.size()), 0.0);
  return {mu, std::sqrt(var)};
}

double estimate_laplacian_scale(const GradientVector& centered) {
  if (centered.empty()) throw std::invalid_argument("prior estimate needs a nonempty gradient");
  double s = 0.0;
  for (double v : centered) s += std::abs(v);
  return s / static_cast<double>(centered.size());
}

GradientVector center(const GradientVector& g, double mu) {
  GradientVector out(g.size());
  for (size_t i = 0; i < g.size(); ++i) out[i] = g[i] - mu;
  return out;
}

SignVector sign_quantize(const GradientVector& g) {
  SignVector out(g.size());
  for (size_t i = 0; i < g.size(); ++i) out[i] = g[i] >= 0.0 ? 1 : -1;
  return out;
}

}  // namespace sbfl::prior
