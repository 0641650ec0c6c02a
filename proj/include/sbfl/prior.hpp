#pragma once

#include "sbfl/types.hpp"

namespace sbfl::prior {

// B-bit scalar quantizer: 2^bits half-open bins [boundaries[i], boundaries[i+1])
// mapping to outputs[i]; out-of-range inputs saturate to the edge bins.
struct QuantizerSpec {
  int bits = 4;
  std::vector<double> boundaries;  // 2^bits + 1, strictly increasing
  std::vector<double> outputs;     // 2^bits, outputs[i] in [boundaries[i], boundaries[i+1]]
};

// Uniform bins over [lo, hi] with midpoint outputs (midpoints never sit on a
// boundary, which keeps quantization idempotent).
QuantizerSpec make_uniform_quantizer(int bits, double lo, double hi);

// Throws std::invalid_argument if boundaries/outputs break the invariants above.
void validate(const QuantizerSpec& spec);

double scalar_quantize(double x, const QuantizerSpec& spec);

// Sample mean and standard deviation of the coordinates; the radicand is
// clamped at zero so constant vectors cannot produce nu = -0 noise.
GaussianPriorParams estimate_gaussian_prior(const GradientVector& g);

// Laplace maximum-likelihood scale: mean absolute value of an
// already-centered vector.
double estimate_laplacian_scale(const GradientVector& g_centered);

GradientVector center(const GradientVector& g, double mu);

// sign(0) = +1 so the output is BPSK-valid.
SignVector sign_quantize(const GradientVector& g);

}  // namespace sbfl::prior
