#pragma once

#include "sbfl/rng.hpp"
#include "sbfl/types.hpp"

namespace sbfl::aggregate {

// All aggregators are pure per-coordinate maps of the K received vectors
// plus explicit side information; sums over devices use a fixed k order so
// results are independent of any internal parallelism.

// Per-coordinate sign of the vote sum, votes being sign(y/h) computed
// multiplicatively; ties resolve to +1. A device with h = 0 carries no
// signal, so its vote is a fair coin from the round's stream.
SignVector majority_vote(const std::vector<std::vector<double>>& received,
                         const std::vector<LinkState>& links,
                         RandomStream& rng);

// Sum over devices of mu_k + sqrt(2/pi) * nu_k * tanh(c * h_k * y / sigma_k^2),
// c = 1 (corrected) or 2 (paper_literal). sigma2 = 0 falls back to the
// noise-free sign form for that device.
std::vector<double> mmse_gaussian(const std::vector<std::vector<double>>& received,
                                  const std::vector<GaussianPriorParams>& priors,
                                  const std::vector<LinkState>& links,
                                  Mode mode = Mode::corrected);

// Same shape with weight lambda_k instead of sqrt(2/pi) * nu_k.
std::vector<double> mmse_laplacian(const std::vector<std::vector<double>>& received,
                                   const std::vector<LaplacianPriorParams>& priors,
                                   const std::vector<LinkState>& links,
                                   Mode mode = Mode::corrected);

// Best linear estimate mu_k + c_k * y with
//   corrected:     c_k = sqrt(2/pi) h_k nu_k / (h_k^2 + sigma_k^2)
//   paper_literal: c_k = sqrt(2/pi) h_k nu_k / ((2/pi) h_k^2 + sigma_k^2)
std::vector<double> blmmse(const std::vector<std::vector<double>>& received,
                           const std::vector<GaussianPriorParams>& priors,
                           const std::vector<LinkState>& links, Mode mode);

// Noise-free limits; both require h_k != 0.
std::vector<double> high_snr_mmse(const std::vector<std::vector<double>>& received,
                                  const std::vector<GaussianPriorParams>& priors,
                                  const std::vector<LinkState>& links);
std::vector<double> high_snr_blmmse(const std::vector<std::vector<double>>& received,
                                    const std::vector<GaussianPriorParams>& priors,
                                    const std::vector<LinkState>& links);

// Scalar conditional mean E[g | y] = E[|g|] * tanh(c h y / sigma2) for a
// zero-centered symmetric prior; E[|g|] is nu*sqrt(2/pi) (Gaussian) or
// lambda (Laplacian). Throws std::invalid_argument when mu != 0.
double conditional_mean_elementwise(double y, const GaussianPriorParams& prior,
                                    const LinkState& link,
                                    Mode mode = Mode::corrected);
double conditional_mean_elementwise(double y, const LaplacianPriorParams& prior,
                                    const LinkState& link,
                                    Mode mode = Mode::corrected);

// tanh(c*h*y/sigma2) with the argument clamped to +-700; tanh saturates to
// +-1 well before the clamp, so it never changes a result.
double tanh_factor(double h, double y, double sigma2, Mode mode);

}  // namespace sbfl::aggregate
