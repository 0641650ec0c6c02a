#pragma once

#include <cstdint>
#include <functional>

#include "sbfl/types.hpp"

namespace sbfl::theory {

struct MseReport {
  enum class Method { quadrature, closed_form, monte_carlo };
  double value = 0.0;      // squared gradient units, >= 0
  Method method = Method::closed_form;
  double std_error = 0.0;  // 0 for deterministic methods
};

struct ConvergenceBoundInputs {
  int T = 1;               // rounds, >= 1
  double gamma = 0.0;      // base learning rate, > 0
  double L = 0.0;          // smoothness constant, > 0, gamma*L < 2
  double sigma_mse = 0.0;  // max per-round aggregation MSE, >= 0
  double f0 = 0.0;         // initial loss
  double fstar = 0.0;      // loss lower bound, <= f0
};

// (2/pi) * integral of tanh(c h y / sigma2)^2 * P(y) dy, the per-device
// shrink factor of the aggregation MSE; adaptive quadrature over
// [-(|h|+10 sigma), |h|+10 sigma] split at {-|h|, 0, |h|}, abs tol 1e-10.
double mse_integral_factor(const LinkState& link, Mode mode = Mode::corrected);

// M * sum_k nu_k^2 * (1 - factor_k). Requires zero-mean priors.
MseReport mse_quadrature(const std::vector<GaussianPriorParams>& priors,
                         const std::vector<LinkState>& links, int M,
                         Mode mode = Mode::corrected);

// Noise-free floor M * (1 - 2/pi) * sum nu_k^2.
MseReport mse_high_snr_closed_form(const std::vector<GaussianPriorParams>& priors,
                                   int M);

// M * sum_k nu_k^2 * (1 - (2/pi) h^2 / D_k) with D_k = h^2 + sigma2
// (corrected) or (2/pi) h^2 + sigma2 (paper_literal).
MseReport blmmse_mse_closed_form(const std::vector<GaussianPriorParams>& priors,
                                 const std::vector<LinkState>& links, int M,
                                 Mode mode);

// A server rule mapping the K received vectors to an estimate of the
// gradient sum; priors and links are bound by the caller.
using Aggregator =
    std::function<std::vector<double>(const std::vector<std::vector<double>>&)>;

// Empirical MSE of an aggregator: draws centered gradients from the priors,
// passes their signs through the channel, aggregates, and averages
// ||estimate - g_sigma||^2 over per-coordinate samples (coordinates are iid,
// so the M-dimensional MSE is M times the scalar one). Batches accumulate
// with compensated summation and combine in batch order, so the result is
// reproducible regardless of how batches are scheduled.
MseReport mse_monte_carlo(const Aggregator& aggregate,
                          const std::vector<GaussianPriorParams>& priors,
                          const std::vector<LinkState>& links, int M,
                          std::int64_t n_samples, std::uint64_t seed);

// Joint conditional mean E[g_k | y_1..y_K] for K <= 3 scalar devices under a
// full Gaussian prior (mean, covariance). Uses the conditional-independence
// factorization of the cross-device likelihoods, which reduces each device's
// contribution to a Phi closed form inside a single adaptive quadrature over
// g_k. Throws capability_error for K > 3 and std::invalid_argument for a
// covariance that is not positive definite.
std::vector<double> genie_bfl_conditional_mean(
    const std::vector<double>& mean, const std::vector<std::vector<double>>& cov,
    const std::vector<double>& ys, const std::vector<LinkState>& links);

// (1/sqrt(T)) * [ (f0-fstar)/(gamma(1-gamma L/2))
//                 + sigma_mse (1+ln T) (gamma^2 L/2)/(1-gamma L/2) ].
double convergence_bound(const ConvergenceBoundInputs& in);

}  // namespace sbfl::theory
