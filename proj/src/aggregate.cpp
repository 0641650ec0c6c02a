#include "sbfl/aggregate.hpp"

#include <cmath>
#include <stdexcept>

namespace sbfl::aggregate {
namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / M_PI);

size_t check_shapes(const std::vector<std::vector<double>>& received,
                    const std::vector<LinkState>& links, size_t n_priors) {
  if (received.empty()) throw std::invalid_argument("need at least one device");
  if (links.size() != received.size() || n_priors != received.size())
    throw std::invalid_argument("received, priors, and links must agree on the device count");
  size_t m = received[0].size();
  for (const auto& y : received)
    if (y.size() != m) throw std::invalid_argument("received vectors must share one length");
  return m;
}

// Weighted-tanh sum shared by the Gaussian and Laplacian rules; weight_k is
// E|g| under device k's prior.
std::vector<double> tanh_sum(const std::vector<std::vector<double>>& received,
                             const std::vector<double>& mus,
                             const std::vector<double>& weights,
                             const std::vector<LinkState>& links, Mode mode) {
  size_t m = check_shapes(received, links, mus.size());
  std::vector<double> out(m, 0.0);
  for (size_t k = 0; k < received.size(); ++k) {
    const auto& y = received[k];
    const LinkState& l = links[k];
    if (l.sigma2 == 0.0) {
      // Noise-free limit: tanh(+-inf) = sign(h y).
      if (l.h == 0.0)
        throw std::invalid_argument("noise-free link with h = 0 carries no signal");
      double sh = sign_pm1(l.h);
      for (size_t i = 0; i < m; ++i)
        out[i] += mus[k] + weights[k] * sign_pm1(y[i]) * sh;
    } else {
      for (size_t i = 0; i < m; ++i)
        out[i] += mus[k] + weights[k] * tanh_factor(l.h, y[i], l.sigma2, mode);
    }
  }
  return out;
}

}  // namespace

double tanh_factor(double h, double y, double sigma2, Mode mode) {
  double c = mode == Mode::paper_literal ? 2.0 : 1.0;
  double arg = c * h * y / sigma2;
  // tanh saturates to +-1 long before 700, so the clamp only stops exp
  // overflow inside tanh for extreme h*y/sigma2.
  if (arg > 700.0) arg = 700.0;
  if (arg < -700.0) arg = -700.0;
  return std::tanh(arg);
}

SignVector majority_vote(const std::vector<std::vector<double>>& received,
                         const std::vector<LinkState>& links, RandomStream& rng) {
  size_t m = check_shapes(received, links, received.size());
  std::vector<long> votes(m, 0);
  for (size_t k = 0; k < received.size(); ++k) {
    double h = links[k].h;
    if (h == 0.0) {
      for (size_t i = 0; i < m; ++i) votes[i] += rng.coin() ? 1 : -1;
    } else {
      long sh = h > 0.0 ? 1 : -1;
      for (size_t i = 0; i < m; ++i)
        votes[i] += (received[k][i] >= 0.0 ? sh : -sh);
    }
  }
  SignVector out(m);
  for (size_t i = 0; i < m; ++i) out[i] = votes[i] >= 0 ? 1 : -1;
  return out;
}

std::vector<double> mmse_gaussian(const std::vector<std::vector<double>>& received,
                                  const std::vector<GaussianPriorParams>& priors,
                                  const std::vector<LinkState>& links, Mode mode) {
  std::vector<double> mus(priors.size()), weights(priors.size());
  for (size_t k = 0; k < priors.size(); ++k) {
    mus[k] = priors[k].mu;
    weights[k] = kSqrt2OverPi * priors[k].nu;
  }
  return tanh_sum(received, mus, weights, links, mode);
}

std::vector<double> mmse_laplacian(const std::vector<std::vector<double>>& received,
                                   const std::vector<LaplacianPriorParams>& priors,
                                   const std::vector<LinkState>& links, Mode mode) {
  std::vector<double> mus(priors.size()), weights(priors.size());
  for (size_t k = 0; k < priors.size(); ++k) {
    mus[k] = priors[k].mu;
    weights[k] = priors[k].lambda;
  }
  return tanh_sum(received, mus, weights, links, mode);
}

std::vector<double> blmmse(const std::vector<std::vector<double>>& received,
                           const std::vector<GaussianPriorParams>& priors,
                           const std::vector<LinkState>& links, Mode mode) {
  size_t m = check_shapes(received, links, priors.size());
  std::vector<double> out(m, 0.0);
  for (size_t k = 0; k < received.size(); ++k) {
    const LinkState& l = links[k];
    double denom = mode == Mode::paper_literal
                       ? (2.0 / M_PI) * l.h * l.h + l.sigma2
                       : l.h * l.h + l.sigma2;
    double c = kSqrt2OverPi * l.h * priors[k].nu / denom;
    for (size_t i = 0; i < m; ++i) out[i] += priors[k].mu + c * received[k][i];
  }
  return out;
}

std::vector<double> high_snr_mmse(const std::vector<std::vector<double>>& received,
                                  const std::vector<GaussianPriorParams>& priors,
                                  const std::vector<LinkState>& links) {
  size_t m = check_shapes(received, links, priors.size());
  std::vector<double> out(m, 0.0);
  for (size_t k = 0; k < received.size(); ++k) {
    if (links[k].h == 0.0)
      throw std::invalid_argument("high-snr limit undefined for h = 0");
    double sh = sign_pm1(links[k].h);
    double w = kSqrt2OverPi * priors[k].nu;
    for (size_t i = 0; i < m; ++i)
      out[i] += priors[k].mu + w * sign_pm1(received[k][i]) * sh;
  }
  return out;
}

std::vector<double> high_snr_blmmse(const std::vector<std::vector<double>>& received,
                                    const std::vector<GaussianPriorParams>& priors,
                                    const std::vector<LinkState>& links) {
  size_t m = check_shapes(received, links, priors.size());
  std::vector<double> out(m, 0.0);
  for (size_t k = 0; k < received.size(); ++k) {
    if (links[k].h == 0.0)
      throw std::invalid_argument("high-snr limit undefined for h = 0");
    // sigma2 -> 0 sends y -> h s, so c y -> sqrt(2/pi) nu s.
    double c = kSqrt2OverPi * priors[k].nu / links[k].h;
    for (size_t i = 0; i < m; ++i)
      out[i] += priors[k].mu + c * received[k][i];
  }
  return out;
}

double conditional_mean_elementwise(double y, const GaussianPriorParams& prior,
                                    const LinkState& link, Mode mode) {
  if (prior.mu != 0.0)
    throw std::invalid_argument("elementwise conditional mean needs a zero-centered prior");
  return kSqrt2OverPi * prior.nu * tanh_factor(link.h, y, link.sigma2, mode);
}

double conditional_mean_elementwise(double y, const LaplacianPriorParams& prior,
                                    const LinkState& link, Mode mode) {
  if (prior.mu != 0.0)
    throw std::invalid_argument("elementwise conditional mean needs a zero-centered prior");
  return prior.lambda * tanh_factor(link.h, y, link.sigma2, mode);
}

}  // namespace sbfl::aggregate
