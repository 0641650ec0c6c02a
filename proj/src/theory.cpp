#include "sbfl/theory.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sbfl/aggregate.hpp"
#include "sbfl/channel.hpp"
#include "sbfl/quadrature.hpp"
#include "sbfl/rng.hpp"

namespace sbfl::theory {
namespace {

const double kTwoOverPi = 2.0 / M_PI;

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x, double mean, double var) {
  double d = x - mean;
  return std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
}

void check_zero_mean(const std::vector<GaussianPriorParams>& priors) {
  for (const auto& p : priors)
    if (p.mu != 0.0)
      throw std::invalid_argument("analytic MSE forms need zero-mean priors");
}

}  // namespace

double mse_integral_factor(const LinkState& link, Mode mode) {
  if (!(link.sigma2 > 0.0)) throw std::invalid_argument("noise variance must be positive");
  double h = link.h;
  double s = std::sqrt(link.sigma2);
  double half_width = std::abs(h) + 10.0 * s;
  auto f = [&](double y) {
    double t = aggregate::tanh_factor(h, y, link.sigma2, mode);
    return t * t * channel::marginal_density(y, link);
  };
  // The mixture peaks at +-|h| and tanh^2 kinks through zero; putting all
  // three on segment endpoints keeps them sampled at any noise level.
  double integral = quadrature::integrate_segments(
      f, -half_width, half_width, {-std::abs(h), 0.0, std::abs(h)}, 1e-10);
  return kTwoOverPi * integral;
}

MseReport mse_quadrature(const std::vector<GaussianPriorParams>& priors,
                         const std::vector<LinkState>& links, int M, Mode mode) {
  if (M < 1) throw std::invalid_argument("dimension must be at least 1");
  if (priors.empty() || priors.size() != links.size())
    throw std::invalid_argument("priors and links must agree on the device count");
  check_zero_mean(priors);
  double sum = 0.0;
  for (size_t k = 0; k < priors.size(); ++k) {
    double nu2 = priors[k].nu * priors[k].nu;
    sum += nu2 * (1.0 - mse_integral_factor(links[k], mode));
  }
  return {static_cast<double>(M) * sum, MseReport::Method::quadrature, 0.0};
}

MseReport mse_high_snr_closed_form(const std::vector<GaussianPriorParams>& priors,
                                   int M) {
  if (M < 1) throw std::invalid_argument("dimension must be at least 1");
  if (priors.empty()) throw std::invalid_argument("need at least one device");
  check_zero_mean(priors);
  double sum = 0.0;
  for (const auto& p : priors) sum += p.nu * p.nu;
  return {static_cast<double>(M) * (1.0 - kTwoOverPi) * sum,
          MseReport::Method::closed_form, 0.0};
}

MseReport blmmse_mse_closed_form(const std::vector<GaussianPriorParams>& priors,
                                 const std::vector<LinkState>& links, int M,
                                 Mode mode) {
  if (M < 1) throw std::invalid_argument("dimension must be at least 1");
  if (priors.empty() || priors.size() != links.size())
    throw std::invalid_argument("priors and links must agree on the device count");
  check_zero_mean(priors);
  double sum = 0.0;
  for (size_t k = 0; k < priors.size(); ++k) {
    const LinkState& l = links[k];
    double h2 = l.h * l.h;
    double denom = mode == Mode::paper_literal ? kTwoOverPi * h2 + l.sigma2
                                               : h2 + l.sigma2;
    double nu2 = priors[k].nu * priors[k].nu;
    sum += nu2 * (1.0 - kTwoOverPi * h2 / denom);
  }
  return {static_cast<double>(M) * sum, MseReport::Method::closed_form, 0.0};
}

MseReport mse_monte_carlo(const Aggregator& aggregate,
                          const std::vector<GaussianPriorParams>& priors,
                          const std::vector<LinkState>& links, int M,
                          std::int64_t n_samples, std::uint64_t seed) {
  if (M < 1) throw std::invalid_argument("dimension must be at least 1");
  if (n_samples < 1000) throw std::invalid_argument("need at least 1000 samples");
  size_t K = priors.size();
  if (K == 0 || links.size() != K)
    throw std::invalid_argument("priors and links must agree on the device count");

  const std::int64_t kBatch = 1'000'000;
  double sum = 0.0, sum_c = 0.0;    // Kahan accumulators across batches
  double sumsq = 0.0, sumsq_c = 0.0;

  std::vector<double> g_sigma;
  std::vector<std::vector<double>> received(K);
  SignVector s;
  std::int64_t done = 0;
  std::uint64_t batch_idx = 0;
  while (done < n_samples) {
    auto m = static_cast<size_t>(std::min(kBatch, n_samples - done));
    g_sigma.assign(m, 0.0);
    s.resize(m);
    for (size_t k = 0; k < K; ++k) {
      RandomStream gs(seed, StreamPurpose::monte_carlo, k, batch_idx);
      RandomStream ns(seed, StreamPurpose::noise, k, batch_idx);
      // Coordinates are iid, so each sample is one scalar coordinate of a
      // fresh round; priors with mu != 0 shift both truth and estimate.
      for (size_t i = 0; i < m; ++i) {
        double centered = priors[k].nu * gs.gaussian();
        g_sigma[i] += priors[k].mu + centered;
        s[i] = centered >= 0.0 ? 1 : -1;
      }
      received[k] = channel::transmit(s, links[k], ns);
    }
    std::vector<double> est = aggregate(received);
    if (est.size() != m)
      throw std::invalid_argument("aggregator returned a wrong-size estimate");
    double bsum = 0.0, bc = 0.0, bsq = 0.0, bsqc = 0.0;
    for (size_t i = 0; i < m; ++i) {
      double e = est[i] - g_sigma[i];
      double x = e * e;
      double y1 = x - bc;
      double t1 = bsum + y1;
      bc = (t1 - bsum) - y1;
      bsum = t1;
      double y2 = x * x - bsqc;
      double t2 = bsq + y2;
      bsqc = (t2 - bsq) - y2;
      bsq = t2;
    }
    // Batches combine in index order so any scheduling reproduces this sum.
    double y1 = bsum - sum_c;
    double t1 = sum + y1;
    sum_c = (t1 - sum) - y1;
    sum = t1;
    double y2 = bsq - sumsq_c;
    double t2 = sumsq + y2;
    sumsq_c = (t2 - sumsq) - y2;
    sumsq = t2;
    done += static_cast<std::int64_t>(m);
    ++batch_idx;
  }
  double n = static_cast<double>(n_samples);
  double mean = sum / n;
  double var = std::max(sumsq / n - mean * mean, 0.0);
  double se = std::sqrt(var / n);
  return {static_cast<double>(M) * mean, MseReport::Method::monte_carlo,
          static_cast<double>(M) * se};
}

std::vector<double> genie_bfl_conditional_mean(
    const std::vector<double>& mean, const std::vector<std::vector<double>>& cov,
    const std::vector<double>& ys, const std::vector<LinkState>& links) {
  size_t K = ys.size();
  if (K == 0) throw std::invalid_argument("need at least one device");
  if (K > 3)
    throw capability_error("joint conditional mean supports at most 3 devices");
  if (mean.size() != K || cov.size() != K || links.size() != K)
    throw std::invalid_argument("mean, covariance, signals, and links must agree on the device count");

  Eigen::MatrixXd S(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  for (size_t i = 0; i < K; ++i) {
    if (cov[i].size() != K) throw std::invalid_argument("covariance must be square");
    for (size_t j = 0; j < K; ++j) S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov[i][j];
  }
  double scale = std::max(S.cwiseAbs().maxCoeff(), 1e-300);
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("covariance must be positive definite");

  std::vector<double> out(K);
  for (size_t k = 0; k < K; ++k) {
    double mk = mean[k];
    double vkk = S(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    double sk = std::sqrt(vkk);

    // Conditioned on g_k = g, every other gbar_i is Gaussian and its sign
    // probability closes the i-th likelihood into two Phi terms, leaving a
    // single 1-D integral over g.
    auto weight = [&](double g) {
      double w = normal_pdf(g, mk, vkk);
      for (size_t i = 0; i < K; ++i) {
        if (i == k) {
          w *= channel::likelihood(ys[i], g >= 0.0 ? 1 : -1, links[i]);
          continue;
        }
        double sik = S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        double m_ig = mean[i] + sik / vkk * (g - mk);
        double s2 =
            S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) - sik * sik / vkk;
        double p_pos = s2 > 0.0 ? phi_cdf(m_ig / std::sqrt(s2)) : (m_ig >= 0.0 ? 1.0 : 0.0);
        w *= channel::likelihood(ys[i], 1, links[i]) * p_pos +
             channel::likelihood(ys[i], -1, links[i]) * (1.0 - p_pos);
      }
      return w;
    };

    // Normalize by the largest probe value so tiny likelihood products do
    // not underflow inside the quadrature.
    double ref = 0.0;
    for (double probe : {mk, mk - sk, mk + sk, 0.0})
      ref = std::max(ref, weight(probe));
    if (!(ref > 0.0) || !std::isfinite(ref)) ref = 1.0;

    double lo = mk - 12.0 * sk;
    double hi = mk + 12.0 * sk;
    auto num_f = [&](double g) { return g * weight(g) / ref; };
    auto den_f = [&](double g) { return weight(g) / ref; };
    std::vector<double> knots{0.0, mk};
    double tol_den = 1e-10 * sk;
    double tol_num = tol_den * (std::abs(mk) + sk + 1.0);
    double num = quadrature::integrate_segments(num_f, lo, hi, knots, tol_num);
    double den = quadrature::integrate_segments(den_f, lo, hi, knots, tol_den);
    if (!(den > 0.0) || !std::isfinite(num))
      throw numerical_error("posterior mass underflowed in the joint conditional mean");
    out[k] = num / den;
  }
  return out;
}

double convergence_bound(const ConvergenceBoundInputs& in) {
  if (in.T < 1) throw std::invalid_argument("need at least one round");
  if (!(in.gamma > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(in.L > 0.0)) throw std::invalid_argument("smoothness constant must be positive");
  if (!(in.gamma * in.L < 2.0))
    throw std::invalid_argument("bound requires gamma * L < 2");
  if (in.sigma_mse < 0.0) throw std::invalid_argument("MSE level must be nonnegative");
  if (!(in.f0 >= in.fstar))
    throw std::invalid_argument("initial loss must be at least the lower bound");
  double denom = 1.0 - in.gamma * in.L / 2.0;
  double t = static_cast<double>(in.T);
  double term1 = (in.f0 - in.fstar) / (in.gamma * denom);
  double term2 =
      in.sigma_mse * (1.0 + std::log(t)) * (in.gamma * in.gamma * in.L / 2.0) / denom;
  return (term1 + term2) / std::sqrt(t);
}

}  // namespace sbfl::theory
