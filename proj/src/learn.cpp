#include "sbfl/learn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sbfl/aggregate.hpp"
#include "sbfl/channel.hpp"

namespace sbfl::learn {
namespace {

int common_dimension(const std::vector<data::DeviceDataset>& devices) {
  if (devices.empty()) throw std::invalid_argument("need at least one device");
  int m = devices[0].M;
  for (const auto& d : devices)
    if (d.M != m) throw std::invalid_argument("devices must share the model dimension");
  return m;
}

long total_samples(const std::vector<data::DeviceDataset>& devices) {
  long n = 0;
  for (const auto& d : devices) n += d.N;
  return n;
}

void validate_plan(const TrainingPlan& plan) {
  if (!(plan.gamma > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(plan.delta >= 0.0 && plan.delta < 1.0))
    throw std::invalid_argument("momentum weight must lie in [0, 1)");
  if (plan.rounds < 1) throw std::invalid_argument("need at least one round");
  if (!(plan.divergence_threshold > 0.0))
    throw std::invalid_argument("divergence threshold must be positive");
  if (plan.batch_size < 0) throw std::invalid_argument("batch size must be nonnegative");
  if (plan.prior_quantization.enabled) {
    if (plan.prior_quantization.bits < 1 || plan.prior_quantization.bits > 24)
      throw std::invalid_argument("quantizer bits must be in [1, 24]");
    if (!(plan.prior_quantization.nu_ref > 0.0) || !(plan.prior_quantization.mu_ref > 0.0))
      throw std::invalid_argument("quantizer reference scales must be positive");
  }
}

// Gradient of the unnormalized device loss over a column subset, scaled by
// N/B so the estimate stays unbiased for the full gradient.
GradientVector batch_gradient(const data::DeviceDataset& d,
                              const std::vector<double>& w,
                              const std::vector<int>& cols, double scale) {
  GradientVector g(static_cast<size_t>(d.M), 0.0);
  for (int n : cols) {
    double r = -d.z[static_cast<size_t>(n)];
    for (int m = 0; m < d.M; ++m) r += d.x(m, n) * w[static_cast<size_t>(m)];
    for (int m = 0; m < d.M; ++m) g[static_cast<size_t>(m)] += 2.0 * scale * d.x(m, n) * r;
  }
  return g;
}

GradientVector device_gradient(const data::DeviceDataset& d,
                               const std::vector<double>& w,
                               const TrainingPlan& plan, std::uint64_t seed,
                               std::uint64_t dev, int round) {
  if (plan.batch_size <= 0 || plan.batch_size >= d.N)
    return local_gradient_linreg(d, w);
  int B = plan.batch_size;
  // Partial Fisher-Yates draws B distinct columns from this round's stream.
  RandomStream bs(seed, StreamPurpose::batch, dev, static_cast<std::uint64_t>(round));
  std::vector<int> idx(static_cast<size_t>(d.N));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < B; ++i) {
    auto j = static_cast<size_t>(i) +
             static_cast<size_t>(bs.uniform() * static_cast<double>(d.N - i));
    if (j >= idx.size()) j = idx.size() - 1;
    std::swap(idx[static_cast<size_t>(i)], idx[j]);
  }
  idx.resize(static_cast<size_t>(B));
  return batch_gradient(d, w, idx, static_cast<double>(d.N) / B);
}

struct DeviceMessage {
  std::vector<double> received;
  GaussianPriorParams gp;
  LaplacianPriorParams lp;
  GradientVector g;
};

struct QuantizerPair {
  bool enabled = false;
  prior::QuantizerSpec mu_spec;
  prior::QuantizerSpec scale_spec;
};

QuantizerPair make_quantizers(const TrainingPlan& plan) {
  QuantizerPair q;
  q.enabled = plan.prior_quantization.enabled;
  if (q.enabled) {
    double rs = 4.0 * plan.prior_quantization.nu_ref;
    double rm = 4.0 * plan.prior_quantization.mu_ref;
    q.mu_spec = prior::make_uniform_quantizer(plan.prior_quantization.bits, -rm, rm);
    q.scale_spec = prior::make_uniform_quantizer(plan.prior_quantization.bits, 0.0, rs);
  }
  return q;
}

// One device's uplink: gradient -> prior fit -> center -> sign -> transmit.
// k is the device's global index, which keys its random streams.
DeviceMessage device_uplink(const data::DeviceDataset& d, const std::vector<double>& w,
                            const TrainingPlan& plan, const QuantizerPair& q,
                            const LinkState& link, std::uint64_t seed, std::uint64_t k,
                            int round) {
  DeviceMessage out;
  out.g = device_gradient(d, w, plan, seed, k, round);
  RandomStream noise(seed, StreamPurpose::noise, k, static_cast<std::uint64_t>(round));
  if (plan.algorithm == Algorithm::signsgd) {
    // signSGD devices send raw gradient signs and no side information.
    out.received = channel::transmit(prior::sign_quantize(out.g), link, noise);
    return out;
  }
  out.gp = prior::estimate_gaussian_prior(out.g);
  GradientVector centered = prior::center(out.g, out.gp.mu);
  out.lp = {out.gp.mu, 0.0};
  if (plan.algorithm == Algorithm::sbfl_laplacian)
    out.lp.lambda = prior::estimate_laplacian_scale(centered);
  if (q.enabled) {
    // The device centers with its exact mean; only the scalars the server
    // sees pass through the quantizer.
    out.gp.mu = prior::scalar_quantize(out.gp.mu, q.mu_spec);
    out.gp.nu = prior::scalar_quantize(out.gp.nu, q.scale_spec);
    out.lp.mu = out.gp.mu;
    if (plan.algorithm == Algorithm::sbfl_laplacian)
      out.lp.lambda = prior::scalar_quantize(out.lp.lambda, q.scale_spec);
  }
  out.received = channel::transmit(prior::sign_quantize(centered), link, noise);
  return out;
}

std::vector<double> apply_aggregator(const TrainingPlan& plan,
                                     const RoundMessages& msgs,
                                     const std::vector<LinkState>& links,
                                     std::uint64_t seed, int round) {
  switch (plan.algorithm) {
    case Algorithm::signsgd: {
      RandomStream coin(seed, StreamPurpose::vote_coin, 0, static_cast<std::uint64_t>(round));
      SignVector v = aggregate::majority_vote(msgs.received, links, coin);
      std::vector<double> out(v.size());
      for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]);
      return out;
    }
    case Algorithm::sbfl_gaussian:
      return aggregate::mmse_gaussian(msgs.received, msgs.gaussian_priors, links, plan.mode);
    case Algorithm::sbfl_laplacian:
      return aggregate::mmse_laplacian(msgs.received, msgs.laplacian_priors, links, plan.mode);
    case Algorithm::sbfl_blmmse:
      return aggregate::blmmse(msgs.received, msgs.gaussian_priors, links, plan.mode);
    case Algorithm::sbfl_highsnr:
      return aggregate::high_snr_mmse(msgs.received, msgs.gaussian_priors, links);
  }
  throw std::logic_error("unknown algorithm");
}

std::vector<LinkState> round_links(const ChannelPlan& channel, std::uint64_t seed,
                                   int round, const std::vector<double>* fixed_h) {
  std::vector<LinkState> links(channel.sigma2.size());
  for (size_t k = 0; k < links.size(); ++k) {
    double h;
    if (fixed_h) {
      h = (*fixed_h)[k];
    } else {
      RandomStream fs(seed, StreamPurpose::fading, k, static_cast<std::uint64_t>(round));
      h = channel::draw_fading(fs);
    }
    links[k] = {h, channel.sigma2[k]};
  }
  return links;
}

double norm_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

std::vector<double> initial_weights(int M, std::uint64_t seed) {
  RandomStream ws(seed, StreamPurpose::init_weights);
  std::vector<double> w(static_cast<size_t>(M));
  double sd = 1.0 / std::sqrt(static_cast<double>(M));
  for (double& v : w) v = sd * ws.gaussian();
  return w;
}

void fill_trace_devices(RoundTrace& entry, const RoundMessages& msgs,
                        const std::vector<LinkState>& links,
                        Algorithm algorithm) {
  entry.devices.resize(links.size());
  for (size_t k = 0; k < links.size(); ++k) {
    DeviceTraceEntry& e = entry.devices[k];
    e.mu = msgs.gaussian_priors[k].mu;
    e.scale = algorithm == Algorithm::sbfl_laplacian ? msgs.laplacian_priors[k].lambda
                                                     : msgs.gaussian_priors[k].nu;
    e.h = links[k].h;
    e.sigma2 = links[k].sigma2;
  }
}

}  // namespace

GradientVector local_gradient_linreg(const data::DeviceDataset& d,
                                     const std::vector<double>& w) {
  if (static_cast<int>(w.size()) != d.M)
    throw std::invalid_argument("weight vector must match the model dimension");
  GradientVector g(static_cast<size_t>(d.M), 0.0);
  for (int n = 0; n < d.N; ++n) {
    double r = -d.z[static_cast<size_t>(n)];
    for (int m = 0; m < d.M; ++m) r += d.x(m, n) * w[static_cast<size_t>(m)];
    for (int m = 0; m < d.M; ++m) g[static_cast<size_t>(m)] += 2.0 * d.x(m, n) * r;
  }
  return g;
}

double global_loss(const std::vector<data::DeviceDataset>& devices,
                   const std::vector<double>& w) {
  int M = common_dimension(devices);
  if (static_cast<int>(w.size()) != M)
    throw std::invalid_argument("weight vector must match the model dimension");
  double s = 0.0;
  for (const auto& d : devices) {
    for (int n = 0; n < d.N; ++n) {
      double r = -d.z[static_cast<size_t>(n)];
      for (int m = 0; m < d.M; ++m) r += d.x(m, n) * w[static_cast<size_t>(m)];
      s += r * r;
    }
  }
  return s / static_cast<double>(total_samples(devices));
}

double smoothness_constant(const std::vector<data::DeviceDataset>& devices) {
  int M = common_dimension(devices);
  double N = static_cast<double>(total_samples(devices));

  // Matrix-free apply of B = (2/N) sum_k X_k X_k^T.
  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& d : devices) {
      for (int n = 0; n < d.N; ++n) {
        double dot = 0.0;
        for (int m = 0; m < M; ++m) dot += d.x(m, n) * v[static_cast<size_t>(m)];
        for (int m = 0; m < M; ++m) out[static_cast<size_t>(m)] += d.x(m, n) * dot;
      }
    }
    for (double& x : out) x *= 2.0 / N;
  };

  // Deterministic pseudo-random start; a fixed constant seed keeps the
  // result a pure function of the data.
  RandomStream vs(0x5bf1u, StreamPurpose::init_weights);
  std::vector<double> v(static_cast<size_t>(M));
  for (double& x : v) x = vs.gaussian();
  double vn = std::sqrt(norm_sq(v));
  if (vn == 0.0) v[0] = vn = 1.0;
  for (double& x : v) x /= vn;

  std::vector<double> u(static_cast<size_t>(M));
  double lambda = 0.0;
  for (int it = 0; it < 100000; ++it) {
    apply(v, u);
    double next = std::sqrt(norm_sq(u));
    if (next == 0.0) return 0.0;  // all-zero data
    for (size_t i = 0; i < u.size(); ++i) v[i] = u[i] / next;
    if (it > 0 && std::abs(next - lambda) <= 1e-8 * next) return next;
    lambda = next;
  }
  throw numerical_error("power iteration did not converge to relative 1e-8");
}

SumLossMinimum sum_loss_minimum(const std::vector<data::DeviceDataset>& devices) {
  int M = common_dimension(devices);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(M);
  for (const auto& d : devices) {
    for (int n = 0; n < d.N; ++n) {
      Eigen::VectorXd x(M);
      for (int m = 0; m < M; ++m) x(m) = d.x(m, n);
      A.noalias() += x * x.transpose();
      b.noalias() += x * d.z[static_cast<size_t>(n)];
    }
  }
  Eigen::VectorXd w = A.ldlt().solve(b);
  SumLossMinimum out;
  out.w.assign(w.data(), w.data() + M);
  double s = 0.0;
  for (const auto& d : devices) {
    for (int n = 0; n < d.N; ++n) {
      double r = -d.z[static_cast<size_t>(n)];
      for (int m = 0; m < d.M; ++m) r += d.x(m, n) * out.w[static_cast<size_t>(m)];
      s += r * r;
    }
  }
  out.value = s;
  return out;
}

RoundMessages run_round_uplink(const std::vector<double>& w,
                               const TrainingPlan& plan,
                               const std::vector<data::DeviceDataset>& devices,
                               const std::vector<LinkState>& links,
                               std::uint64_t seed, int round) {
  int M = common_dimension(devices);
  if (static_cast<int>(w.size()) != M)
    throw std::invalid_argument("weight vector must match the model dimension");
  if (links.size() != devices.size())
    throw std::invalid_argument("links must match the device count");

  QuantizerPair q = make_quantizers(plan);
  size_t K = devices.size();
  RoundMessages msgs;
  msgs.received.resize(K);
  msgs.gaussian_priors.resize(K);
  msgs.laplacian_priors.resize(K);
  msgs.g_sigma.assign(static_cast<size_t>(M), 0.0);

  for (size_t k = 0; k < K; ++k) {
    DeviceMessage dm = device_uplink(devices[k], w, plan, q, links[k], seed, k, round);
    for (int m = 0; m < M; ++m)
      msgs.g_sigma[static_cast<size_t>(m)] += dm.g[static_cast<size_t>(m)];
    msgs.received[k] = std::move(dm.received);
    msgs.gaussian_priors[k] = dm.gp;
    msgs.laplacian_priors[k] = dm.lp;
  }
  return msgs;
}

TrainingResult run_training(const TrainingPlan& plan,
                            const std::vector<data::DeviceDataset>& devices,
                            const ChannelPlan& channel, std::uint64_t seed) {
  validate_plan(plan);
  int M = common_dimension(devices);
  if (channel.sigma2.size() != devices.size())
    throw std::invalid_argument("channel plan must cover every device");
  for (double s2 : channel.sigma2)
    if (!(s2 >= 0.0)) throw std::invalid_argument("noise variances must be nonnegative");

  TrainingResult result;
  result.w_final = initial_weights(M, seed);
  std::vector<double>& w = result.w_final;
  std::vector<double> momentum(static_cast<size_t>(M), 0.0);

  std::vector<double> fixed_h;
  if (channel.fixed_fading) {
    for (size_t k = 0; k < devices.size(); ++k) {
      RandomStream fs(seed, StreamPurpose::fading, k, 0);
      fixed_h.push_back(channel::draw_fading(fs));
    }
  }

  result.trace.reserve(static_cast<size_t>(plan.rounds));
  for (int t = 0; t < plan.rounds; ++t) {
    auto t0 = std::chrono::steady_clock::now();
    double loss = global_loss(devices, w);
    if (!std::isfinite(loss) || loss > plan.divergence_threshold) {
      // Keep the breaching round visible in the trace, skip its update.
      RoundTrace entry;
      entry.round = t;
      entry.loss = loss;
      result.trace.push_back(std::move(entry));
      result.diverged = true;
      break;
    }

    std::vector<LinkState> links =
        round_links(channel, seed, t, channel.fixed_fading ? &fixed_h : nullptr);
    RoundMessages msgs = run_round_uplink(w, plan, devices, links, seed, t);
    std::vector<double> agg = apply_aggregator(plan, msgs, links, seed, t);

    for (int m = 0; m < M; ++m)
      momentum[static_cast<size_t>(m)] =
          plan.delta * momentum[static_cast<size_t>(m)] + agg[static_cast<size_t>(m)];
    double gamma_t = plan.schedule == Schedule::inverse_sqrt
                         ? plan.gamma / std::sqrt(static_cast<double>(t) + 1.0)
                         : plan.gamma;
    for (int m = 0; m < M; ++m)
      w[static_cast<size_t>(m)] -= gamma_t * momentum[static_cast<size_t>(m)];

    RoundTrace entry;
    entry.round = t;
    entry.loss = loss;
    entry.grad_norm_sq = norm_sq(msgs.g_sigma);
    entry.agg_norm_sq = norm_sq(agg);
    fill_trace_devices(entry, msgs, links, plan.algorithm);
    if (plan.keep_aggregate) entry.aggregate = agg;
    entry.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    result.trace.push_back(std::move(entry));
    result.rounds_run = t + 1;
  }
  if (!result.diverged) {
    double final_loss = global_loss(devices, w);
    if (!std::isfinite(final_loss) || final_loss > plan.divergence_threshold)
      result.diverged = true;
  }
  return result;
}

TrainingResult run_training_downlink_compressed(
    const TrainingPlan& plan, const std::vector<data::DeviceDataset>& devices,
    const ChannelPlan& channel, std::uint64_t seed) {
  validate_plan(plan);
  int M = common_dimension(devices);
  size_t K = devices.size();
  if (channel.sigma2.size() != K)
    throw std::invalid_argument("channel plan must cover every device");
  for (double s2 : channel.sigma2)
    if (!(s2 >= 0.0)) throw std::invalid_argument("noise variances must be nonnegative");

  std::vector<double> w0 = initial_weights(M, seed);
  std::vector<std::vector<double>> w(K, w0);
  std::vector<std::vector<double>> momentum(K, std::vector<double>(static_cast<size_t>(M), 0.0));
  QuantizerPair quant = make_quantizers(plan);

  std::vector<double> fixed_h;
  if (channel.fixed_fading) {
    for (size_t k = 0; k < K; ++k) {
      RandomStream fs(seed, StreamPurpose::fading, k, 0);
      fixed_h.push_back(channel::draw_fading(fs));
    }
  }

  TrainingResult result;
  result.trace.reserve(static_cast<size_t>(plan.rounds));
  // One-round pipeline state: the server aggregates what it heard last round.
  RoundMessages prev;
  std::vector<LinkState> prev_links;
  bool have_prev = false;

  for (int t = 0; t < plan.rounds; ++t) {
    auto t0 = std::chrono::steady_clock::now();
    double loss = global_loss(devices, w[0]);
    if (!std::isfinite(loss) || loss > plan.divergence_threshold) {
      RoundTrace entry;
      entry.round = t;
      entry.loss = loss;
      result.trace.push_back(std::move(entry));
      result.diverged = true;
      break;
    }

    std::vector<LinkState> links =
        round_links(channel, seed, t, channel.fixed_fading ? &fixed_h : nullptr);

    // Devices report from their own model copies (identical by induction).
    RoundMessages msgs;
    msgs.received.resize(K);
    msgs.gaussian_priors.resize(K);
    msgs.laplacian_priors.resize(K);
    msgs.g_sigma.assign(static_cast<size_t>(M), 0.0);
    for (size_t k = 0; k < K; ++k) {
      DeviceMessage dm = device_uplink(devices[k], w[k], plan, quant, links[k], seed, k, t);
      for (int m = 0; m < M; ++m)
        msgs.g_sigma[static_cast<size_t>(m)] += dm.g[static_cast<size_t>(m)];
      msgs.received[k] = std::move(dm.received);
      msgs.gaussian_priors[k] = dm.gp;
      msgs.laplacian_priors[k] = dm.lp;
    }

    std::vector<double> agg(static_cast<size_t>(M), 0.0);
    if (have_prev) agg = apply_aggregator(plan, prev, prev_links, seed, t);
    SignVector bcast(static_cast<size_t>(M));
    for (int m = 0; m < M; ++m)
      bcast[static_cast<size_t>(m)] = agg[static_cast<size_t>(m)] >= 0.0 ? 1 : -1;

    double gamma_t = plan.schedule == Schedule::inverse_sqrt
                         ? plan.gamma / std::sqrt(static_cast<double>(t) + 1.0)
                         : plan.gamma;
    for (size_t k = 0; k < K; ++k) {
      for (int m = 0; m < M; ++m) {
        auto i = static_cast<size_t>(m);
        momentum[k][i] = plan.delta * momentum[k][i] + static_cast<double>(bcast[i]);
        w[k][i] -= gamma_t * momentum[k][i];
      }
    }
    // All devices saw the same broadcast from the same start, so their
    // copies must agree bit for bit.
    for (size_t k = 1; k < K; ++k)
      if (w[k] != w[0])
        throw std::logic_error("device model copies drifted apart");

    RoundTrace entry;
    entry.round = t;
    entry.loss = loss;
    entry.grad_norm_sq = norm_sq(msgs.g_sigma);
    entry.agg_norm_sq = norm_sq(agg);
    fill_trace_devices(entry, msgs, links, plan.algorithm);
    if (plan.keep_aggregate) entry.aggregate = agg;
    entry.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    result.trace.push_back(std::move(entry));
    result.rounds_run = t + 1;

    prev = std::move(msgs);
    prev_links = std::move(links);
    have_prev = true;
  }
  result.w_final = w[0];
  if (!result.diverged) {
    double final_loss = global_loss(devices, result.w_final);
    if (!std::isfinite(final_loss) || final_loss > plan.divergence_threshold)
      result.diverged = true;
  }
  return result;
}

}  // namespace sbfl::learn
