#pragma once

#include <cstdint>
#include <optional>

#include "sbfl/data.hpp"
#include "sbfl/prior.hpp"
#include "sbfl/types.hpp"

namespace sbfl::learn {

enum class Algorithm { signsgd, sbfl_gaussian, sbfl_laplacian, sbfl_blmmse, sbfl_highsnr };
enum class Schedule { constant, inverse_sqrt };

struct PriorQuantization {
  bool enabled = false;
  int bits = 4;
  double nu_ref = 1.0;  // nu/lambda quantizer range [0, 4 nu_ref]
  double mu_ref = 1.0;  // mu quantizer range [-4 mu_ref, 4 mu_ref]
};

struct TrainingPlan {
  Algorithm algorithm = Algorithm::sbfl_gaussian;
  double gamma = 1e-3;
  double delta = 0.0;               // momentum weight in [0,1)
  Schedule schedule = Schedule::constant;
  bool downlink_compression = false;
  int rounds = 500;
  PriorQuantization prior_quantization;
  Mode mode = Mode::corrected;
  double divergence_threshold = 1e12;
  int batch_size = 0;               // 0 = full batch
  bool keep_aggregate = false;      // retain per-round aggregate vectors in the trace
};

// Per-round channel regime: one noise variance per device; fading is
// redrawn each round unless fixed_fading holds it at its round-0 draw.
struct ChannelPlan {
  std::vector<double> sigma2;  // size K
  bool fixed_fading = false;
};

struct DeviceTraceEntry {
  double mu = 0.0;
  double scale = 0.0;  // nu (Gaussian variants) or lambda (Laplacian)
  double h = 0.0;
  double sigma2 = 0.0;
};

struct RoundTrace {
  int round = 0;
  double loss = 0.0;           // normalized global loss F(w^t), before the update
  double grad_norm_sq = 0.0;   // ||g_sigma(w^t)||^2
  double agg_norm_sq = 0.0;
  double wall_ms = 0.0;
  std::vector<DeviceTraceEntry> devices;
  std::vector<double> aggregate;  // filled only when plan.keep_aggregate
};

struct TrainingResult {
  std::vector<RoundTrace> trace;
  std::vector<double> w_final;
  bool diverged = false;
  int rounds_run = 0;
};

// Everything the server receives in one round, plus the true gradient sum
// for tracing.
struct RoundMessages {
  std::vector<std::vector<double>> received;      // K x M
  std::vector<GaussianPriorParams> gaussian_priors;
  std::vector<LaplacianPriorParams> laplacian_priors;
  std::vector<double> g_sigma;
};

// Full-batch gradient 2 X (X^T w - z) of the unnormalized device loss
// ||X^T w - z||^2.
GradientVector local_gradient_linreg(const data::DeviceDataset& d,
                                     const std::vector<double>& w);

// Normalized global loss F(w) = (1/N) sum_k ||X_k^T w - z_k||^2.
double global_loss(const std::vector<data::DeviceDataset>& devices,
                   const std::vector<double>& w);

// Smoothness of the normalized global loss: 2 lambda_max((1/N) sum X X^T),
// by power iteration through the data matrices to relative tolerance 1e-8.
// The gradient sum g_sigma differentiates the unnormalized sum loss, whose
// constant is N times this one.
double smoothness_constant(const std::vector<data::DeviceDataset>& devices);

// Minimum of the unnormalized sum loss sum_k ||X_k^T w - z_k||^2 via the
// normal equations (exact at desk scale), and its minimizer.
struct SumLossMinimum {
  double value = 0.0;
  std::vector<double> w;
};
SumLossMinimum sum_loss_minimum(const std::vector<data::DeviceDataset>& devices);

// One uplink round: per device, gradient -> prior fit -> center ->
// sign-quantize -> transmit; prior scalars pass through the B-bit quantizer
// when enabled. signSGD sends signs of raw (uncentered) gradients and no
// priors.
RoundMessages run_round_uplink(const std::vector<double>& w,
                               const TrainingPlan& plan,
                               const std::vector<data::DeviceDataset>& devices,
                               const std::vector<LinkState>& links,
                               std::uint64_t seed, int round);

// Server-side training loop: aggregate, momentum m <- delta m + aggregate,
// w <- w - gamma_t m, gamma_t constant or gamma/sqrt(t+1). Divergence (loss
// above the threshold or non-finite) stops the run and flags the result,
// keeping the partial trace.
TrainingResult run_training(const TrainingPlan& plan,
                            const std::vector<data::DeviceDataset>& devices,
                            const ChannelPlan& channel, std::uint64_t seed);

// Downlink-compressed variant: the server broadcasts only the sign of the
// aggregate (M bits), each device keeps its own momentum and model copy, and
// round t consumes the previous round's received signals (one-round
// pipeline); the t = 0 broadcast is sign(0) = +1 everywhere.
TrainingResult run_training_downlink_compressed(
    const TrainingPlan& plan, const std::vector<data::DeviceDataset>& devices,
    const ChannelPlan& channel, std::uint64_t seed);

}  // namespace sbfl::learn
