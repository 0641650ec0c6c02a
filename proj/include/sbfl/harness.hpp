#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbfl/channel.hpp"
#include "sbfl/learn.hpp"
#include "sbfl/theory.hpp"

namespace sbfl::harness {

// ---- configuration ---------------------------------------------------------

struct DatasetConfig {
  int devices = 20;
  int samples_per_device = 100;
  int dimension = 300;
  std::optional<double> homogeneous_scale;  // empty: a_k ~ U(0,5) per device
  std::uint64_t seed = 1;                   // data is fixed across run seeds
};

struct NetworkConfig {
  // Exactly one source of noise variances: explicit values or cell geometry.
  std::vector<double> sigma2;  // broadcast to all devices when size 1
  std::optional<channel::NetworkGeometry> geometry;
  std::uint64_t placement_seed = 1;
  bool fixed_fading = false;  // hold every h_k at its round-0 draw
};

struct SweepConfig {
  std::vector<double> gammas;
  std::vector<double> deltas;
  std::vector<learn::Algorithm> algorithms;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  NetworkConfig network;
  learn::TrainingPlan plan;
  bool gamma_is_inverse_L = false;  // config said "1/L"; resolved per dataset
  double loss_threshold = 1.0;
  std::vector<std::uint64_t> seeds;  // default 1..30
  bool write_aggregate = false;
  std::optional<SweepConfig> sweep;
};

// Strict parse: missing required sections and unknown keys raise
// sbfl::schema_error naming the offending key.
ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Noise variances for the config's devices (explicit list or geometry draw).
std::vector<double> resolve_sigma2(const ExperimentConfig& cfg);

// The training plan with "1/L" resolved against the dataset's smoothness
// constant of the sum loss (gamma = 1 / (N * smoothness_constant)).
learn::TrainingPlan resolve_plan(const ExperimentConfig& cfg,
                                 const std::vector<data::DeviceDataset>& devices);

// ---- train -----------------------------------------------------------------

struct SeedOutcome {
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  int rounds_run = 0;
  bool diverged = false;
  std::optional<int> rounds_to_loss;  // first round with loss <= threshold
};

struct TrainReport {
  std::vector<SeedOutcome> seeds;  // in config order
  double mean_final_loss = 0.0;
  double std_final_loss = 0.0;  // sample std over seeds, 0 for one seed
  std::string summary_csv;      // exact bytes written to summary.csv
};

// Runs every seed (up to jobs in parallel; results are invariant to jobs),
// writing trace_seed<seed>.jsonl per seed plus summary.csv when out_dir is
// nonempty.
TrainReport cmd_train(const ExperimentConfig& cfg, const std::string& out_dir,
                      int jobs);

// ---- mse-verify -------------------------------------------------------------

struct MseCell {
  double nu = 0.0, h = 0.0, sigma2 = 0.0;
  int M = 1;
  double mse_quad = 0.0;            // requested mode
  double mse_high_snr_cf = 0.0;     // noise-free closed form
  double blmmse_cf = 0.0;           // requested mode
  double blmmse_cf_other = 0.0;     // the other mode, printed for comparison
  double mc_mmse = 0.0, mc_mmse_se = 0.0;
  double mc_blmmse = 0.0, mc_blmmse_se = 0.0;
  bool quad_vs_mc_pass = false;     // |quad - mc| <= 3 se
  bool blmmse_cf_vs_mc_pass = false;
  bool ordering_pass = false;       // mc_mmse <= mc_blmmse + 1 se
};

struct MseVerifyReport {
  std::vector<MseCell> cells;
  bool all_pass = false;
  std::string csv;
};

// Default grid: (nu, h, sigma2) in {0.5,1,2}^3 plus (1,1,1e-8) and (1,0,1).
std::vector<std::array<double, 3>> default_mse_grid();

MseVerifyReport cmd_mse_verify(const std::vector<std::array<double, 3>>& grid,
                               int M, std::int64_t samples, std::uint64_t seed,
                               Mode mode, const std::string& out_dir);

// ---- bound-check -------------------------------------------------------------

struct BoundSeedSeries {
  std::uint64_t seed = 0;
  bool pass = false;
  double max_ratio = 0.0;  // max over t of running_avg / bound
  std::vector<double> running_avg;  // (1/t) sum of ||g_sigma||^2, per round
  std::vector<double> bound;        // convergence_bound at horizon t
  std::vector<double> sigma2_mse;   // running max of the per-round MSE
};

struct BoundCheckReport {
  bool pass = false;
  double gamma = 0.0;
  double L = 0.0;  // sum-loss smoothness
  double f0 = 0.0;
  double fstar = 0.0;
  std::vector<BoundSeedSeries> seeds;
  std::string csv;  // flattened per-(seed, round) rows
};

// Requires delta = 0, inverse_sqrt schedule, an SBFL aggregator, and
// gamma * L < 2; throws std::invalid_argument otherwise.
BoundCheckReport cmd_bound_check(const ExperimentConfig& cfg,
                                 const std::string& out_dir, int jobs);

// ---- sweep -------------------------------------------------------------------

struct SweepCell {
  learn::Algorithm algorithm = learn::Algorithm::sbfl_gaussian;
  double gamma = 0.0;
  double delta = 0.0;
  // Mean first round reaching the loss threshold, present only when every
  // seed reached it (mirrors the report's absent cells).
  std::optional<double> mean_rounds_to_loss;
  int n_reached = 0;
  int n_diverged = 0;
};

struct SweepReport {
  std::vector<SweepCell> cells;
  std::string csv;
  std::string table;  // human-readable, absent cells rendered as "-"
};

SweepReport cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                      int jobs);

// ---- oracle ------------------------------------------------------------------

struct OracleReport {
  int points = 0;
  double max_abs_dev = 0.0;  // genie vs elementwise, diagonal covariance
  std::string csv;
};

// K = 2, M = 1 scenarios with diagonal prior covariance: the joint rule must
// reproduce the separable estimator.
OracleReport cmd_oracle(int points, std::uint64_t seed, const std::string& out_dir);

// ---- CLI ---------------------------------------------------------------------

// Verbs: train, mse-verify, bound-check, sweep, oracle. On config errors
// prints a one-line JSON error record to stderr and returns nonzero.
int run_cli(int argc, char** argv);

}  // namespace sbfl::harness
