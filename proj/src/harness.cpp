#include "sbfl/harness.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "sbfl/aggregate.hpp"
#include "sbfl/data.hpp"

namespace sbfl::harness {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// %.17g round-trips doubles, keeping summaries byte-stable across runs.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string algorithm_name(learn::Algorithm a) {
  switch (a) {
    case learn::Algorithm::signsgd: return "signsgd";
    case learn::Algorithm::sbfl_gaussian: return "sbfl_gaussian";
    case learn::Algorithm::sbfl_laplacian: return "sbfl_laplacian";
    case learn::Algorithm::sbfl_blmmse: return "sbfl_blmmse";
    case learn::Algorithm::sbfl_highsnr: return "sbfl_highsnr";
  }
  return "unknown";
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  std::vector<std::thread> workers;
  workers.reserve(static_cast<size_t>(jobs));
  for (int t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (err) std::rethrow_exception(err);
}

void write_file(const std::string& dir, const std::string& name, const std::string& bytes) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  std::ofstream os(fs::path(dir) / name, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
  os << bytes;
}

std::string trace_jsonl(const learn::TrainingResult& r) {
  std::ostringstream os;
  for (const auto& e : r.trace) {
    ordered_json j;
    j["round"] = e.round;
    j["loss"] = e.loss;
    j["grad_norm_sq"] = e.grad_norm_sq;
    j["agg_norm_sq"] = e.agg_norm_sq;
    j["wall_ms"] = e.wall_ms;
    ordered_json devs = ordered_json::array();
    for (const auto& d : e.devices) {
      ordered_json dj;
      dj["mu"] = d.mu;
      dj["scale"] = d.scale;
      dj["h"] = d.h;
      dj["sigma2"] = d.sigma2;
      devs.push_back(std::move(dj));
    }
    j["devices"] = std::move(devs);
    if (!e.aggregate.empty()) j["aggregate"] = e.aggregate;
    os << j.dump() << "\n";
  }
  return os.str();
}

struct RunOutcome {
  learn::TrainingResult result;
  SeedOutcome outcome;
};

RunOutcome run_one_seed(const learn::TrainingPlan& plan,
                        const std::vector<data::DeviceDataset>& devices,
                        const learn::ChannelPlan& chan, std::uint64_t seed,
                        double loss_threshold) {
  RunOutcome out;
  out.result = plan.downlink_compression
                   ? learn::run_training_downlink_compressed(plan, devices, chan, seed)
                   : learn::run_training(plan, devices, chan, seed);
  out.outcome.seed = seed;
  out.outcome.diverged = out.result.diverged;
  out.outcome.rounds_run = out.result.rounds_run;
  out.outcome.final_loss = learn::global_loss(devices, out.result.w_final);
  for (const auto& e : out.result.trace) {
    if (e.loss <= loss_threshold) {
      out.outcome.rounds_to_loss = e.round;
      break;
    }
  }
  return out;
}

}  // namespace

std::vector<std::array<double, 3>> default_mse_grid() {
  std::vector<std::array<double, 3>> grid;
  for (double nu : {0.5, 1.0, 2.0})
    for (double h : {0.5, 1.0, 2.0})
      for (double s2 : {0.5, 1.0, 2.0}) grid.push_back({nu, h, s2});
  grid.push_back({1.0, 1.0, 1e-8});
  grid.push_back({1.0, 0.0, 1.0});
  return grid;
}

TrainReport cmd_train(const ExperimentConfig& cfg, const std::string& out_dir, int jobs) {
  auto devices = data::gen_synthetic(cfg.dataset.devices, cfg.dataset.samples_per_device,
                                     cfg.dataset.dimension, cfg.dataset.homogeneous_scale,
                                     cfg.dataset.seed);
  learn::TrainingPlan plan = resolve_plan(cfg, devices);
  learn::ChannelPlan chan{resolve_sigma2(cfg), cfg.network.fixed_fading};

  int n = static_cast<int>(cfg.seeds.size());
  std::vector<RunOutcome> runs(static_cast<size_t>(n));
  parallel_for(n, jobs, [&](int i) {
    runs[static_cast<size_t>(i)] =
        run_one_seed(plan, devices, chan, cfg.seeds[static_cast<size_t>(i)], cfg.loss_threshold);
  });

  TrainReport rep;
  double sum = 0.0, sumsq = 0.0;
  int finite_n = 0;
  for (const auto& r : runs) {
    rep.seeds.push_back(r.outcome);
    if (!r.outcome.diverged) {
      sum += r.outcome.final_loss;
      sumsq += r.outcome.final_loss * r.outcome.final_loss;
      ++finite_n;
    }
  }
  // Mean and sample std over non-diverged seeds; diverged ones stay visible
  // in their own rows.
  if (finite_n > 0) rep.mean_final_loss = sum / finite_n;
  if (finite_n > 1) {
    double var = (sumsq - sum * sum / finite_n) / (finite_n - 1);
    rep.std_final_loss = std::sqrt(std::max(var, 0.0));
  }

  std::ostringstream csv;
  csv << "record,seed,final_loss,rounds_run,diverged,rounds_to_loss\n";
  for (const auto& o : rep.seeds) {
    csv << "seed," << o.seed << "," << num(o.final_loss) << "," << o.rounds_run << ","
        << (o.diverged ? 1 : 0) << ",";
    if (o.rounds_to_loss) csv << *o.rounds_to_loss;  // absent cells stay empty
    csv << "\n";
  }
  csv << "mean,," << num(rep.mean_final_loss) << ",,,\n";
  csv << "std,," << num(rep.std_final_loss) << ",,,\n";
  rep.summary_csv = csv.str();

  if (!out_dir.empty()) {
    for (size_t i = 0; i < runs.size(); ++i)
      write_file(out_dir, "trace_seed" + std::to_string(cfg.seeds[i]) + ".jsonl",
                 trace_jsonl(runs[i].result));
    write_file(out_dir, "summary.csv", rep.summary_csv);
  }
  return rep;
}

MseVerifyReport cmd_mse_verify(const std::vector<std::array<double, 3>>& grid, int M,
                               std::int64_t samples, std::uint64_t seed, Mode mode,
                               const std::string& out_dir) {
  MseVerifyReport rep;
  rep.all_pass = true;
  Mode other = mode == Mode::corrected ? Mode::paper_literal : Mode::corrected;
  for (const auto& cell : grid) {
    MseCell c;
    c.nu = cell[0];
    c.h = cell[1];
    c.sigma2 = cell[2];
    c.M = M;
    std::vector<GaussianPriorParams> priors{{0.0, c.nu}};
    std::vector<LinkState> links{{c.h, c.sigma2}};
    c.mse_quad = theory::mse_quadrature(priors, links, M, mode).value;
    c.mse_high_snr_cf = theory::mse_high_snr_closed_form(priors, M).value;
    c.blmmse_cf = theory::blmmse_mse_closed_form(priors, links, M, mode).value;
    c.blmmse_cf_other = theory::blmmse_mse_closed_form(priors, links, M, other).value;
    auto mmse_fn = [&](const std::vector<std::vector<double>>& recv) {
      return aggregate::mmse_gaussian(recv, priors, links, mode);
    };
    auto blmmse_fn = [&](const std::vector<std::vector<double>>& recv) {
      return aggregate::blmmse(recv, priors, links, mode);
    };
    auto mc_m = theory::mse_monte_carlo(mmse_fn, priors, links, M, samples, seed);
    auto mc_b = theory::mse_monte_carlo(blmmse_fn, priors, links, M, samples, seed);
    c.mc_mmse = mc_m.value;
    c.mc_mmse_se = mc_m.std_error;
    c.mc_blmmse = mc_b.value;
    c.mc_blmmse_se = mc_b.std_error;
    c.quad_vs_mc_pass = std::abs(c.mse_quad - c.mc_mmse) <= 3.0 * c.mc_mmse_se;
    c.blmmse_cf_vs_mc_pass = std::abs(c.blmmse_cf - c.mc_blmmse) <= 3.0 * c.mc_blmmse_se;
    c.ordering_pass = c.mc_mmse <= c.mc_blmmse + (c.mc_mmse_se + c.mc_blmmse_se);
    rep.all_pass = rep.all_pass && c.quad_vs_mc_pass && c.blmmse_cf_vs_mc_pass &&
                   c.ordering_pass;
    rep.cells.push_back(c);
  }

  std::ostringstream csv;
  csv << "nu,h,sigma2,M,mse_quad,mse_high_snr_cf,blmmse_cf,blmmse_cf_other_mode,"
         "mc_mmse,mc_mmse_stderr,mc_blmmse,mc_blmmse_stderr,"
         "quad_vs_mc_pass,blmmse_cf_vs_mc_pass,ordering_pass\n";
  for (const auto& c : rep.cells) {
    csv << num(c.nu) << "," << num(c.h) << "," << num(c.sigma2) << "," << c.M << ","
        << num(c.mse_quad) << "," << num(c.mse_high_snr_cf) << "," << num(c.blmmse_cf)
        << "," << num(c.blmmse_cf_other) << "," << num(c.mc_mmse) << ","
        << num(c.mc_mmse_se) << "," << num(c.mc_blmmse) << "," << num(c.mc_blmmse_se)
        << "," << (c.quad_vs_mc_pass ? 1 : 0) << "," << (c.blmmse_cf_vs_mc_pass ? 1 : 0)
        << "," << (c.ordering_pass ? 1 : 0) << "\n";
  }
  rep.csv = csv.str();
  write_file(out_dir, "mse_verify.csv", rep.csv);
  return rep;
}

BoundCheckReport cmd_bound_check(const ExperimentConfig& cfg, const std::string& out_dir,
                                 int jobs) {
  auto devices = data::gen_synthetic(cfg.dataset.devices, cfg.dataset.samples_per_device,
                                     cfg.dataset.dimension, cfg.dataset.homogeneous_scale,
                                     cfg.dataset.seed);
  learn::TrainingPlan plan = resolve_plan(cfg, devices);
  if (plan.algorithm != learn::Algorithm::sbfl_gaussian)
    throw std::invalid_argument("bound-check needs the sbfl_gaussian aggregator");
  if (plan.delta != 0.0) throw std::invalid_argument("bound-check needs delta = 0");
  if (plan.schedule != learn::Schedule::inverse_sqrt)
    throw std::invalid_argument("bound-check needs the inverse_sqrt schedule");
  if (plan.downlink_compression)
    throw std::invalid_argument("bound-check needs the uplink-only loop");

  double n_total = 0.0;
  for (const auto& d : devices) n_total += static_cast<double>(d.N);
  BoundCheckReport rep;
  rep.gamma = plan.gamma;
  rep.L = n_total * learn::smoothness_constant(devices);
  if (!(rep.gamma * rep.L < 2.0))
    throw std::invalid_argument("bound-check needs gamma * L < 2");
  rep.fstar = learn::sum_loss_minimum(devices).value;

  learn::ChannelPlan chan{resolve_sigma2(cfg), cfg.network.fixed_fading};
  int M = cfg.dataset.dimension;
  int n = static_cast<int>(cfg.seeds.size());
  std::vector<BoundSeedSeries> series(static_cast<size_t>(n));
  std::vector<double> f0s(static_cast<size_t>(n), 0.0);
  std::mutex cache_mu;
  std::map<std::pair<double, double>, double> factor_cache;
  auto factor_of = [&](double h, double s2) {
    std::lock_guard<std::mutex> lk(cache_mu);
    auto key = std::make_pair(h, s2);
    auto it = factor_cache.find(key);
    if (it != factor_cache.end()) return it->second;
    double f = theory::mse_integral_factor({h, s2}, plan.mode);
    factor_cache.emplace(key, f);
    return f;
  };

  parallel_for(n, jobs, [&](int i) {
    std::uint64_t seed = cfg.seeds[static_cast<size_t>(i)];
    learn::TrainingResult r = learn::run_training(plan, devices, chan, seed);
    BoundSeedSeries s;
    s.seed = seed;
    s.pass = !r.diverged;
    double f0 = n_total * (r.trace.empty() ? 0.0 : r.trace[0].loss);
    f0s[static_cast<size_t>(i)] = f0;
    double grad_sum = 0.0;
    double sigma_mse = 0.0;
    for (const auto& e : r.trace) {
      if (e.devices.empty()) break;  // divergence sentinel entry
      grad_sum += e.grad_norm_sq;
      double round_mse = 0.0;
      for (const auto& d : e.devices)
        round_mse += d.scale * d.scale * (1.0 - factor_of(d.h, d.sigma2));
      round_mse *= static_cast<double>(M);
      sigma_mse = std::max(sigma_mse, round_mse);
      int t = e.round + 1;
      double avg = grad_sum / t;
      double bound = theory::convergence_bound(
          {t, plan.gamma, rep.L, sigma_mse, f0, rep.fstar});
      s.running_avg.push_back(avg);
      s.bound.push_back(bound);
      s.sigma2_mse.push_back(sigma_mse);
      if (bound > 0.0) s.max_ratio = std::max(s.max_ratio, avg / bound);
      if (avg > bound) s.pass = false;
    }
    series[static_cast<size_t>(i)] = std::move(s);
  });

  rep.pass = true;
  rep.f0 = f0s.empty() ? 0.0 : f0s[0];
  std::ostringstream csv;
  csv << "seed,round,running_avg_grad_norm_sq,bound,sigma2_mse,pass\n";
  for (const auto& s : series) {
    rep.pass = rep.pass && s.pass;
    for (size_t t = 0; t < s.running_avg.size(); ++t) {
      bool ok = s.running_avg[t] <= s.bound[t];
      csv << s.seed << "," << t << "," << num(s.running_avg[t]) << "," << num(s.bound[t])
          << "," << num(s.sigma2_mse[t]) << "," << (ok ? 1 : 0) << "\n";
    }
    rep.seeds.push_back(std::move(s));
  }
  rep.csv = csv.str();
  write_file(out_dir, "bound_check.csv", rep.csv);
  return rep;
}

SweepReport cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int jobs) {
  if (!cfg.sweep) throw std::invalid_argument("sweep needs a \"sweep\" config section");
  auto devices = data::gen_synthetic(cfg.dataset.devices, cfg.dataset.samples_per_device,
                                     cfg.dataset.dimension, cfg.dataset.homogeneous_scale,
                                     cfg.dataset.seed);
  learn::TrainingPlan base = resolve_plan(cfg, devices);
  learn::ChannelPlan chan{resolve_sigma2(cfg), cfg.network.fixed_fading};

  struct Job {
    size_t cell;
    std::uint64_t seed;
  };
  std::vector<learn::TrainingPlan> plans;
  std::vector<SweepCell> cells;
  for (learn::Algorithm a : cfg.sweep->algorithms)
    for (double g : cfg.sweep->gammas)
      for (double d : cfg.sweep->deltas) {
        learn::TrainingPlan p = base;
        p.algorithm = a;
        p.gamma = g;
        p.delta = d;
        plans.push_back(p);
        SweepCell c;
        c.algorithm = a;
        c.gamma = g;
        c.delta = d;
        cells.push_back(c);
      }
  std::vector<Job> jobs_list;
  for (size_t c = 0; c < cells.size(); ++c)
    for (std::uint64_t s : cfg.seeds) jobs_list.push_back({c, s});

  std::vector<SeedOutcome> outcomes(jobs_list.size());
  parallel_for(static_cast<int>(jobs_list.size()), jobs, [&](int i) {
    const Job& jb = jobs_list[static_cast<size_t>(i)];
    outcomes[static_cast<size_t>(i)] =
        run_one_seed(plans[jb.cell], devices, chan, jb.seed, cfg.loss_threshold).outcome;
  });

  for (size_t i = 0; i < jobs_list.size(); ++i) {
    SweepCell& c = cells[jobs_list[i].cell];
    const SeedOutcome& o = outcomes[i];
    if (o.diverged) ++c.n_diverged;
    if (o.rounds_to_loss) {
      ++c.n_reached;
      double r = static_cast<double>(*o.rounds_to_loss);
      c.mean_rounds_to_loss = c.mean_rounds_to_loss.value_or(0.0) + r;
    }
  }
  int n_seeds = static_cast<int>(cfg.seeds.size());
  for (SweepCell& c : cells) {
    // A cell reports a mean only when every seed reached the threshold,
    // mirroring the absent cells of the reference protocol.
    if (c.n_reached == n_seeds)
      c.mean_rounds_to_loss = *c.mean_rounds_to_loss / n_seeds;
    else
      c.mean_rounds_to_loss.reset();
  }

  SweepReport rep;
  rep.cells = cells;
  std::ostringstream csv;
  csv << "algorithm,gamma,delta,mean_rounds_to_loss,n_reached,n_diverged\n";
  std::ostringstream tab;
  tab << "algorithm        gamma       delta   rounds_to_loss\n";
  for (const auto& c : cells) {
    csv << algorithm_name(c.algorithm) << "," << num(c.gamma) << "," << num(c.delta) << ",";
    if (c.mean_rounds_to_loss) csv << num(*c.mean_rounds_to_loss);
    csv << "," << c.n_reached << "," << c.n_diverged << "\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %-11g %-7g %s\n",
                  algorithm_name(c.algorithm).c_str(), c.gamma, c.delta,
                  c.mean_rounds_to_loss ? num(*c.mean_rounds_to_loss).c_str() : "-");
    tab << line;
  }
  rep.csv = csv.str();
  rep.table = tab.str();
  write_file(out_dir, "sweep.csv", rep.csv);
  return rep;
}

OracleReport cmd_oracle(int points, std::uint64_t seed, const std::string& out_dir) {
  if (points < 1) throw std::invalid_argument("need at least one point");
  OracleReport rep;
  rep.points = points;
  std::ostringstream csv;
  csv << "point,nu1,nu2,h1,h2,sigma2_1,sigma2_2,y1,y2,genie1,elementwise1,genie2,"
         "elementwise2,max_abs_dev\n";
  RandomStream rng(seed, StreamPurpose::monte_carlo);
  for (int p = 0; p < points; ++p) {
    std::array<double, 2> nu{rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)};
    std::vector<LinkState> links(2);
    std::vector<double> ys(2);
    for (int k = 0; k < 2; ++k) {
      links[static_cast<size_t>(k)] = {rng.gaussian(), rng.uniform(0.5, 2.0)};
      double g = nu[static_cast<size_t>(k)] * rng.gaussian();
      ys[static_cast<size_t>(k)] =
          links[static_cast<size_t>(k)].h * sign_pm1(g) +
          std::sqrt(links[static_cast<size_t>(k)].sigma2) * rng.gaussian();
    }
    std::vector<std::vector<double>> cov{{nu[0] * nu[0], 0.0}, {0.0, nu[1] * nu[1]}};
    auto genie = theory::genie_bfl_conditional_mean({0.0, 0.0}, cov, ys, links);
    double dev = 0.0;
    std::array<double, 2> elem{};
    for (int k = 0; k < 2; ++k) {
      elem[static_cast<size_t>(k)] = aggregate::conditional_mean_elementwise(
          ys[static_cast<size_t>(k)], GaussianPriorParams{0.0, nu[static_cast<size_t>(k)]},
          links[static_cast<size_t>(k)]);
      dev = std::max(dev,
                     std::abs(genie[static_cast<size_t>(k)] - elem[static_cast<size_t>(k)]));
    }
    rep.max_abs_dev = std::max(rep.max_abs_dev, dev);
    csv << p << "," << num(nu[0]) << "," << num(nu[1]) << "," << num(links[0].h) << ","
        << num(links[1].h) << "," << num(links[0].sigma2) << "," << num(links[1].sigma2)
        << "," << num(ys[0]) << "," << num(ys[1]) << "," << num(genie[0]) << ","
        << num(elem[0]) << "," << num(genie[1]) << "," << num(elem[1]) << "," << num(dev)
        << "\n";
  }
  rep.csv = csv.str();
  write_file(out_dir, "oracle.csv", rep.csv);
  return rep;
}

namespace {

Mode mode_from_flag(const std::string& s) {
  if (s == "corrected") return Mode::corrected;
  if (s == "paper-literal" || s == "paper_literal") return Mode::paper_literal;
  throw schema_error("--mode", "unknown mode \"" + s + "\" (corrected, paper-literal)");
}

ExperimentConfig load_with_overrides(const std::string& config_path, int seeds_override,
                                     const std::string& mode_flag) {
  ExperimentConfig cfg = load_config(config_path);
  if (seeds_override > 0) {
    cfg.seeds.clear();
    for (int i = 1; i <= seeds_override; ++i)
      cfg.seeds.push_back(static_cast<std::uint64_t>(i));
  }
  if (!mode_flag.empty()) cfg.plan.mode = mode_from_flag(mode_flag);
  return cfg;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"one-bit federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", mode_flag;
  int seeds_override = 0, jobs = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seeds", seeds_override, "override: use seeds 1..N");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "max concurrent seeds (0 = all cores)");
    sub->add_option("--mode", mode_flag, "formula variant: corrected|paper-literal");
  };

  CLI::App* train = app.add_subcommand("train", "multi-seed training run");
  add_common(train, true);

  CLI::App* mse = app.add_subcommand("mse-verify", "aggregation MSE: theory vs Monte Carlo");
  mse->set_help_flag("--help", "print help");  // frees -h for the channel gain below
  std::int64_t samples = 10'000'000;
  int mse_m = 1;
  std::uint64_t mse_seed = 1;
  std::vector<double> grid_nu, grid_h, grid_s2;
  mse->add_option("--samples", samples, "Monte Carlo samples per cell");
  mse->add_option("--dimension", mse_m, "coordinates per scenario");
  mse->add_option("--seed", mse_seed, "Monte Carlo seed");
  mse->add_option("--nu", grid_nu, "grid nu values (all three of --nu/--h/--sigma2 or none)");
  mse->add_option("--h", grid_h, "grid h values");
  mse->add_option("--sigma2", grid_s2, "grid sigma2 values");
  mse->add_option("--out", out_dir, "output directory");
  mse->add_option("--mode", mode_flag, "formula variant: corrected|paper-literal");

  CLI::App* bound = app.add_subcommand("bound-check", "empirical gradient average vs bound");
  add_common(bound, true);

  CLI::App* sweep = app.add_subcommand("sweep", "hyperparameter grid report");
  add_common(sweep, true);

  CLI::App* oracle = app.add_subcommand("oracle", "joint vs elementwise conditional mean");
  int oracle_points = 20;
  std::uint64_t oracle_seed = 1;
  oracle->add_option("--points", oracle_points, "number of random scenarios");
  oracle->add_option("--seed", oracle_seed, "scenario seed");
  oracle->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train->parsed()) {
      ExperimentConfig cfg = load_with_overrides(config_path, seeds_override, mode_flag);
      TrainReport rep = cmd_train(cfg, out_dir, jobs);
      std::cout << rep.summary_csv;
      int diverged = 0;
      for (const auto& o : rep.seeds) diverged += o.diverged ? 1 : 0;
      std::cout << "# " << rep.seeds.size() << " seeds, mean final loss "
                << num(rep.mean_final_loss) << " +- " << num(rep.std_final_loss) << ", "
                << diverged << " diverged; traces in " << out_dir << "\n";
      return 0;
    }
    if (mse->parsed()) {
      std::vector<std::array<double, 3>> grid;
      if (grid_nu.empty() && grid_h.empty() && grid_s2.empty()) {
        grid = default_mse_grid();
      } else if (!grid_nu.empty() && !grid_h.empty() && !grid_s2.empty()) {
        for (double nu : grid_nu)
          for (double h : grid_h)
            for (double s2 : grid_s2) grid.push_back({nu, h, s2});
      } else {
        throw schema_error("--nu", "provide all of --nu/--h/--sigma2 or none");
      }
      Mode mode = mode_flag.empty() ? Mode::corrected : mode_from_flag(mode_flag);
      MseVerifyReport rep = cmd_mse_verify(grid, mse_m, samples, mse_seed, mode, out_dir);
      std::cout << rep.csv;
      std::cout << (rep.all_pass ? "# all cells pass\n" : "# some cells FAIL\n");
      return rep.all_pass ? 0 : 1;
    }
    if (bound->parsed()) {
      ExperimentConfig cfg = load_with_overrides(config_path, seeds_override, mode_flag);
      BoundCheckReport rep = cmd_bound_check(cfg, out_dir, jobs);
      double max_ratio = 0.0;
      for (const auto& s : rep.seeds) max_ratio = std::max(max_ratio, s.max_ratio);
      std::cout << "# gamma " << num(rep.gamma) << ", L " << num(rep.L) << ", fstar "
                << num(rep.fstar) << ", max empirical/bound ratio " << num(max_ratio)
                << "\n";
      std::cout << (rep.pass ? "# bound holds on every seed\n"
                             : "# bound VIOLATED on some seed\n");
      return rep.pass ? 0 : 1;
    }
    if (sweep->parsed()) {
      ExperimentConfig cfg = load_with_overrides(config_path, seeds_override, mode_flag);
      SweepReport rep = cmd_sweep(cfg, out_dir, jobs);
      std::cout << rep.table;
      return 0;
    }
    if (oracle->parsed()) {
      OracleReport rep = cmd_oracle(oracle_points, oracle_seed, out_dir);
      std::cout << "# max abs deviation over " << rep.points << " points: "
                << num(rep.max_abs_dev) << "\n";
      return 0;
    }
  } catch (const schema_error& e) {
    ordered_json err;
    err["error"]["kind"] = "config";
    err["error"]["key"] = e.key;
    err["error"]["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    ordered_json err;
    err["error"]["kind"] = "runtime";
    err["error"]["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sbfl::harness
