#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "sbfl/harness.hpp"

namespace sbfl::harness {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw schema_error(key, "config error at \"" + key + "\": " + what);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const json& obj, const std::string& prefix,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) fail(join(prefix, key), "unknown key");
}

const json& require(const json& obj, const std::string& prefix, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(join(prefix, key), "missing required key");
  return *it;
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) fail(key, "expected a number");
  return v.get<double>();
}

double get_positive(const json& v, const std::string& key) {
  double x = get_number(v, key);
  if (!(x > 0.0)) fail(key, "expected a positive number");
  return x;
}

int get_positive_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) fail(key, "expected an integer");
  auto x = v.get<std::int64_t>();
  if (x < 1 || x > 1'000'000'000) fail(key, "expected a positive integer");
  return static_cast<int>(x);
}

bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) fail(key, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) fail(key, "expected a string");
  return v.get<std::string>();
}

learn::Algorithm parse_algorithm(const json& v, const std::string& key) {
  std::string s = get_string(v, key);
  if (s == "signsgd") return learn::Algorithm::signsgd;
  if (s == "sbfl_gaussian") return learn::Algorithm::sbfl_gaussian;
  if (s == "sbfl_laplacian") return learn::Algorithm::sbfl_laplacian;
  if (s == "sbfl_blmmse") return learn::Algorithm::sbfl_blmmse;
  if (s == "sbfl_highsnr") return learn::Algorithm::sbfl_highsnr;
  fail(key, "unknown algorithm \"" + s +
                "\" (signsgd, sbfl_gaussian, sbfl_laplacian, sbfl_blmmse, sbfl_highsnr)");
}

Mode parse_mode(const json& v, const std::string& key) {
  std::string s = get_string(v, key);
  if (s == "corrected") return Mode::corrected;
  if (s == "paper_literal") return Mode::paper_literal;
  fail(key, "unknown mode \"" + s + "\" (corrected, paper_literal)");
}

DatasetConfig parse_dataset(const json& obj) {
  const std::string p = "dataset";
  if (!obj.is_object()) fail(p, "expected an object");
  reject_unknown(obj, p,
                 {"devices", "samples_per_device", "dimension", "feature_scale", "seed"});
  DatasetConfig d;
  d.devices = get_positive_int(require(obj, p, "devices"), join(p, "devices"));
  d.samples_per_device = get_positive_int(require(obj, p, "samples_per_device"),
                                          join(p, "samples_per_device"));
  d.dimension = get_positive_int(require(obj, p, "dimension"), join(p, "dimension"));
  if (auto it = obj.find("feature_scale"); it != obj.end()) {
    if (it->is_string()) {
      if (it->get<std::string>() != "heterogeneous")
        fail(join(p, "feature_scale"), "expected \"heterogeneous\" or a positive number");
    } else {
      d.homogeneous_scale = get_positive(*it, join(p, "feature_scale"));
    }
  }
  if (auto it = obj.find("seed"); it != obj.end())
    d.seed = static_cast<std::uint64_t>(get_positive_int(*it, join(p, "seed")));
  return d;
}

channel::NetworkGeometry parse_geometry(const json& obj, const std::string& p) {
  if (!obj.is_object()) fail(p, "expected an object");
  reject_unknown(obj, p,
                 {"cell_radius_m", "bs_height_m", "device_height_m", "carrier_freq_mhz",
                  "tx_power_dbm", "noise_floor_dbm"});
  channel::NetworkGeometry g;
  if (auto it = obj.find("cell_radius_m"); it != obj.end())
    g.cell_radius_m = get_positive(*it, join(p, "cell_radius_m"));
  if (auto it = obj.find("bs_height_m"); it != obj.end())
    g.bs_height_m = get_positive(*it, join(p, "bs_height_m"));
  if (auto it = obj.find("device_height_m"); it != obj.end())
    g.device_height_m = get_positive(*it, join(p, "device_height_m"));
  if (auto it = obj.find("carrier_freq_mhz"); it != obj.end())
    g.carrier_freq_mhz = get_positive(*it, join(p, "carrier_freq_mhz"));
  if (auto it = obj.find("tx_power_dbm"); it != obj.end())
    g.tx_power_dbm = get_number(*it, join(p, "tx_power_dbm"));
  if (auto it = obj.find("noise_floor_dbm"); it != obj.end())
    g.noise_floor_dbm = get_number(*it, join(p, "noise_floor_dbm"));
  return g;
}

// sigma2 = 0 is a supported noise-free request; it is floored to 1e-30 so
// LinkState's positive-variance invariant holds while transmit stays exact
// to within 1e-10 of the noiseless channel.
double parse_sigma2_value(const json& v, const std::string& key) {
  double x = get_number(v, key);
  if (x < 0.0) fail(key, "expected a nonnegative number");
  return std::max(x, 1e-30);
}

NetworkConfig parse_network(const json& obj) {
  const std::string p = "network";
  if (!obj.is_object()) fail(p, "expected an object");
  reject_unknown(obj, p, {"sigma2", "geometry", "placement_seed", "fading"});
  NetworkConfig n;
  bool have_sigma2 = obj.contains("sigma2");
  bool have_geometry = obj.contains("geometry");
  if (have_sigma2 == have_geometry)
    fail(p, "expected exactly one of \"sigma2\" and \"geometry\"");
  if (have_sigma2) {
    const json& v = obj["sigma2"];
    if (v.is_array()) {
      if (v.empty()) fail(join(p, "sigma2"), "expected at least one value");
      for (const auto& x : v)
        n.sigma2.push_back(parse_sigma2_value(x, join(p, "sigma2")));
    } else {
      n.sigma2.push_back(parse_sigma2_value(v, join(p, "sigma2")));
    }
  } else {
    n.geometry = parse_geometry(obj["geometry"], join(p, "geometry"));
    if (auto it = obj.find("placement_seed"); it != obj.end())
      n.placement_seed =
          static_cast<std::uint64_t>(get_positive_int(*it, join(p, "placement_seed")));
  }
  if (auto it = obj.find("fading"); it != obj.end()) {
    std::string s = get_string(*it, join(p, "fading"));
    if (s == "fixed")
      n.fixed_fading = true;
    else if (s != "per_round")
      fail(join(p, "fading"), "expected \"per_round\" or \"fixed\"");
  }
  return n;
}

void parse_training(const json& obj, ExperimentConfig& cfg) {
  const std::string p = "training";
  if (!obj.is_object()) fail(p, "expected an object");
  reject_unknown(obj, p,
                 {"algorithm", "gamma", "delta", "schedule", "rounds",
                  "downlink_compression", "prior_quantization", "mode",
                  "divergence_threshold", "batch_size"});
  learn::TrainingPlan& t = cfg.plan;
  t.algorithm = parse_algorithm(require(obj, p, "algorithm"), join(p, "algorithm"));
  const json& g = require(obj, p, "gamma");
  if (g.is_string()) {
    if (g.get<std::string>() != "1/L")
      fail(join(p, "gamma"), "expected a positive number or \"1/L\"");
    cfg.gamma_is_inverse_L = true;
  } else {
    t.gamma = get_positive(g, join(p, "gamma"));
  }
  if (auto it = obj.find("delta"); it != obj.end()) {
    t.delta = get_number(*it, join(p, "delta"));
    if (t.delta < 0.0 || t.delta >= 1.0) fail(join(p, "delta"), "expected a value in [0, 1)");
  }
  if (auto it = obj.find("schedule"); it != obj.end()) {
    std::string s = get_string(*it, join(p, "schedule"));
    if (s == "inverse_sqrt")
      t.schedule = learn::Schedule::inverse_sqrt;
    else if (s != "constant")
      fail(join(p, "schedule"), "expected \"constant\" or \"inverse_sqrt\"");
  }
  t.rounds = get_positive_int(require(obj, p, "rounds"), join(p, "rounds"));
  if (auto it = obj.find("downlink_compression"); it != obj.end())
    t.downlink_compression = get_bool(*it, join(p, "downlink_compression"));
  if (auto it = obj.find("mode"); it != obj.end())
    t.mode = parse_mode(*it, join(p, "mode"));
  if (auto it = obj.find("divergence_threshold"); it != obj.end())
    t.divergence_threshold = get_positive(*it, join(p, "divergence_threshold"));
  if (auto it = obj.find("batch_size"); it != obj.end()) {
    if (!it->is_number_integer()) fail(join(p, "batch_size"), "expected an integer");
    auto b = it->get<std::int64_t>();
    if (b < 0) fail(join(p, "batch_size"), "expected a nonnegative integer");
    t.batch_size = static_cast<int>(b);
  }
  if (auto it = obj.find("prior_quantization"); it != obj.end()) {
    const std::string q = join(p, "prior_quantization");
    if (!it->is_object()) fail(q, "expected an object");
    reject_unknown(*it, q, {"bits", "nu_ref", "mu_ref"});
    t.prior_quantization.enabled = true;
    if (auto b = it->find("bits"); b != it->end())
      t.prior_quantization.bits = get_positive_int(*b, join(q, "bits"));
    t.prior_quantization.nu_ref = get_positive(require(*it, q, "nu_ref"), join(q, "nu_ref"));
    if (auto m = it->find("mu_ref"); m != it->end())
      t.prior_quantization.mu_ref = get_positive(*m, join(q, "mu_ref"));
    else
      t.prior_quantization.mu_ref = t.prior_quantization.nu_ref;
  }
}

std::vector<std::uint64_t> parse_seeds(const json& v) {
  std::vector<std::uint64_t> seeds;
  if (v.is_array()) {
    for (const auto& x : v)
      seeds.push_back(static_cast<std::uint64_t>(get_positive_int(x, "seeds")));
    if (seeds.empty()) fail("seeds", "expected at least one seed");
  } else {
    int n = get_positive_int(v, "seeds");
    for (int i = 1; i <= n; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  }
  return seeds;
}

SweepConfig parse_sweep(const json& obj) {
  const std::string p = "sweep";
  if (!obj.is_object()) fail(p, "expected an object");
  reject_unknown(obj, p, {"gammas", "deltas", "algorithms"});
  SweepConfig s;
  const json& gs = require(obj, p, "gammas");
  if (!gs.is_array() || gs.empty()) fail(join(p, "gammas"), "expected a nonempty array");
  for (const auto& g : gs) s.gammas.push_back(get_positive(g, join(p, "gammas")));
  const json& ds = require(obj, p, "deltas");
  if (!ds.is_array() || ds.empty()) fail(join(p, "deltas"), "expected a nonempty array");
  for (const auto& d : ds) {
    double x = get_number(d, join(p, "deltas"));
    if (x < 0.0 || x >= 1.0) fail(join(p, "deltas"), "expected values in [0, 1)");
    s.deltas.push_back(x);
  }
  const json& as = require(obj, p, "algorithms");
  if (!as.is_array() || as.empty()) fail(join(p, "algorithms"), "expected a nonempty array");
  for (const auto& a : as) s.algorithms.push_back(parse_algorithm(a, join(p, "algorithms")));
  return s;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail("", std::string("not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("", "top level must be an object");
  reject_unknown(root, "",
                 {"dataset", "network", "training", "seeds", "loss_threshold", "output",
                  "sweep"});

  ExperimentConfig cfg;
  cfg.dataset = parse_dataset(require(root, "", "dataset"));
  cfg.network = parse_network(require(root, "", "network"));
  parse_training(require(root, "", "training"), cfg);
  if (auto it = root.find("seeds"); it != root.end())
    cfg.seeds = parse_seeds(*it);
  else
    for (int i = 1; i <= 30; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(i));
  if (auto it = root.find("loss_threshold"); it != root.end())
    cfg.loss_threshold = get_positive(*it, "loss_threshold");
  if (auto it = root.find("output"); it != root.end()) {
    if (!it->is_object()) fail("output", "expected an object");
    reject_unknown(*it, "output", {"write_aggregate"});
    if (auto w = it->find("write_aggregate"); w != it->end())
      cfg.write_aggregate = get_bool(*w, "output.write_aggregate");
  }
  if (auto it = root.find("sweep"); it != root.end()) cfg.sweep = parse_sweep(*it);

  if (!cfg.network.sigma2.empty() && cfg.network.sigma2.size() != 1 &&
      cfg.network.sigma2.size() != static_cast<size_t>(cfg.dataset.devices))
    fail("network.sigma2", "expected one value or one per device");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("", "cannot open config file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

std::vector<double> resolve_sigma2(const ExperimentConfig& cfg) {
  auto K = static_cast<size_t>(cfg.dataset.devices);
  if (cfg.network.geometry) {
    RandomStream rng(cfg.network.placement_seed, StreamPurpose::placement);
    return channel::geometry_to_links(*cfg.network.geometry, cfg.dataset.devices, rng);
  }
  if (cfg.network.sigma2.size() == 1)
    return std::vector<double>(K, cfg.network.sigma2[0]);
  return cfg.network.sigma2;
}

learn::TrainingPlan resolve_plan(const ExperimentConfig& cfg,
                                 const std::vector<data::DeviceDataset>& devices) {
  learn::TrainingPlan plan = cfg.plan;
  plan.keep_aggregate = cfg.write_aggregate;
  if (cfg.gamma_is_inverse_L) {
    double n = 0.0;
    for (const auto& d : devices) n += static_cast<double>(d.N);
    double l_sum = n * learn::smoothness_constant(devices);
    plan.gamma = 1.0 / l_sum;
  }
  return plan;
}

}  // namespace sbfl::harness
