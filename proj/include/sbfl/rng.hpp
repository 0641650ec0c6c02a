#pragma once

#include <cstdint>
#include <random>

namespace sbfl {

// Every consumer of randomness names its purpose, so substreams for
// distinct (purpose, device, round) keys never overlap and execution
// order or parallelism cannot change what a run produces.
enum class StreamPurpose : std::uint64_t {
  fading = 1,
  noise = 2,
  data_matrix = 3,
  data_labels = 4,
  data_scale = 5,
  init_weights = 6,
  placement = 7,
  vote_coin = 8,
  monte_carlo = 9,
  batch = 10,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, StreamPurpose purpose,
               std::uint64_t device = 0, std::uint64_t round = 0) {
    // Chained whitening; each field lands in a separate splitmix step so
    // (seed, purpose, device, round) keys map to unrelated engine seeds.
    std::uint64_t s = splitmix64(master_seed);
    s = splitmix64(s ^ static_cast<std::uint64_t>(purpose));
    s = splitmix64(s ^ device);
    s = splitmix64(s ^ round);
    engine_.seed(s);
  }

  double gaussian() { return normal_(engine_); }
  double gaussian(double mean, double stddev) { return mean + stddev * normal_(engine_); }
  double uniform() { return uniform_(engine_); }  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
  bool coin() { return (engine_() & 1ull) != 0; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace sbfl
