#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbfl {

using GradientVector = std::vector<double>;
using SignVector = std::vector<std::int8_t>;  // entries are -1 or +1

// Formula variant for the aggregators and their MSE predictions.
// corrected uses the exact conditional-mean argument tanh(h*y/sigma2) and
// the exact output variance h^2 + sigma2 in the linear coefficient;
// paper_literal keeps the alternative constants tanh(2*h*y/sigma2) and
// (2/pi)*h^2 + sigma2 so both variants stay comparable side by side.
enum class Mode { corrected, paper_literal };

struct GaussianPriorParams {
  double mu = 0.0;
  double nu = 0.0;  // standard deviation, >= 0
};

struct LaplacianPriorParams {
  double mu = 0.0;
  double lambda = 0.0;  // scale, >= 0
};

// One device's channel realization for one round.
struct LinkState {
  double h = 0.0;       // fading gain
  double sigma2 = 1.0;  // noise variance, > 0
};

// A request is exact but beyond what this implementation supports
// (e.g. joint conditional means past K = 3).
struct capability_error : std::runtime_error {
  explicit capability_error(const std::string& what) : std::runtime_error(what) {}
};

// An adaptive numerical routine failed to reach its tolerance.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// A configuration file failed validation.
struct schema_error : std::runtime_error {
  schema_error(std::string key_, const std::string& what)
      : std::runtime_error(what), key(std::move(key_)) {}
  std::string key;
};

// Global tie convention: sign(0) = +1, so quantizer outputs stay in {-1,+1}.
inline double sign_pm1(double x) { return x >= 0.0 ? 1.0 : -1.0; }

}  // namespace sbfl
