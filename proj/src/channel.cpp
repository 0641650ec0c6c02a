#include "sbfl/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace sbfl::channel {
namespace {

const double kTwoPi = 2.0 * M_PI;

}  // namespace

double draw_fading(RandomStream& rng) { return rng.gaussian(); }

std::vector<double> transmit(const SignVector& s, const LinkState& link, RandomStream& rng) {
  if (!(link.sigma2 >= 0.0)) throw std::invalid_argument("noise variance must be nonnegative");
  std::vector<double> y(s.size());
  double sd = std::sqrt(link.sigma2);
  for (size_t i = 0; i < s.size(); ++i)
    y[i] = link.h * static_cast<double>(s[i]) + sd * rng.gaussian();
  return y;
}

double likelihood(double y, int s, const LinkState& link) {
  if (s != 1 && s != -1) throw std::invalid_argument("channel input symbol must be +1 or -1");
  if (!(link.sigma2 > 0.0)) throw std::invalid_argument("noise variance must be positive");
  double d = y - link.h * static_cast<double>(s);
  return std::exp(-d * d / (2.0 * link.sigma2)) / std::sqrt(kTwoPi * link.sigma2);
}

double marginal_density(double y, const LinkState& link) {
  // Equal-probability symbols: average of the two symbol likelihoods.
  return 0.5 * (likelihood(y, 1, link) + likelihood(y, -1, link));
}

double cost231_path_loss_db(const NetworkGeometry& geom, double distance_m) {
  if (!(distance_m > 0.0)) throw std::invalid_argument("distance must be positive");
  if (!(geom.carrier_freq_mhz >= 1500.0 && geom.carrier_freq_mhz <= 2000.0))
    throw std::invalid_argument("carrier frequency outside the 1500-2000 MHz model range");
  // The model is calibrated for d >= 20 m; closer devices are evaluated at the floor.
  double d_km = std::max(distance_m, 20.0) / 1000.0;
  double f = geom.carrier_freq_mhz;
  double hb = geom.bs_height_m;
  double hr = geom.device_height_m;
  double a_hr = (1.1 * std::log10(f) - 0.7) * hr - (1.56 * std::log10(f) - 0.8);
  // Metropolitan-center correction term of +3 dB.
  return 46.3 + 33.9 * std::log10(f) - 13.82 * std::log10(hb) - a_hr +
         (44.9 - 6.55 * std::log10(hb)) * std::log10(d_km) + 3.0;
}

std::vector<double> geometry_to_links(const NetworkGeometry& geom, int K, RandomStream& rng) {
  if (K < 1) throw std::invalid_argument("need at least one device");
  std::vector<double> sigma2(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) {
    // sqrt of a uniform draw gives a uniform placement over the disk area.
    double r = geom.cell_radius_m * std::sqrt(rng.uniform());
    double pl = cost231_path_loss_db(geom, r);
    double snr_db = geom.tx_power_dbm - pl - geom.noise_floor_dbm;
    sigma2[static_cast<size_t>(k)] = std::pow(10.0, -snr_db / 10.0);
  }
  return sigma2;
}

}  // namespace sbfl::channel
