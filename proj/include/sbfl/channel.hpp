#pragma once

#include "sbfl/rng.hpp"
#include "sbfl/types.hpp"

namespace sbfl::channel {

// Cell geometry and link budget for the path-loss based noise model.
struct NetworkGeometry {
  double cell_radius_m = 1000.0;
  double bs_height_m = 70.0;
  double device_height_m = 1.5;
  double carrier_freq_mhz = 2000.0;
  double tx_power_dbm = 23.0;
  double noise_floor_dbm = -100.0;
};

// One block-fading draw: h ~ N(0,1), constant within a round.
double draw_fading(RandomStream& rng);

// y_m = h * s_m + n_m with n_m iid N(0, sigma2).
std::vector<double> transmit(const SignVector& s, const LinkState& link,
                             RandomStream& rng);

// Gaussian likelihood of one received coordinate given the transmitted sign.
double likelihood(double y, int s, const LinkState& link);

// Density of y under equiprobable signs: an even two-component mixture of
// N(h, sigma2) and N(-h, sigma2).
double marginal_density(double y, const LinkState& link);

// COST-231 Hata urban path loss in dB; distance below 20 m is clamped to
// the model's validity floor.
double cost231_path_loss_db(const NetworkGeometry& geom, double distance_m);

// Places K devices uniformly in the disk and converts each link budget to a
// noise variance sigma2 = 1 / SNR_linear (fading is drawn separately per
// round, so only the variances are returned).
std::vector<double> geometry_to_links(const NetworkGeometry& geom, int K,
                                      RandomStream& rng);

}  // namespace sbfl::channel
