#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbfl/channel.hpp"
#include "sbfl/quadrature.hpp"

using namespace sbfl;

TEST_CASE("transmit: exact signal path at zero noise, reproducible draws") {
  SignVector s{1, -1, 1};
  LinkState link{0.7, 0.0};
  RandomStream rng(1, StreamPurpose::noise);
  auto y = channel::transmit(s, link, rng);
  CHECK(y[0] == doctest::Approx(0.7));
  CHECK(y[1] == doctest::Approx(-0.7));
  CHECK(y[2] == doctest::Approx(0.7));

  RandomStream a(42, StreamPurpose::noise, 3, 7);
  RandomStream b(42, StreamPurpose::noise, 3, 7);
  LinkState noisy{1.0, 2.0};
  CHECK(channel::transmit(s, noisy, a) == channel::transmit(s, noisy, b));
}

TEST_CASE("likelihood: gaussian density around h*s, ratio identity") {
  LinkState link{1.0, 1.0};
  // peak value at y = h*s
  CHECK(channel::likelihood(1.0, 1, link) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  // likelihood ratio between the two symbols is exp(2 h y / sigma2)
  double y = 0.15;
  double ratio = channel::likelihood(y, 1, link) / channel::likelihood(y, -1, link);
  CHECK(ratio == doctest::Approx(std::exp(0.3)).epsilon(1e-12));
  CHECK(ratio == doctest::Approx(1.349858807576003).epsilon(1e-12));

  CHECK_THROWS_AS(channel::likelihood(0.0, 0, link), std::invalid_argument);
  CHECK_THROWS_AS(channel::likelihood(0.0, 1, LinkState{1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("marginal density: even mixture, normalized, symmetric in y") {
  LinkState link{0.8, 1.7};
  CHECK(channel::marginal_density(0.3, link) ==
        doctest::Approx(channel::marginal_density(-0.3, link)).epsilon(1e-14));
  double half = 0.5 * (channel::likelihood(0.3, 1, link) + channel::likelihood(0.3, -1, link));
  CHECK(channel::marginal_density(0.3, link) == doctest::Approx(half).epsilon(1e-14));

  // density integrates to 1
  double mass = quadrature::integrate(
      [&](double y) { return channel::marginal_density(y, link); },
      -(std::abs(link.h) + 10.0 * std::sqrt(link.sigma2)),
      std::abs(link.h) + 10.0 * std::sqrt(link.sigma2), 1e-12);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("path loss: pinned urban value and monotonicity") {
  channel::NetworkGeometry geom;
  // frozen oracle: hand-evaluated model terms at the default geometry, 1 km
  CHECK(channel::cost231_path_loss_db(geom, 1000.0) ==
        doctest::Approx(135.6585692404022).epsilon(1e-12));
  // clamped below 20 m
  CHECK(channel::cost231_path_loss_db(geom, 5.0) ==
        doctest::Approx(channel::cost231_path_loss_db(geom, 20.0)));
  CHECK(channel::cost231_path_loss_db(geom, 100.0) <
        channel::cost231_path_loss_db(geom, 900.0));
  CHECK_THROWS_AS(channel::cost231_path_loss_db(geom, 0.0), std::invalid_argument);

  auto bad = geom;
  bad.carrier_freq_mhz = 900.0;  // outside the model's frequency range
  CHECK_THROWS_AS(channel::cost231_path_loss_db(bad, 100.0), std::invalid_argument);
}

TEST_CASE("geometry to links: sigma2 = 1/SNR, cell-edge value pinned") {
  channel::NetworkGeometry geom;
  // SNR at 1 km: 23 - PL + 100 dBm -> sigma2 = 10^(-SNR_dB/10)
  double snr_db = geom.tx_power_dbm - channel::cost231_path_loss_db(geom, 1000.0) -
                  geom.noise_floor_dbm;
  CHECK(std::pow(10.0, -snr_db / 10.0) == doctest::Approx(18.444076889762815).epsilon(1e-12));

  RandomStream rng(7, StreamPurpose::placement);
  auto sigma2 = channel::geometry_to_links(geom, 50, rng);
  CHECK(sigma2.size() == 50);
  for (double s2 : sigma2) {
    CHECK(s2 > 0.0);
    // no device can be noisier than the cell edge or quieter than the 20 m floor
    CHECK(s2 <= 18.444076889762815 * (1.0 + 1e-12));
    CHECK(s2 >= 4.906293018093446e-05 * (1.0 - 1e-12));
  }

  RandomStream r1(9, StreamPurpose::placement), r2(9, StreamPurpose::placement);
  CHECK(channel::geometry_to_links(geom, 10, r1) == channel::geometry_to_links(geom, 10, r2));
  CHECK_THROWS_AS(channel::geometry_to_links(geom, 0, rng), std::invalid_argument);
}

TEST_CASE("fading stream: standard normal draws, device and round keyed") {
  RandomStream a(5, StreamPurpose::fading, 0, 0);
  RandomStream b(5, StreamPurpose::fading, 0, 1);
  RandomStream c(5, StreamPurpose::fading, 1, 0);
  double ha = channel::draw_fading(a);
  CHECK(ha != channel::draw_fading(b));
  RandomStream a2(5, StreamPurpose::fading, 0, 0);
  CHECK(ha == channel::draw_fading(a2));
  CHECK(ha != channel::draw_fading(c));

  // long-run moments of the fading law
  RandomStream rng(11, StreamPurpose::fading);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double h = channel::draw_fading(rng);
    sum += h;
    sumsq += h * h;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.02));
}
