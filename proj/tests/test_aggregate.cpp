#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sbfl/aggregate.hpp"
#include "sbfl/quadrature.hpp"
#include "sbfl/rng.hpp"
#include "sbfl/theory.hpp"
#include "sbfl/types.hpp"

using namespace sbfl;

namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / M_PI);

std::vector<std::vector<double>> rx1(double y) { return {{y}}; }

double normal_pdf(double x, double m, double s2) {
  double d = x - m;
  return std::exp(-d * d / (2.0 * s2)) / std::sqrt(2.0 * M_PI * s2);
}

// Posterior mean by direct quadrature over the latent coordinate, for any
// symmetric scalar prior density. Independent of the tanh closed form.
template <typename Density>
double posterior_mean(double y, const LinkState& link, Density prior_pdf,
                      double half_width) {
  auto num = [&](double g) {
    return g * prior_pdf(g) * normal_pdf(y, link.h * (g >= 0.0 ? 1.0 : -1.0), link.sigma2);
  };
  auto den = [&](double g) {
    return prior_pdf(g) * normal_pdf(y, link.h * (g >= 0.0 ? 1.0 : -1.0), link.sigma2);
  };
  std::vector<double> knots = {0.0};
  double n = quadrature::integrate_segments(num, -half_width, half_width, knots, 1e-13);
  double d = quadrature::integrate_segments(den, -half_width, half_width, knots, 1e-13);
  return n / d;
}

}  // namespace

TEST_CASE("gaussian conditional-mean aggregator, both tanh arguments") {
  std::vector<GaussianPriorParams> priors = {{0.0, 1.0}};
  std::vector<LinkState> links = {{1.0, 2.0}};

  // At sigma2 = 2, y = 1 the two argument conventions give tanh(1/2) vs tanh(1).
  auto lit = aggregate::mmse_gaussian(rx1(1.0), priors, links, Mode::paper_literal);
  CHECK(lit.size() == 1);
  CHECK(lit[0] == doctest::Approx(0.6076642186347945).epsilon(1e-12));

  auto corr = aggregate::mmse_gaussian(rx1(1.0), priors, links, Mode::corrected);
  CHECK(corr[0] == doctest::Approx(0.36871614505987155).epsilon(1e-12));

  // corrected is the default
  auto def = aggregate::mmse_gaussian(rx1(1.0), priors, links);
  CHECK(def[0] == corr[0]);
}

TEST_CASE("laplacian conditional-mean aggregator, both tanh arguments") {
  std::vector<LaplacianPriorParams> priors = {{0.0, 2.0}};
  std::vector<LinkState> links = {{1.0, 2.0}};

  auto lit = aggregate::mmse_laplacian(rx1(1.0), priors, links, Mode::paper_literal);
  CHECK(lit[0] == doctest::Approx(1.5231883119115297).epsilon(1e-12));

  auto corr = aggregate::mmse_laplacian(rx1(1.0), priors, links, Mode::corrected);
  CHECK(corr[0] == doctest::Approx(0.9242343145200195).epsilon(1e-12));
}

TEST_CASE("scalar conditional mean matches direct posterior quadrature") {
  GaussianPriorParams gp{0.0, 1.0};
  LinkState link{1.0, 2.0};

  double cm = aggregate::conditional_mean_elementwise(0.5, gp, link, Mode::corrected);
  CHECK(cm == doctest::Approx(0.19541681938440872).epsilon(1e-12));

  auto gauss_pdf = [&](double g) { return normal_pdf(g, 0.0, gp.nu * gp.nu); };
  double oracle = posterior_mean(0.5, link, gauss_pdf, 12.0 * gp.nu);
  CHECK(std::abs(cm - oracle) < 1e-8);

  // The tanh(2hy/sigma2) variant does not solve the posterior integral here.
  double cm_lit = aggregate::conditional_mean_elementwise(0.5, gp, link, Mode::paper_literal);
  CHECK(cm_lit == doctest::Approx(0.36871614505987155).epsilon(1e-12));
  CHECK(std::abs(cm_lit - oracle) > 1e-2);

  // Same identity for a Laplacian prior: the scale is E|g|, so the density
  // scale parameter b equals lambda.
  LaplacianPriorParams lp{0.0, 0.8};
  LinkState link2{0.7, 1.3};
  double cml = aggregate::conditional_mean_elementwise(0.9, lp, link2, Mode::corrected);
  CHECK(cml == doctest::Approx(0.8 * std::tanh(0.7 * 0.9 / 1.3)).epsilon(1e-12));
  auto laplace_pdf = [&](double g) {
    return std::exp(-std::abs(g) / lp.lambda) / (2.0 * lp.lambda);
  };
  double oracle_l = posterior_mean(0.9, link2, laplace_pdf, 40.0 * lp.lambda);
  CHECK(std::abs(cml - oracle_l) < 1e-8);
}

TEST_CASE("conditional mean is odd in y and zero at y = 0") {
  GaussianPriorParams gp{0.0, 1.7};
  LinkState link{0.9, 0.6};
  for (Mode mode : {Mode::corrected, Mode::paper_literal}) {
    CHECK(aggregate::conditional_mean_elementwise(0.0, gp, link, mode) == 0.0);
    for (double y : {0.1, 0.7, 2.5, 40.0}) {
      double p = aggregate::conditional_mean_elementwise(y, gp, link, mode);
      double m = aggregate::conditional_mean_elementwise(-y, gp, link, mode);
      CHECK(p == doctest::Approx(-m).epsilon(1e-15));
      CHECK(p > 0.0);
    }
  }
}

TEST_CASE("conditional mean requires a centered prior") {
  LinkState link{1.0, 1.0};
  CHECK_THROWS_AS(aggregate::conditional_mean_elementwise(
                      0.5, GaussianPriorParams{0.1, 1.0}, link),
                  std::invalid_argument);
  CHECK_THROWS_AS(aggregate::conditional_mean_elementwise(
                      0.5, LaplacianPriorParams{-0.2, 1.0}, link),
                  std::invalid_argument);
}

TEST_CASE("aggregate saturates at the sum of mu + sqrt(2/pi) nu") {
  std::vector<GaussianPriorParams> priors = {{0.5, 1.0}, {-0.25, 2.0}};
  std::vector<LinkState> links = {{1.0, 1.0}, {2.0, 0.5}};
  std::vector<std::vector<double>> rx = {{1e8}, {1e8}};
  double hi = 0.5 - 0.25 + kSqrt2OverPi * 3.0;
  auto up = aggregate::mmse_gaussian(rx, priors, links);
  CHECK(up[0] == doctest::Approx(hi).epsilon(1e-12));

  rx = {{-1e8}, {-1e8}};
  double lo = 0.5 - 0.25 - kSqrt2OverPi * 3.0;
  auto dn = aggregate::mmse_gaussian(rx, priors, links);
  CHECK(dn[0] == doctest::Approx(lo).epsilon(1e-12));
}

TEST_CASE("majority vote counts per-coordinate signs relative to the fading") {
  RandomStream rng(1, StreamPurpose::vote_coin, 0, 0);
  std::vector<LinkState> links = {{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}};
  std::vector<std::vector<double>> rx = {{2.0, -2.0}, {1.0, -1.0}, {-3.0, 3.0}};
  auto v = aggregate::majority_vote(rx, links, rng);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == 1);
  CHECK(v[1] == -1);

  // Ties resolve to +1.
  RandomStream rng2(1, StreamPurpose::vote_coin, 0, 1);
  std::vector<LinkState> two = {{1.0, 1.0}, {1.0, 1.0}};
  auto tie = aggregate::majority_vote({{1.0}, {-1.0}}, two, rng2);
  CHECK(tie[0] == 1);

  // A negative h flips the decoded sign.
  RandomStream rng3(1, StreamPurpose::vote_coin, 0, 2);
  std::vector<LinkState> neg = {{-1.0, 1.0}};
  auto flip = aggregate::majority_vote({{-1.0}}, neg, rng3);
  CHECK(flip[0] == 1);

  // h = 0 carries nothing: the vote is a coin from the stream, deterministic
  // per seed.
  std::vector<LinkState> dead = {{0.0, 1.0}};
  RandomStream a1(9, StreamPurpose::vote_coin, 0, 5);
  RandomStream a2(9, StreamPurpose::vote_coin, 0, 5);
  auto c1 = aggregate::majority_vote({{0.3}}, dead, a1);
  auto c2 = aggregate::majority_vote({{0.3}}, dead, a2);
  CHECK(c1[0] == c2[0]);
  CHECK((c1[0] == 1 || c1[0] == -1));
}

TEST_CASE("blmmse linear coefficient, closed forms and limits") {
  std::vector<GaussianPriorParams> priors = {{0.0, 1.0}};

  // Noise-free corrected coefficient is sqrt(2/pi)/h.
  std::vector<LinkState> clean = {{1.0, 0.0}};
  for (double y : {-1.5, -0.2, 0.4, 2.0}) {
    auto e = aggregate::blmmse(rx1(y), priors, clean, Mode::corrected);
    CHECK(e[0] == doctest::Approx(kSqrt2OverPi * y).epsilon(1e-15));
    auto el = aggregate::blmmse(rx1(y), priors, clean, Mode::paper_literal);
    CHECK(el[0] == doctest::Approx(std::sqrt(M_PI / 2.0) * y).epsilon(1e-13));
  }

  // Corrected coefficient at h = sigma2 = 1 is sqrt(2/pi)/2.
  std::vector<LinkState> unit = {{1.0, 1.0}};
  auto e = aggregate::blmmse(rx1(2.0), priors, unit, Mode::corrected);
  CHECK(e[0] == doctest::Approx(0.7978845608028654).epsilon(1e-12));

  // The mean shifts the estimate additively.
  std::vector<GaussianPriorParams> shifted = {{0.5, 1.0}};
  auto es = aggregate::blmmse(rx1(2.0), shifted, unit, Mode::corrected);
  CHECK(es[0] == doctest::Approx(e[0] + 0.5).epsilon(1e-12));
}

TEST_CASE("corrected blmmse coefficient matches the empirical least-squares fit") {
  // Regress the latent coordinate on the channel output over Monte Carlo
  // draws at nu = h = sigma2 = 1; the best linear coefficient is
  // sqrt(2/pi) h nu / (h^2 + sigma2) = sqrt(2/pi)/2.
  const std::int64_t n = 1'000'000;
  RandomStream gs(77, StreamPurpose::monte_carlo, 0, 0);
  RandomStream ns(77, StreamPurpose::noise, 0, 0);
  double s_yy = 0.0, s_gy = 0.0;
  std::vector<double> gv(n), yv(n);
  for (std::int64_t i = 0; i < n; ++i) {
    double g = gs.gaussian();
    double y = (g >= 0.0 ? 1.0 : -1.0) + ns.gaussian();
    gv[i] = g;
    yv[i] = y;
    s_yy += y * y;
    s_gy += g * y;
  }
  double c_hat = s_gy / s_yy;
  double resid_sq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double r = (gv[i] - c_hat * yv[i]) * yv[i];
    resid_sq += r * r;
  }
  double se = std::sqrt(resid_sq) / s_yy;
  CHECK(std::abs(c_hat - 0.3989422804014327) < 3.0 * se);
}

TEST_CASE("high-snr forms") {
  std::vector<GaussianPriorParams> priors = {{0.25, 1.0}};
  std::vector<LinkState> links = {{1.0, 0.0}};

  auto e = aggregate::high_snr_mmse(rx1(1.0), priors, links);
  CHECK(e[0] == doctest::Approx(0.25 + kSqrt2OverPi).epsilon(1e-12));
  auto en = aggregate::high_snr_mmse(rx1(-0.3), priors, links);
  CHECK(en[0] == doctest::Approx(0.25 - kSqrt2OverPi).epsilon(1e-12));

  // h = 0 has no noise-free limit.
  std::vector<LinkState> dead = {{0.0, 0.0}};
  CHECK_THROWS_AS(aggregate::high_snr_mmse(rx1(1.0), priors, dead),
                  std::invalid_argument);
  CHECK_THROWS_AS(aggregate::high_snr_blmmse(rx1(1.0), priors, dead),
                  std::invalid_argument);

  // mmse_gaussian converges to high_snr_mmse as sigma2 descends.
  std::vector<GaussianPriorParams> zp = {{0.0, 1.3}};
  double prev = 1e300;
  for (double s2 : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    std::vector<LinkState> l = {{1.0, s2}};
    std::vector<LinkState> l0 = {{1.0, 0.0}};
    double dev = 0.0;
    for (double y : {-1.2, -0.8, 0.9, 1.1}) {
      double a = aggregate::mmse_gaussian(rx1(y), zp, l)[0];
      double b = aggregate::high_snr_mmse(rx1(y), zp, l0)[0];
      dev = std::max(dev, std::abs(a - b));
    }
    CHECK(dev <= prev);
    prev = dev;
  }
  CHECK(prev < 1e-6);

  // high_snr_blmmse at y = 2h returns 2 sqrt(2/pi) nu.
  std::vector<GaussianPriorParams> zp1 = {{0.0, 1.0}};
  std::vector<LinkState> h7 = {{0.7, 0.0}};
  auto eb = aggregate::high_snr_blmmse(rx1(1.4), zp1, h7);
  CHECK(eb[0] == doctest::Approx(1.5957691216057308).epsilon(1e-12));

  // blmmse with vanishing noise approaches its noise-free form.
  std::vector<LinkState> tiny = {{1.0, 1e-9}};
  std::vector<LinkState> none = {{1.0, 0.0}};
  for (double y : {-1.0, -0.3, 0.3, 1.0}) {
    double a = aggregate::blmmse(rx1(y), zp1, tiny, Mode::corrected)[0];
    double b = aggregate::high_snr_blmmse(rx1(y), zp1, none)[0];
    CHECK(std::abs(a - b) < 1e-9);
  }
}

TEST_CASE("gaussian aggregator dispatches sigma2 = 0 devices to the sign form") {
  std::vector<GaussianPriorParams> priors = {{0.25, 1.0}};
  std::vector<LinkState> clean = {{2.0, 0.0}};
  auto e = aggregate::mmse_gaussian(rx1(1.0), priors, clean);
  CHECK(e[0] == doctest::Approx(0.25 + kSqrt2OverPi).epsilon(1e-12));

  std::vector<LaplacianPriorParams> lp = {{0.25, 0.7}};
  auto el = aggregate::mmse_laplacian(rx1(-1.0), lp, clean);
  CHECK(el[0] == doctest::Approx(0.25 - 0.7).epsilon(1e-12));

  // sigma2 = 0 with h = 0 is contradictory input.
  std::vector<LinkState> dead = {{0.0, 0.0}};
  CHECK_THROWS_AS(aggregate::mmse_gaussian(rx1(1.0), priors, dead),
                  std::invalid_argument);
}

TEST_CASE("estimators are unbiased") {
  const std::int64_t n = 1'000'000;
  int cell = 0;
  for (double nu : {0.5, 1.0, 2.0}) {
    for (double h : {0.5, 1.0, 2.0}) {
      for (double s2 : {0.5, 1.0, 2.0}) {
        GaussianPriorParams gp{0.0, nu};
        LinkState link{h, s2};
        RandomStream gs(101, StreamPurpose::monte_carlo, cell, 0);
        RandomStream ns(101, StreamPurpose::noise, cell, 0);
        ++cell;
        double sum = 0.0, sum_sq = 0.0;
        double sd = std::sqrt(s2);
        for (std::int64_t i = 0; i < n; ++i) {
          double g = nu * gs.gaussian();
          double y = h * (g >= 0.0 ? 1.0 : -1.0) + sd * ns.gaussian();
          double est = aggregate::conditional_mean_elementwise(y, gp, link);
          double d = est - g;
          sum += d;
          sum_sq += d * d;
        }
        double mean = sum / double(n);
        double var = sum_sq / double(n) - mean * mean;
        double se = std::sqrt(var / double(n));
        CHECK(std::abs(mean) < 4.0 * se);
      }
    }
  }
}

TEST_CASE("conditional mean satisfies orthogonality; the doubled argument does not") {
  const std::int64_t n = 1'000'000;
  struct Cell {
    double nu, h, s2;
  };
  for (Cell c : {Cell{1.0, 1.0, 1.0}, Cell{2.0, 0.5, 2.0}}) {
    GaussianPriorParams gp{0.0, c.nu};
    LinkState link{c.h, c.s2};
    RandomStream gs(303, StreamPurpose::monte_carlo, int(c.nu * 10), 0);
    RandomStream ns(303, StreamPurpose::noise, int(c.nu * 10), 0);
    double sd = std::sqrt(c.s2);
    // residual products against phi(y) = y and phi(y) = tanh(2hy/sigma2)
    double s1 = 0.0, q1 = 0.0, s2v = 0.0, q2 = 0.0, l2 = 0.0, ql2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      double g = c.nu * gs.gaussian();
      double y = c.h * (g >= 0.0 ? 1.0 : -1.0) + sd * ns.gaussian();
      double est = aggregate::conditional_mean_elementwise(y, gp, link, Mode::corrected);
      double est_lit = aggregate::conditional_mean_elementwise(y, gp, link, Mode::paper_literal);
      double phi2 = std::tanh(2.0 * c.h * y / c.s2);
      double d1 = (g - est) * y;
      double d2 = (g - est) * phi2;
      double dl = (g - est_lit) * phi2;
      s1 += d1;
      q1 += d1 * d1;
      s2v += d2;
      q2 += d2 * d2;
      l2 += dl;
      ql2 += dl * dl;
    }
    auto se_of = [&](double s, double q) {
      double m = s / double(n);
      return std::sqrt(std::max(q / double(n) - m * m, 0.0) / double(n));
    };
    CHECK(std::abs(s1 / double(n)) < 4.0 * se_of(s1, q1));
    CHECK(std::abs(s2v / double(n)) < 4.0 * se_of(s2v, q2));
    // the doubled argument leaves correlated residual: a large, stable effect
    CHECK(std::abs(l2 / double(n)) > 20.0 * se_of(l2, ql2));
  }
}

TEST_CASE("monte carlo mse ordering: conditional mean beats both linear rules") {
  std::vector<GaussianPriorParams> priors = {{0.0, 1.0}};
  std::vector<LinkState> links = {{1.0, 1.0}};
  const std::int64_t n = 1'000'000;
  auto mk = [&](auto fn) {
    return theory::Aggregator(
        [&, fn](const std::vector<std::vector<double>>& rx) { return fn(rx); });
  };
  auto m_mmse = theory::mse_monte_carlo(
      mk([&](const std::vector<std::vector<double>>& rx) {
        return aggregate::mmse_gaussian(rx, priors, links, Mode::corrected);
      }),
      priors, links, 1, n, 4242);
  auto m_bc = theory::mse_monte_carlo(
      mk([&](const std::vector<std::vector<double>>& rx) {
        return aggregate::blmmse(rx, priors, links, Mode::corrected);
      }),
      priors, links, 1, n, 4242);
  auto m_bl = theory::mse_monte_carlo(
      mk([&](const std::vector<std::vector<double>>& rx) {
        return aggregate::blmmse(rx, priors, links, Mode::paper_literal);
      }),
      priors, links, 1, n, 4242);

  CHECK(m_bc.value - m_mmse.value > 3.0 * (m_bc.std_error + m_mmse.std_error));
  CHECK(m_bl.value - m_bc.value > 3.0 * (m_bl.std_error + m_bc.std_error));
}

TEST_CASE("aggregation is additive across devices") {
  std::vector<GaussianPriorParams> priors = {{0.1, 1.0}, {-0.2, 0.5}, {0.0, 2.0}};
  std::vector<LinkState> links = {{1.0, 1.0}, {0.5, 2.0}, {2.0, 0.25}};
  std::vector<std::vector<double>> rx = {{0.7, -1.1}, {-0.4, 0.2}, {1.5, 0.9}};

  auto all = aggregate::mmse_gaussian(rx, priors, links);
  auto all_b = aggregate::blmmse(rx, priors, links, Mode::corrected);
  for (std::size_t i = 0; i < 2; ++i) {
    double sum = 0.0, sum_b = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      sum += aggregate::mmse_gaussian({{rx[k][i]}}, {priors[k]}, {links[k]})[0];
      sum_b += aggregate::blmmse({{rx[k][i]}}, {priors[k]}, {links[k]}, Mode::corrected)[0];
    }
    CHECK(all[i] == sum);
    CHECK(all_b[i] == sum_b);
  }
}

TEST_CASE("tanh argument clamp never changes an in-range result") {
  for (Mode mode : {Mode::corrected, Mode::paper_literal}) {
    double c = (mode == Mode::paper_literal) ? 2.0 : 1.0;
    for (double h : {0.3, 1.0, 2.0}) {
      for (double y : {-10.0, -1.0, 0.5, 9.0}) {
        for (double s2 : {0.7, 1.0, 3.0}) {
          double arg = c * h * y / s2;
          if (std::abs(arg) > 30.0) continue;
          CHECK(aggregate::tanh_factor(h, y, s2, mode) == std::tanh(arg));
        }
      }
    }
  }
  // Extreme arguments saturate instead of overflowing.
  CHECK(aggregate::tanh_factor(1.0, 1e308, 1.0, Mode::corrected) == 1.0);
  CHECK(aggregate::tanh_factor(1.0, -1e308, 1.0, Mode::paper_literal) == -1.0);
}

TEST_CASE("shape mismatches are rejected") {
  std::vector<GaussianPriorParams> priors = {{0.0, 1.0}, {0.0, 1.0}};
  std::vector<LinkState> links = {{1.0, 1.0}};
  CHECK_THROWS_AS(aggregate::mmse_gaussian({{1.0}, {1.0}}, priors, links),
                  std::invalid_argument);
  std::vector<LinkState> links2 = {{1.0, 1.0}, {1.0, 1.0}};
  CHECK_THROWS_AS(aggregate::mmse_gaussian({{1.0}, {1.0, 2.0}}, priors, links2),
                  std::invalid_argument);
  CHECK_THROWS_AS(aggregate::mmse_gaussian({}, {}, {}), std::invalid_argument);
}
