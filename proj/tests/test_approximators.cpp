#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "distmap/approximators.hpp"
#include "distmap/math.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace distmap;

TEST_CASE("ecdf mid-rank values on a small sample with ties") {
  // samples {1, 2, 2, 5}, M = 4, eval = (r + 0.5)/(M + 1)
  EcdfTable t = ecdf_from_samples({5.0, 2.0, 1.0, 2.0}, 1e-6);
  CHECK(t.eval(0.0) == doctest::Approx(0.5 / 5.0));   // r = 0
  CHECK(t.eval(1.0) == doctest::Approx(1.0 / 5.0));   // r = 0 + 0.5
  CHECK(t.eval(1.5) == doctest::Approx(1.5 / 5.0));   // r = 1
  CHECK(t.eval(2.0) == doctest::Approx(2.5 / 5.0));   // r = 1 + 1
  CHECK(t.eval(3.0) == doctest::Approx(3.5 / 5.0));   // r = 3
  CHECK(t.eval(5.0) == doctest::Approx(4.0 / 5.0));   // r = 3 + 0.5
  CHECK(t.eval(9.0) == doctest::Approx(4.5 / 5.0));   // r = 4
}

TEST_CASE("ecdf evaluations are clipped and nondecreasing") {
  EcdfTable t = ecdf_from_samples({0.0, 1.0}, 0.01);
  CHECK(t.eval(-100.0) == doctest::Approx(0.1666666).epsilon(1e-5));
  // With >= 50 samples the raw mid-rank value 0.5/(M+1) falls below a 0.01
  // clip, so the boundary evaluations must saturate at the clip.
  std::vector<double> many;
  for (int i = 0; i < 60; ++i) many.push_back(static_cast<double>(i));
  EcdfTable tight = ecdf_from_samples(many, 0.01);
  CHECK(tight.eval(-100.0) == doctest::Approx(0.01));        // raw 0.5/61
  CHECK(tight.eval(100.0) == doctest::Approx(0.99));         // raw 60.5/61

  EcdfTable u = ecdf_from_samples({3.0, 1.0, 2.0, 2.5, 0.5}, 1e-6);
  double prev = -1.0;
  for (double x = -1.0; x <= 4.0; x += 0.01) {
    const double v = u.eval(x);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("ecdf quantile is a generalized inverse of eval") {
  std::vector<double> samples;
  for (int i = 0; i < 200; ++i) samples.push_back(std::sin(i * 12.9898) * 43758.5453 - std::floor(std::sin(i * 12.9898) * 43758.5453));
  EcdfTable t = ecdf_from_samples(samples, 1e-6);
  for (double q : {0.05, 0.3, 0.5, 0.71, 0.95}) {
    const double x = t.quantile(q);
    CHECK(t.eval(x) == doctest::Approx(q).epsilon(0.02));
  }
}

TEST_CASE("ecdf_from_samples argument validation") {
  CHECK_THROWS_AS(ecdf_from_samples({1.0}, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(ecdf_from_samples({1.0, 2.0}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ecdf_from_samples({1.0, 2.0}, 0.0), std::invalid_argument);
}

TEST_CASE("mis_specified_gaussian matches its closed form") {
  auto model = gaussian_conjugate_model(0.0, 1.0, 1.0);
  const double shift = 0.3, scale = 1.7;
  auto approx = mis_specified_gaussian(model, shift, scale);

  const std::vector<double> y{0.8};
  const double sF = std::sqrt(model.conjugate->posterior_var());
  const double mG = model.conjugate->posterior_mean(0.8) + shift;
  const double sG = scale * sF;

  for (double x : {-2.0, 0.0, 0.4, 1.5}) {
    CHECK(approx.cdf(y, 0, x) ==
          doctest::Approx(math::norm_cdf((x - mG) / sG)).epsilon(1e-12));
    CHECK(approx.log_pdf(y, 0, x) ==
          doctest::Approx(math::norm_logpdf(x, mG, sG)).epsilon(1e-12));
  }
  for (double q : {0.01, 0.5, 0.93}) {
    CHECK(approx.cdf(y, 0, approx.inv_cdf(y, 0, q)) ==
          doctest::Approx(q).epsilon(1e-12));
  }
}

TEST_CASE("mis_specified_gaussian conditional factorizes over iid coordinates") {
  auto model = gaussian_conjugate_model_2d(0.0, 1.0, 1.0);
  auto approx = mis_specified_gaussian(model, 0.0, 1.3);
  const std::vector<double> y{0.5, -0.7};
  // Coordinates are independent: conditional of coord 2 given x1 equals the
  // coord-2 marginal.
  for (double x2 : {-1.0, 0.2, 0.9})
    CHECK(approx.conditional_cdf(y, /*x1=*/3.0, x2) ==
          doctest::Approx(approx.cdf(y, 1, x2)).epsilon(1e-12));
}

TEST_CASE("mis_specified_gaussian requires a conjugate model") {
  auto design = uniform_design(5, 2, 1);
  auto model = logistic_model(design, 1.0);
  CHECK_THROWS_AS(mis_specified_gaussian(model, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("compute_q produces clipped PIT values with the summary as input") {
  auto model = gaussian_conjugate_model(0.0, 1.0, 1.0);
  auto approx = exact_posterior_approx(model);
  SimBatch batch = sample_generative(model, 500, 21);
  QDataset data = compute_q(batch, approx, 0, 1e-4);
  REQUIRE(data.size() == 500);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(data.records[i].q >= 1e-4);
    CHECK(data.records[i].q <= 1.0 - 1e-4);
    CHECK(data.records[i].input == batch.pairs[i].s);
  }
}

TEST_CASE("PIT through the exact posterior is uniform") {
  auto model = gaussian_conjugate_model(0.3, 2.0, 0.7);
  auto approx = exact_posterior_approx(model);
  SimBatch batch = sample_generative(model, 20000, 5);
  QDataset data = compute_q(batch, approx, 0, 1e-9);
  std::vector<double> q;
  for (const auto& r : data.records) q.push_back(r.q);
  const double ks = oracles::ks_statistic(q, [](double x) { return x; });
  CHECK(ks < oracles::dkw_epsilon(q.size()));
}

TEST_CASE("sign-flip family: single-y distortion is the quantile shift") {
  auto model = gaussian_conjugate_model(0.0, 1.0, 1.0);
  const double c = 0.15;
  auto approx = sign_flip_quantile_shift(model, c, 0.0);

  const double sF = std::sqrt(0.5);
  SUBCASE("above the flip point: F(G^{-1}(q)) = q + c sin(pi q)") {
    const std::vector<double> y{0.8};
    const double mF = model.conjugate->posterior_mean(0.8);
    for (double q : {0.05, 0.3, 0.5, 0.8, 0.99}) {
      const double x = approx.inv_cdf(y, 0, q);
      const double F = math::norm_cdf((x - mF) / sF);
      CHECK(F == doctest::Approx(q + c * std::sin(std::numbers::pi * q)).epsilon(1e-9));
    }
  }
  SUBCASE("below the flip point: F(G^{-1}(q)) = q - c sin(pi q)") {
    const std::vector<double> y{-0.4};
    const double mF = model.conjugate->posterior_mean(-0.4);
    for (double q : {0.05, 0.5, 0.9}) {
      const double x = approx.inv_cdf(y, 0, q);
      const double F = math::norm_cdf((x - mF) / sF);
      CHECK(F == doctest::Approx(q - c * std::sin(std::numbers::pi * q)).epsilon(1e-9));
    }
  }
  SUBCASE("cdf and inv_cdf are mutual inverses") {
    const std::vector<double> y{1.2};
    for (double q : {0.02, 0.5, 0.97})
      CHECK(approx.cdf(y, 0, approx.inv_cdf(y, 0, q)) ==
            doctest::Approx(q).epsilon(1e-9));
  }
}

TEST_CASE("sign-flip family: pooled PIT over the prior predictive is uniform") {
  auto model = gaussian_conjugate_model(0.0, 1.0, 1.0);
  auto approx = sign_flip_quantile_shift(model, 0.15, 0.0);
  SimBatch batch = sample_generative(model, 20000, 8);
  QDataset data = compute_q(batch, approx, 0, 1e-9);
  std::vector<double> q;
  for (const auto& r : data.records) q.push_back(r.q);
  const double ks = oracles::ks_statistic(q, [](double x) { return x; });
  CHECK(ks < oracles::dkw_epsilon(q.size()));
}

TEST_CASE("sign-flip amplitude guard") {
  auto model = gaussian_conjugate_model(0.0, 1.0, 1.0);
  CHECK_THROWS_AS(sign_flip_quantile_shift(model, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("ecdf_approx reproduces the sampled distribution deterministically") {
  auto model = gaussian_conjugate_model(0.0, 1.0, 1.0);
  auto sampler = [&model](const std::vector<double>& y, int coord, RngStream& rng) {
    (void)coord;
    return model.sample_exact_posterior(y, rng)[0];
  };
  auto approx = ecdf_approx(sampler, 4000, 1e-6, 99);
  CHECK(approx.kind == "ecdf");

  const std::vector<double> y{0.6};
  const double mF = model.conjugate->posterior_mean(0.6);
  const double sF = std::sqrt(model.conjugate->posterior_var());
  const double band = oracles::dkw_epsilon(4000);  // ~0.0425
  for (double x : {-0.5, 0.3, 0.6, 1.4}) {
    const double exact = math::norm_cdf((x - mF) / sF);
    CHECK(std::abs(approx.cdf(y, 0, x) - exact) < band);
    CHECK(approx.cdf(y, 0, x) == approx.cdf(y, 0, x));  // memoized, stable
  }
  // A second object with the same seed gives identical evaluations.
  auto approx2 = ecdf_approx(sampler, 4000, 1e-6, 99);
  for (double x : {-0.5, 0.3, 1.4})
    CHECK(approx.cdf(y, 0, x) == approx2.cdf(y, 0, x));
}

TEST_CASE("variational logistic fit: ELBO ascends and the fixed point holds") {
  auto design = uniform_design(20, 3, 1);
  std::vector<double> y{1, 0, 1, 1, 0, 1, 0, 0, 1, 1,
                        0, 1, 0, 1, 1, 0, 0, 1, 0, 1};
  const double pv = 2.0;
  ViFit fit = vi_logistic_fit(y, design, pv);

  REQUIRE(fit.mean.size() == 3);
  REQUIRE(fit.cov.size() == 9);
  REQUIRE(fit.elbo_trace.size() >= 2);
  for (std::size_t i = 1; i < fit.elbo_trace.size(); ++i)
    CHECK(fit.elbo_trace[i] >= fit.elbo_trace[i - 1] - 1e-10);

  // Self-consistency of the converged fit: with xi_j^2 = x_j'(S + mm')x_j,
  // S^{-1} = I/pv + 2 sum_j lambda(xi_j) x_j x_j' and m = S X'(y - 1/2).
  auto lambda = [](double xi) {
    return xi < 1e-8 ? 0.125 : std::tanh(0.5 * xi) / (4.0 * xi);
  };
  std::vector<double> prec(9, 0.0);
  for (int d = 0; d < 3; ++d) prec[d * 3 + d] = 1.0 / pv;
  for (int j = 0; j < 20; ++j) {
    double xi2 = 0.0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        xi2 += design[j][r] *
               (fit.cov[r * 3 + c] + fit.mean[r] * fit.mean[c]) * design[j][c];
    const double lam = lambda(std::sqrt(xi2));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        prec[r * 3 + c] += 2.0 * lam * design[j][r] * design[j][c];
  }
  // prec * cov should be the identity.
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += prec[r * 3 + k] * fit.cov[k * 3 + c];
      CHECK(dot == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-6));
    }
  // m = S X'(y - 1/2).
  std::vector<double> rhs(3, 0.0);
  for (int j = 0; j < 20; ++j)
    for (int r = 0; r < 3; ++r) rhs[r] += design[j][r] * (y[j] - 0.5);
  for (int r = 0; r < 3; ++r) {
    double m = 0.0;
    for (int c = 0; c < 3; ++c) m += fit.cov[r * 3 + c] * rhs[c];
    CHECK(m == doctest::Approx(fit.mean[r]).epsilon(1e-8));
  }
}

TEST_CASE("variational logistic fit: label flip negates the mean") {
  auto design = uniform_design(12, 2, 3);
  std::vector<double> y{1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 1};
  std::vector<double> flipped(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) flipped[i] = 1.0 - y[i];
  ViFit a = vi_logistic_fit(y, design, 2.0);
  ViFit b = vi_logistic_fit(flipped, design, 2.0);
  for (std::size_t i = 0; i < a.mean.size(); ++i)
    CHECK(a.mean[i] == doctest::Approx(-b.mean[i]).epsilon(1e-8));
  for (std::size_t i = 0; i < a.cov.size(); ++i)
    CHECK(a.cov[i] == doctest::Approx(b.cov[i]).epsilon(1e-8));
}

TEST_CASE("vi_logistic family exposes the fit through Gaussian marginals") {
  auto design = uniform_design(20, 3, 1);
  auto approx = vi_logistic(design, 2.0);
  std::vector<double> y{1, 0, 1, 1, 0, 1, 0, 0, 1, 1,
                        0, 1, 0, 1, 1, 0, 0, 1, 0, 1};
  ViFit fit = vi_logistic_fit(y, design, 2.0);
  for (int coord = 0; coord < 3; ++coord) {
    const double m = fit.mean[coord];
    const double sd = std::sqrt(fit.cov[coord * 3 + coord]);
    for (double x : {-1.0, 0.0, 0.8}) {
      CHECK(approx.cdf(y, coord, x) ==
            doctest::Approx(math::norm_cdf((x - m) / sd)).epsilon(1e-9));
      CHECK(approx.log_pdf(y, coord, x) ==
            doctest::Approx(math::norm_logpdf(x, m, sd)).epsilon(1e-9));
    }
    for (double q : {0.1, 0.5, 0.9})
      CHECK(approx.cdf(y, coord, approx.inv_cdf(y, coord, q)) ==
            doctest::Approx(q).epsilon(1e-9));
  }
}

TEST_CASE("vi_logistic conditional is the Gaussian conditional") {
  auto design = uniform_design(20, 3, 1);
  auto approx = vi_logistic(design, 2.0);
  std::vector<double> y{0, 0, 1, 1, 0, 1, 0, 1, 1, 1,
                        0, 1, 0, 0, 1, 0, 0, 1, 0, 1};
  ViFit fit = vi_logistic_fit(y, design, 2.0);
  const double m0 = fit.mean[0], m1 = fit.mean[1];
  const double s00 = fit.cov[0], s01 = fit.cov[1], s11 = fit.cov[4];
  const double x1 = 0.7;
  const double cond_mean = m1 + s01 / s00 * (x1 - m0);
  const double cond_sd = std::sqrt(s11 - s01 * s01 / s00);
  for (double x2 : {-0.5, 0.1, 0.9})
    CHECK(approx.conditional_cdf(y, x1, x2) ==
          doctest::Approx(math::norm_cdf((x2 - cond_mean) / cond_sd))
              .epsilon(1e-9));
}

TEST_CASE("compute_q rejects non-finite PIT inputs") {
  auto model = gaussian_conjugate_model(0.0, 1.0, 1.0);
  SimBatch batch = sample_generative(model, 3, 1);
  ApproxPosterior bad;
  bad.cdf = [](const std::vector<double>&, int, double) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(compute_q(batch, bad, 0, 1e-6), std::runtime_error);
}
