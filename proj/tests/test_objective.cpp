// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "support.hpp"
#include "tfopt/objective.hpp"

using namespace tfopt;

TEST_CASE("contrastive loss values")
{
  SUBCASE("uniform logits give ln(K+1)")
  {
    const std::vector<double> negs(128, 0.37);
    const auto r = contrastive_loss(0.37, negs);
    CHECK(std::abs(r.loss - std::log(129.0)) < 1e-12);
    CHECK(std::abs(r.loss - 4.8598) < 1e-4);
  }
  SUBCASE("saturated positive")
  {
    const std::vector<double> negs = {0.0, -1.0, 0.5};
    CHECK(contrastive_loss(30.5, negs).loss < 1e-12);
  }
  SUBCASE("[1, 0, 0]")
  {
    const std::vector<double> negs = {0.0, 0.0};
    const auto r = contrastive_loss(1.0, negs);
    const double e = std::exp(1.0);
    CHECK(r.loss == doctest::Approx(-std::log(e / (e + 2.0))).epsilon(1e-14));
    CHECK(r.loss == doctest::Approx(0.5514).epsilon(1e-4));
  }
  SUBCASE("large logits stay finite")
  {
    const std::vector<double> negs = {1000.0, 999.0};
    const auto r = contrastive_loss(1000.0, negs);
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss == doctest::Approx(std::log(2.0 + std::exp(-1.0))));
  }
}

TEST_CASE("contrastive loss gradient and invariants")
{
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<double> logits(9);
  for (double& v : logits)
    v = n(rng);
  auto loss = [](const std::vector<double>& x) {
    return contrastive_loss(x[0], std::span<const double>(x).subspan(1)).loss;
  };
  const auto r = contrastive_loss(logits[0], std::span<const double>(logits).subspan(1));
  REQUIRE(r.gradient.size() == logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    CHECK(r.gradient[i] == doctest::Approx(tfopt::testing::central_difference(loss, logits, i, 1e-6)).epsilon(1e-7));

  std::vector<double> shifted = logits;
  for (double& v : shifted)
    v += 123.25;
  CHECK(loss(shifted) == doctest::Approx(loss(logits)).epsilon(1e-12));

  double previous = loss(logits);
  for (int i = 0; i < 20; ++i) {
    logits[0] += 0.5;
    const double now = loss(logits);
    CHECK(now < previous);
    previous = now;
  }
}

TEST_CASE("beta prior")
{
  SUBCASE("a = 0.5 at T = 0.5")
  {
    // -[(a-1) ln T + (a-1) ln(1-T)] = -[(-0.5)(-ln 2) * 2] = -ln 2
    const auto r = beta_prior_loss(ScalarImage(3, 2, 0.5), 0.5, 1e-4);
    CHECK(r.loss == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  }
  SUBCASE("symmetric in T and 1 - T")
  {
    for (double t : {0.01, 0.2, 0.37, 0.9})
      CHECK(beta_prior_loss(ScalarImage(1, 1, t), 0.5, 1e-4).loss
            == doctest::Approx(beta_prior_loss(ScalarImage(1, 1, 1.0 - t), 0.5, 1e-4).loss).epsilon(1e-12));
  }
  SUBCASE("U-shaped: boundary below the middle")
  {
    const double eps = 1e-4;
    for (double a : {0.1, 0.5, 0.9}) {
      CHECK(beta_prior_loss(ScalarImage(1, 1, eps), a, eps).loss
            < beta_prior_loss(ScalarImage(1, 1, 0.5), a, eps).loss);
    }
  }
  SUBCASE("clamped pixels have zero gradient and finite loss")
  {
    ScalarImage t(2, 1);
    t.values = {0.0, 1.0};
    const auto r = beta_prior_loss(t, 0.5, 1e-4);
    CHECK(std::isfinite(r.loss));
    CHECK(r.gradient.values[0] == 0.0);
    CHECK(r.gradient.values[1] == 0.0);
  }
  SUBCASE("gradient matches central differences")
  {
    ScalarImage t(3, 3);
    std::mt19937_64 rng(2);
    for (double& v : t.values)
      v = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const auto r = beta_prior_loss(t, 0.4, 1e-4);
    auto loss = [&](const std::vector<double>& x) {
      ScalarImage img(3, 3);
      img.values = x;
      return beta_prior_loss(img, 0.4, 1e-4).loss;
    };
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      const double fd = tfopt::testing::central_difference(loss, t.values, i, 1e-6);
      CHECK(tfopt::testing::relative_error(r.gradient.values[i], fd) < 1e-6);
    }
  }
}

TEST_CASE("regularizer")
{
  SUBCASE("zero densities and mid-gray colors give zero")
  {
    TFRealized tf;
    tf.positions = {0.0, 1.0};
    tf.density = {0.0, 0.0};
    tf.color = {Rgb{0.5, 0.5, 0.5}, Rgb{0.5, 0.5, 0.5}};
    CHECK(tf_regularizer(tf, 2e-5, 8e-4).total() == 0.0);
  }
  SUBCASE("hand values")
  {
    TFRealized tf;
    tf.positions = {0.0, 1.0};
    tf.density = {100.0, 55.0};
    tf.color = {Rgb{0.5, 0.5, 0.5}, Rgb{0.5, 0.5, 0.5}};
    CHECK(std::abs(tf_regularizer(tf, 2e-5, 8e-4).density_term - 3.1e-3) < 1e-12);
    tf.density = {0.0, 0.0};
    tf.color = {Rgb{0, 0, 0}, Rgb{0, 0, 0}};
    CHECK(std::abs(tf_regularizer(tf, 2e-5, 8e-4).color_term - 1.2e-3) < 1e-12);
  }
  SUBCASE("raw-space gradient matches central differences")
  {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    TFParams p = TFParams::uniform(5);
    for (double& v : p.raw_density)
      v = n(rng);
    for (Rgb& c : p.raw_color)
      for (double& v : c)
        v = n(rng);
    const auto r = tf_reg_loss(p, 0.0, 10.0, 2e-5, 8e-4);
    auto loss = [](const std::vector<double>& x) {
      return tf_reg_loss(TFParams::unflatten(x, 5), 0.0, 10.0, 2e-5, 8e-4).loss;
    };
    const auto flat = p.flatten();
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const double fd = tfopt::testing::central_difference(loss, flat, i, 1e-5);
      if (i < p.density_offset()) {
        CHECK(r.gradient[i] == 0.0);  // positions do not enter the regularizer
        continue;
      }
      CHECK(tfopt::testing::relative_error(r.gradient[i], fd) < 1e-6);
    }
  }
}

TEST_CASE("schedule")
{
  const ObjectiveConfig cfg;
  CHECK_FALSE(schedule(1, cfg).augmented_background);
  CHECK_FALSE(schedule(10, cfg).augmented_background);
  CHECK_FALSE(schedule(10, cfg).prior_active);
  CHECK_FALSE(schedule(25, cfg).augmented_background);
  CHECK(schedule(26, cfg).augmented_background);
  CHECK(schedule(50, cfg).augmented_background);
  CHECK_FALSE(schedule(50, cfg).prior_active);
  CHECK_FALSE(schedule(99, cfg).prior_active);
  CHECK(schedule(100, cfg).augmented_background);
  CHECK(schedule(100, cfg).prior_active);
  CHECK_THROWS_AS(schedule(0, cfg), ValidationError);

  ObjectiveConfig custom;
  custom.augment_start_step = 3;
  custom.prior_start_step = 5;
  CHECK(schedule(3, custom).augmented_background);
  CHECK(schedule(5, custom).prior_active);
  CHECK_FALSE(schedule(4, custom).prior_active);
}

TEST_CASE("objective config validation")
{
  ObjectiveConfig c;
  CHECK_NOTHROW(c.validate());
  c.beta_shape = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.transmittance_eps = 0.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.lambda_density = -1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.negatives_per_step = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("report total")
{
  ObjectiveReport r;
  r.l_clip = 1.0;
  r.l_density = 2.0;
  r.l_reg = 0.5;
  CHECK(r.total(0.02) == doctest::Approx(1.54));
}
