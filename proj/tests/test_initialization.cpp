// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "support.hpp"
#include "tfopt/initialization.hpp"
#include "tfopt/synthetic.hpp"

using namespace tfopt;

namespace {

RenderConfig small_render(int size)
{
  RenderConfig cfg;
  cfg.width = size;
  cfg.height = size;
  return cfg;
}

}  // namespace

TEST_CASE("inverse histogram weights")
{
  // Values 0..7 with counts 1, 1, 2, 4 in four bins; empty bins impossible here.
  std::vector<double> v = {0, 1, 2, 3, 4, 4.5, 5, 6.9};
  ScalarField f({8, 1, 1}, {1, 1, 1}, v);
  const auto counts = histogram(f, 4);
  const auto w = inverse_histogram_weights(f, 4, 1.0);
  REQUIRE(w.size() == 4);
  double peak = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    peak = std::max(peak, w[k]);
    CHECK(w[k] > 0.0);
  }
  CHECK(peak == 1.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (counts[i] < counts[j])
        CHECK(w[i] > w[j]);

  SUBCASE("empty bins get the largest weight")
  {
    ScalarField g({4, 1, 1}, {1, 1, 1}, std::vector<double>{0, 0, 0, 10});
    const auto wg = inverse_histogram_weights(g, 5, 1.0);
    const auto cg = histogram(g, 5);
    for (std::size_t k = 0; k < 5; ++k)
      if (cg[k] == 0)
        CHECK(wg[k] == 1.0);
    CHECK(wg[0] == doctest::Approx(1.0 / 4.0));
  }
}

TEST_CASE("initialization hits the transmittance target")
{
  const ScalarField field = make_two_shell_volume(16);
  Rng rng(11);
  const RenderConfig cfg = small_render(48);
  const InitResult r =
      init_params(field, 16, rng, 0.05, initial_view(field.bounding_radius()), cfg);
  CHECK(r.converged);
  CHECK(r.mean_transmittance >= 0.04);
  CHECK(r.mean_transmittance <= 0.06);
  CHECK(r.iterations >= 1);

  const TFRealized tf = realize(r.params, field.value_min(), field.value_max());
  for (const Rgb& c : tf.color)
    for (double v : c) {
      CHECK(v >= 0.3 - 1e-12);
      CHECK(v <= 0.7 + 1e-12);
    }
  // positions are the uniform grid
  for (std::size_t k = 0; k < tf.positions.size(); ++k)
    CHECK(tf.positions[k]
          == doctest::Approx(field.value_min()
                             + (field.value_max() - field.value_min()) * k / 15.0));
  // mean T reported matches a fresh render
  const RenderOutput out = render(field, tf, initial_view(field.bounding_radius()), cfg,
                                  RgbImage(cfg.width, cfg.height, 0.0));
  CHECK(out.mean_hit_transmittance() == doctest::Approx(r.mean_transmittance).epsilon(1e-12));
}

TEST_CASE("initialization is seeded")
{
  const ScalarField field = make_two_shell_volume(12);
  const RenderConfig cfg = small_render(24);
  Rng a(3), b(3), c(4);
  const CameraPose v = initial_view(field.bounding_radius());
  const auto ra = init_params(field, 8, a, 0.05, v, cfg);
  const auto rb = init_params(field, 8, b, 0.05, v, cfg);
  const auto rc = init_params(field, 8, c, 0.05, v, cfg);
  CHECK(ra.params.flatten() == rb.params.flatten());
  CHECK(ra.params.flatten() != rc.params.flatten());
}

TEST_CASE("high target transmittance")
{
  const ScalarField field = make_two_shell_volume(12);
  Rng rng(5);
  const InitResult r = init_params(field, 8, rng, 0.99, initial_view(field.bounding_radius()),
                                   small_render(24));
  CHECK(r.converged);
  CHECK(std::abs(r.mean_transmittance - 0.99) <= 0.01);
  const TFRealized tf = realize(r.params, field.value_min(), field.value_max());
  for (double d : tf.density)
    CHECK(d < 5.0);
}

TEST_CASE("invalid initialization arguments")
{
  const ScalarField field = make_two_shell_volume(8);
  Rng rng(1);
  const CameraPose v = initial_view(field.bounding_radius());
  CHECK_THROWS_AS(init_params(field, 1, rng, 0.05, v, small_render(8)), ValidationError);
  CHECK_THROWS_AS(init_params(field, 4, rng, 0.0, v, small_render(8)), ValidationError);
  CHECK_THROWS_AS(init_params(field, 4, rng, 1.0, v, small_render(8)), ValidationError);
  ScalarField flat({2, 2, 2}, {1, 1, 1}, std::vector<double>(8, 3.0));
  CHECK_THROWS_AS(init_params(flat, 4, rng, 0.05, v, small_render(8)), DegenerateInputError);
}
