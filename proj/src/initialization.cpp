// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/initialization.hpp"

#include <algorithm>
#include <limits>

namespace tfopt {

namespace {

constexpr double kMaxStepInLogScale = 2.0;
constexpr double kDensityCap = kMaxDensity * (1.0 - 1e-9);

}  // namespace

std::vector<double> inverse_histogram_weights(const ScalarField& field, std::size_t control_points,
                                              double eps)
{
  const auto counts = histogram(field, static_cast<int>(control_points));
  std::vector<double> weights(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    weights[k] = 1.0 / (static_cast<double>(counts[k]) + eps);
  const double peak = *std::max_element(weights.begin(), weights.end());
  for (double& w : weights)
    w /= peak;
  return weights;
}

InitResult init_params(const ScalarField& field, std::size_t control_points, Rng& rng,
                       double target, const CameraPose& view, const RenderConfig& config,
                       const InitOptions& options)
{
  if (control_points < 2)
    throw ValidationError("control_points", "at least 2 control points are required");
  if (!(target > 0.0 && target < 1.0))
    throw ValidationError("target_transmittance", "must lie in (0, 1)");
  require_range(field);

  TFParams params = TFParams::uniform(control_points);
  std::uniform_real_distribution<double> color_dist(0.3, 0.7);
  for (Rgb& c : params.raw_color)
    for (double& v : c)
      v = color_to_raw(color_dist(rng));

  const std::vector<double> weights =
      inverse_histogram_weights(field, control_points, options.histogram_eps);

  // Starting scale: spread -ln(target) optical depth over a typical chord,
  // using the voxel-weighted mean seed weight.
  const auto counts = histogram(field, static_cast<int>(control_points));
  double mean_weight = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    mean_weight += weights[k] * static_cast<double>(counts[k]);
  mean_weight /= static_cast<double>(field.voxel_count());
  const Vec3 ext = field.extent();
  const double chord = (ext.x + ext.y + ext.z) / 3.0;
  double log_scale = std::log(-std::log(target) / (chord * mean_weight));

  const RgbImage background(config.width, config.height, 0.0);
  const double vmin = field.value_min();
  const double vmax = field.value_max();

  auto densities_for = [&](double ls) {
    std::vector<double> d(control_points);
    for (std::size_t k = 0; k < control_points; ++k)
      d[k] = std::min(std::exp(ls) * weights[k], kDensityCap);
    return d;
  };

  InitResult best;
  double best_error = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const std::vector<double> density = densities_for(log_scale);
    for (std::size_t k = 0; k < control_points; ++k)
      params.raw_density[k] = density_to_raw(density[k]);

    const TFRealized tf = realize(params, vmin, vmax);
    const RenderOutput out = render(field, tf, view, config, background);
    const double mean_t = out.mean_hit_transmittance();
    const double error = std::abs(mean_t - target);
    if (error < best_error) {
      best_error = error;
      best.params = params;
      best.mean_transmittance = mean_t;
    }
    best.iterations = iter;
    if (error <= options.tolerance) {
      best.converged = true;
      break;
    }
    if (out.hit_rays == 0)
      break;

    // d mean_T / d density_k, then chain to log_scale through uncapped points
    ScalarImage dmean_dt(config.width, config.height, 0.0);
    const double inv_hits = 1.0 / static_cast<double>(out.hit_rays);
    for (std::size_t r = 0; r < out.cache.hit.size(); ++r)
      dmean_dt.values[r] = out.cache.hit[r] ? inv_hits : 0.0;
    const RgbImage no_image_grad(config.width, config.height, 0.0);
    const RealizedGradient g =
        render_adjoint_realized(tf, out, background, no_image_grad, &dmean_dt);
    double dmean_dlog = 0.0;
    bool all_capped = true;
    for (std::size_t k = 0; k < control_points; ++k) {
      if (density[k] < kDensityCap) {
        dmean_dlog += g.density[k] * density[k];
        all_capped = false;
      }
    }
    if (all_capped && mean_t > target)
      break;  // densest representable TF is still too transparent

    const double residual = std::log(mean_t) - std::log(target);
    const double slope = dmean_dlog / mean_t;
    double delta = slope < 0.0 && std::isfinite(slope) ? -residual / slope
                                                       : (residual > 0.0 ? 1.0 : -1.0);
    delta = std::clamp(delta, -kMaxStepInLogScale, kMaxStepInLogScale);
    log_scale += delta;
  }
  return best;
}

}  // namespace tfopt
