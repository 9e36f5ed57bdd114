// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/objective.hpp"

#include <algorithm>

namespace tfopt {

void ObjectiveConfig::validate() const
{
  if (!(beta_shape > 0.0 && beta_shape < 1.0))
    throw ValidationError("objective.beta_shape", "must lie in (0, 1)");
  if (!(density_weight >= 0.0))
    throw ValidationError("objective.density_weight", "must be >= 0");
  if (!(lambda_density >= 0.0))
    throw ValidationError("objective.lambda_density", "must be >= 0");
  if (!(lambda_color >= 0.0))
    throw ValidationError("objective.lambda_color", "must be >= 0");
  if (prior_start_step < 1)
    throw ValidationError("objective.prior_start_step", "must be >= 1");
  if (augment_start_step < 1)
    throw ValidationError("objective.augment_start_step", "must be >= 1");
  if (negatives_per_step < 1)
    throw ValidationError("objective.negatives_per_step", "must be >= 1");
  if (!(transmittance_eps > 0.0 && transmittance_eps < 0.5))
    throw ValidationError("objective.transmittance_eps", "must lie in (0, 0.5)");
}

LossAndGradient contrastive_loss(double positive, std::span<const double> negatives)
{
  if (negatives.empty())
    throw ValidationError("negatives", "at least one negative score is required");
  std::vector<double> logits;
  logits.reserve(negatives.size() + 1);
  logits.push_back(positive);
  logits.insert(logits.end(), negatives.begin(), negatives.end());

  const double peak = *std::max_element(logits.begin(), logits.end());
  double partition = 0.0;
  for (double l : logits)
    partition += std::exp(l - peak);
  const double log_partition = peak + std::log(partition);

  LossAndGradient out;
  out.loss = log_partition - positive;
  out.gradient.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    out.gradient[i] = std::exp(logits[i] - log_partition);
  out.gradient[0] -= 1.0;
  return out;
}

BetaPriorResult beta_prior_loss(const ScalarImage& transmittance, double shape, double eps)
{
  BetaPriorResult out;
  out.gradient = ScalarImage(transmittance.width, transmittance.height, 0.0);
  const std::size_t n = transmittance.values.size();
  if (n == 0)
    return out;
  const double coeff = shape - 1.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double raw = transmittance.values[i];
    const double t = std::clamp(raw, eps, 1.0 - eps);
    sum += -coeff * (std::log(t) + std::log(1.0 - t));
    if (raw > eps && raw < 1.0 - eps)
      out.gradient.values[i] = -coeff * (1.0 / t - 1.0 / (1.0 - t)) * inv_n;
  }
  out.loss = sum * inv_n;
  return out;
}

RegularizerTerms tf_regularizer(const TFRealized& tf, double lambda_density, double lambda_color)
{
  const std::size_t m = tf.control_points();
  RegularizerTerms out;
  out.gradient = RealizedGradient(m);
  double l1 = 0.0;
  double l2 = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double d = tf.density[k];
    l1 += std::abs(d);
    out.gradient.density[k] = d > 0.0 ? lambda_density : (d < 0.0 ? -lambda_density : 0.0);
    for (int c = 0; c < 3; ++c) {
      const double diff = tf.color[k][c] - 0.5;
      l2 += diff * diff;
      out.gradient.color[k][c] = 2.0 * lambda_color * diff;
    }
  }
  out.density_term = lambda_density * l1;
  out.color_term = lambda_color * l2;
  return out;
}

LossAndGradient tf_reg_loss(const TFParams& params, double value_min, double value_max,
                            double lambda_density, double lambda_color)
{
  const TFRealized tf = realize(params, value_min, value_max);
  RegularizerTerms terms = tf_regularizer(tf, lambda_density, lambda_color);
  LossAndGradient out;
  out.loss = terms.total();
  out.gradient = backprop_to_params(params, value_min, value_max, terms.gradient);
  return out;
}

SchedulePhase schedule(int step, const ObjectiveConfig& config)
{
  if (step < 1)
    throw ValidationError("step", "steps are 1-based");
  SchedulePhase phase;
  phase.augmented_background = step >= config.augment_start_step;
  phase.prior_active = step >= config.prior_start_step;
  return phase;
}

}  // namespace tfopt
