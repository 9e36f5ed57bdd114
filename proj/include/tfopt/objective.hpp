// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "tfopt/common.hpp"
#include "tfopt/transfer_function.hpp"

namespace tfopt {

struct ObjectiveConfig {
  /// Shape a = b of the symmetric Beta prior on T_N; must lie in (0, 1).
  double beta_shape = 0.5;
  double density_weight = 0.02;
  double lambda_density = 2e-5;
  double lambda_color = 8e-4;
  /// First step (1-based) with the transmittance prior active.
  int prior_start_step = 100;
  /// First step (1-based) with augmented backgrounds; earlier steps use gray.
  int augment_start_step = 26;
  int negatives_per_step = 128;
  double transmittance_eps = 1e-4;

  void validate() const;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Cross-entropy of the softmax over [positive, negatives...] with the
/// positive as target. gradient[0] is d/dpositive, gradient[1 + k] is
/// d/dnegative[k].
LossAndGradient contrastive_loss(double positive, std::span<const double> negatives);

struct BetaPriorResult {
  double loss = 0.0;
  ScalarImage gradient;
};

/// Mean over pixels of -[(a-1) ln T + (a-1) ln(1-T)] with T clamped to
/// [eps, 1-eps]. The Beta normalizer is omitted, so values can be negative.
BetaPriorResult beta_prior_loss(const ScalarImage& transmittance, double shape, double eps);

struct RegularizerTerms {
  double density_term = 0.0;  // lambda1 * sum_k density_k
  double color_term = 0.0;    // lambda2 * sum_k ||color_k - 0.5||^2
  RealizedGradient gradient;

  double total() const { return density_term + color_term; }
};

/// Regularizer evaluated on realized control points.
RegularizerTerms tf_regularizer(const TFRealized& tf, double lambda_density, double lambda_color);

/// Regularizer and its gradient with respect to the raw parameters.
LossAndGradient tf_reg_loss(const TFParams& params, double value_min, double value_max,
                            double lambda_density, double lambda_color);

struct SchedulePhase {
  bool augmented_background = false;
  bool prior_active = false;
};

SchedulePhase schedule(int step, const ObjectiveConfig& config);

struct ObjectiveReport {
  double l_clip = 0.0;
  double l_density = 0.0;
  double l_reg = 0.0;
  std::vector<double> grad_phi;

  double total(double density_weight) const { return l_clip + density_weight * l_density + l_reg; }
};

}  // namespace tfopt
