// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "tfopt/augmentation.hpp"
#include "tfopt/renderer.hpp"
#include "tfopt/transfer_function.hpp"
#include "tfopt/volume.hpp"

namespace tfopt {

struct InitOptions {
  double tolerance = 0.01;
  int max_iterations = 40;
  /// Added to every histogram count before inverting.
  double histogram_eps = 1.0;
};

struct InitResult {
  TFParams params;
  double mean_transmittance = 1.0;
  int iterations = 0;
  bool converged = false;
};

/// Per-control-point seed weights proportional to 1 / (count + eps), scaled
/// so the largest is 1. One histogram bin per control point.
std::vector<double> inverse_histogram_weights(const ScalarField& field, std::size_t control_points,
                                              double eps);

/// Initial parameters: uniform control points, colors uniform in [0.3, 0.7],
/// and densities w_k * s where the scale s is tuned until the mean T_N over
/// rays hitting the volume at `view` is within tolerance of `target`.
///
/// The scale is refined by Gauss-Newton steps on (ln mean T_N - ln target)^2
/// in log s, with the derivative taken from the adjoint renderer. Returns the
/// best iterate when the tolerance is not reached (converged == false).
InitResult init_params(const ScalarField& field, std::size_t control_points, Rng& rng,
                       double target, const CameraPose& view, const RenderConfig& config,
                       const InitOptions& options = {});

}  // namespace tfopt
