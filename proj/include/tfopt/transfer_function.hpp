// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "tfopt/common.hpp"

namespace tfopt {

inline constexpr double kMaxDensity = 255.0;

/// Unconstrained trainable parameters of a piecewise-linear density/color TF
/// with M control points.
///
/// Flattened layout used by every gradient vector in the library:
/// [raw_spacings (M-1) | raw_density (M) | raw_color (3M, RGB interleaved)].
struct TFParams {
  std::vector<double> raw_spacings;
  std::vector<double> raw_density;
  std::vector<Rgb> raw_color;

  /// M control points with equal spacings, zero density logits and gray color.
  static TFParams uniform(std::size_t control_points);

  std::size_t control_points() const { return raw_density.size(); }
  std::size_t size() const { return 5 * control_points() - 1; }

  std::size_t density_offset() const { return control_points() - 1; }
  std::size_t color_offset() const { return 2 * control_points() - 1; }

  std::vector<double> flatten() const;
  static TFParams unflatten(std::span<const double> flat, std::size_t control_points);

  /// Throws ValidationError if M < 2, the array sizes disagree, or a value is
  /// not finite.
  void validate() const;
};

/// Control points after the parameter transform.
struct TFRealized {
  std::vector<double> positions;
  std::vector<double> density;
  std::vector<Rgb> color;

  std::size_t control_points() const { return positions.size(); }
  double value_min() const { return positions.front(); }
  double value_max() const { return positions.back(); }

  /// Throws FormatError unless sizes agree, M >= 2 and positions strictly increase.
  void validate() const;
};

/// Gradient of a scalar loss with respect to the realized control points.
struct RealizedGradient {
  std::vector<double> positions;
  std::vector<double> density;
  std::vector<Rgb> color;

  explicit RealizedGradient(std::size_t control_points = 0)
      : positions(control_points, 0.0), density(control_points, 0.0),
        color(control_points, Rgb{0.0, 0.0, 0.0})
  {
  }

  RealizedGradient& operator+=(const RealizedGradient& o);
};

double softplus(double x);
double sigmoid(double x);

/// softplus -> cumulative sum -> affine map onto [value_min, value_max] for
/// positions; density = 255 (tanh + 1) / 2; color = (tanh + 1) / 2.
TFRealized realize(const TFParams& params, double value_min, double value_max);

struct TFSample {
  double density = 0.0;
  Rgb color{0.0, 0.0, 0.0};
};

/// Piecewise-linear lookup with local derivatives of the interpolation weight.
///
/// The bracketing segment is [positions[left], positions[left + 1]], chosen
/// so that positions[left] <= s < positions[left + 1] (the right-hand segment
/// wins at a control point; s == value_max uses the last segment).
struct TFSegmentSample {
  TFSample value;
  std::size_t left = 0;
  double weight = 0.0;
  double dweight_dleft = 0.0;
  double dweight_dright = 0.0;
};

TFSegmentSample eval_segment(const TFRealized& tf, double s);

/// Scalars are clamped to [value_min, value_max] before lookup.
TFSample eval(const TFRealized& tf, double s);

/// Adds the contribution of dL/dsigma and dL/dcolor at scalar s into a
/// realized-space gradient.
void accumulate_sample_gradient(const TFSegmentSample& seg, const TFRealized& tf,
                                double dloss_ddensity, const Rgb& dloss_dcolor,
                                RealizedGradient& grad);

/// Chains a realized-space gradient through the parameter transform.
/// Returns a flat gradient in TFParams layout.
std::vector<double> backprop_to_params(const TFParams& params, double value_min, double value_max,
                                       const RealizedGradient& grad);

struct TFJacobian {
  TFSample value;
  std::vector<double> ddensity;            // d sigma / d phi, flat layout
  std::array<std::vector<double>, 3> dcolor;  // d c_ch / d phi, flat layout
};

/// Value and full Jacobian with respect to every raw parameter, including
/// the spacing logits that move control-point positions.
TFJacobian eval_with_jacobian(const TFParams& params, double value_min, double value_max,
                              double s);

// Text format:
//   line 1: "M value_min value_max"
//   then M lines: "position density r g b"
void write_tf(std::ostream& out, const TFRealized& tf);
TFRealized read_tf(std::istream& in);
void export_tf(const TFRealized& tf, const std::filesystem::path& path);
TFRealized import_tf(const std::filesystem::path& path);

/// Inverse of the density/color maps, clamped away from the saturated ends.
double density_to_raw(double density);
double color_to_raw(double color);

}  // namespace tfopt
