// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "tfopt/common.hpp"
#include "tfopt/transfer_function.hpp"
#include "tfopt/volume.hpp"

namespace tfopt {

inline constexpr double kPi = 3.14159265358979323846;

/// Orbit camera looking at the volume center with world up +z and no roll.
/// yaw rotates about +z starting from +x; pitch lifts toward +z.
struct CameraPose {
  double yaw = 0.0;
  double pitch = 0.0;
  double distance = 1.0;
};

Vec3 camera_position(const ScalarField& field, const CameraPose& pose);

struct RenderConfig {
  int width = 224;
  int height = 224;
  /// World units per step; <= 0 selects half the smallest voxel spacing.
  double step_size = 0.0;
  int max_steps = 4096;
  double fov_y_degrees = 60.0;

  double resolved_step(const ScalarField& field) const;
  void validate() const;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;
  double t_entry = 0.0;
  double t_exit = 0.0;
  bool hit = false;
};

/// One pinhole ray per pixel (row-major), clipped to the volume box.
std::vector<Ray> generate_rays(const ScalarField& field, const CameraPose& pose,
                               const RenderConfig& config);

/// Per-ray sampled scalars kept from the forward pass. Ray r owns
/// scalars[offsets[r] .. offsets[r + 1]); every step has length `step`
/// except the last one, which has length last_step[r].
struct MarchCache {
  double step = 0.0;
  int width = 0;
  int height = 0;
  std::vector<std::size_t> offsets;
  std::vector<double> scalars;
  std::vector<double> last_step;
  std::vector<std::uint8_t> hit;

  bool empty() const { return offsets.empty(); }
};

struct RenderOutput {
  RgbImage color;              // C
  ScalarImage transmittance;   // T_N
  RgbImage image;              // I = C + T_N B
  MarchCache cache;
  std::size_t hit_rays = 0;

  /// Mean T_N over rays that intersect the volume box (1 if none do).
  double mean_hit_transmittance() const;
};

/// Absorption-emission ray marching with midpoint samples
/// t_n = t_entry + (n - 1/2) delta and a shortened final step. Compositing
/// weights step n by the transmittance in front of it; T_N is the product
/// of all per-step attenuations.
RenderOutput render(const ScalarField& field, const TFRealized& tf, const CameraPose& pose,
                    const RenderConfig& config, const RgbImage& background);

RenderOutput render(const ScalarField& field, const TFParams& params, const CameraPose& pose,
                    const RenderConfig& config, const RgbImage& background);

/// Reverse pass in realized-TF space. dloss_dtransmittance may be null; when
/// given it is added to the dL/dT_N flowing back from the composite.
RealizedGradient render_adjoint_realized(const TFRealized& tf, const RenderOutput& forward,
                                         const RgbImage& background,
                                         const RgbImage& dloss_dimage,
                                         const ScalarImage* dloss_dtransmittance = nullptr);

/// Full reverse pass to the raw parameters (flat TFParams layout).
/// Throws Error if `forward` carries no march cache.
std::vector<double> render_adjoint(const ScalarField& field, const TFParams& params,
                                   const RenderOutput& forward, const RgbImage& background,
                                   const RgbImage& dloss_dimage,
                                   const ScalarImage* dloss_dtransmittance = nullptr);

}  // namespace tfopt
