// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "tfopt/common.hpp"
#include "tfopt/renderer.hpp"

namespace tfopt {

using Rng = std::mt19937_64;

inline constexpr double kMaxPitch = kPi / 14.0;

/// Child seed for (global seed, step, view); stable across platforms.
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t step, std::uint64_t view);

enum class BackgroundKind { ConstantGray, Checkerboard, Noise, Fourier };

std::string to_string(BackgroundKind kind);

struct BackgroundSample {
  BackgroundKind kind = BackgroundKind::ConstantGray;
  RgbImage image;
};

RgbImage constant_background(int width, int height, double shade);
RgbImage checkerboard_background(int width, int height, int cell, const Rgb& a, const Rgb& b);
RgbImage noise_background(Rng& rng, int width, int height);
/// Four random low-frequency sinusoids per channel, min-max normalized.
RgbImage fourier_background(Rng& rng, int width, int height);

/// Gray shade in [0, 1] when `augmented` is false; otherwise one of
/// checkerboard (cells of 4, 8 or 16 px), noise or Fourier, uniformly.
BackgroundSample sample_background(bool augmented, Rng& rng, int width, int height);

/// yaw ~ U[0, 2 pi), pitch ~ U[-pi/14, pi/14], distance ~ U[2r, 4r].
CameraPose sample_pose(Rng& rng, double radius);

/// Fixed initialization view: yaw 0, pitch 0, distance 3r.
CameraPose initial_view(double radius);

}  // namespace tfopt
