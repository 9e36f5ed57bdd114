// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/augmentation.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace tfopt {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform(Rng& rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Rgb random_color(Rng& rng)
{
  return {uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t step, std::uint64_t view)
{
  return splitmix64(splitmix64(splitmix64(global_seed) ^ step) ^ view);
}

std::string to_string(BackgroundKind kind)
{
  switch (kind) {
  case BackgroundKind::ConstantGray:
    return "gray";
  case BackgroundKind::Checkerboard:
    return "checkerboard";
  case BackgroundKind::Noise:
    return "noise";
  case BackgroundKind::Fourier:
    return "fourier";
  }
  return "unknown";
}

RgbImage constant_background(int width, int height, double shade)
{
  return RgbImage(width, height, std::clamp(shade, 0.0, 1.0));
}

RgbImage checkerboard_background(int width, int height, int cell, const Rgb& a, const Rgb& b)
{
  RgbImage img(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Rgb& c = ((x / cell + y / cell) % 2 == 0) ? a : b;
      for (int ch = 0; ch < 3; ++ch)
        img.at(x, y, ch) = std::clamp(c[ch], 0.0, 1.0);
    }
  return img;
}

RgbImage noise_background(Rng& rng, int width, int height)
{
  RgbImage img(width, height);
  for (double& v : img.pixels)
    v = uniform(rng, 0.0, 1.0);
  return img;
}

RgbImage fourier_background(Rng& rng, int width, int height)
{
  constexpr int kWaves = 4;
  constexpr double kMaxCycles = 4.0;
  RgbImage img(width, height);
  for (int ch = 0; ch < 3; ++ch) {
    struct Wave {
      double fx, fy, phase, amplitude;
    };
    std::array<Wave, kWaves> waves;
    for (Wave& w : waves) {
      w.fx = uniform(rng, -kMaxCycles, kMaxCycles);
      w.fy = uniform(rng, -kMaxCycles, kMaxCycles);
      w.phase = uniform(rng, 0.0, 2.0 * kPi);
      w.amplitude = uniform(rng, 0.0, 1.0);
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double u = (x + 0.5) / width;
        const double v = (y + 0.5) / height;
        double sum = 0.0;
        for (const Wave& w : waves)
          sum += w.amplitude * std::sin(2.0 * kPi * (w.fx * u + w.fy * v) + w.phase);
        img.at(x, y, ch) = sum;
        lo = std::min(lo, sum);
        hi = std::max(hi, sum);
      }
    const double span = hi - lo;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double& v = img.at(x, y, ch);
        v = span > 1e-12 ? std::clamp((v - lo) / span, 0.0, 1.0) : 0.5;
      }
  }
  return img;
}

BackgroundSample sample_background(bool augmented, Rng& rng, int width, int height)
{
  BackgroundSample out;
  if (!augmented) {
    out.kind = BackgroundKind::ConstantGray;
    out.image = constant_background(width, height, uniform(rng, 0.0, 1.0));
    return out;
  }
  const int pick = std::uniform_int_distribution<int>(0, 2)(rng);
  switch (pick) {
  case 0: {
    static constexpr std::array<int, 3> kCells{4, 8, 16};
    const int cell = kCells[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
    const Rgb a = random_color(rng);
    const Rgb b = random_color(rng);
    out.kind = BackgroundKind::Checkerboard;
    out.image = checkerboard_background(width, height, cell, a, b);
    break;
  }
  case 1:
    out.kind = BackgroundKind::Noise;
    out.image = noise_background(rng, width, height);
    break;
  default:
    out.kind = BackgroundKind::Fourier;
    out.image = fourier_background(rng, width, height);
    break;
  }
  return out;
}

CameraPose sample_pose(Rng& rng, double radius)
{
  CameraPose pose;
  pose.yaw = uniform(rng, 0.0, 2.0 * kPi);
  pose.pitch = uniform(rng, -kMaxPitch, kMaxPitch);
  pose.distance = uniform(rng, 2.0 * radius, 4.0 * radius);
  return pose;
}

CameraPose initial_view(double radius)
{
  return CameraPose{0.0, 0.0, 3.0 * radius};
}

}  // namespace tfopt
