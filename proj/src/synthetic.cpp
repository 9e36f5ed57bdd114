// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/synthetic.hpp"

#include <cmath>
#include <cstdint>

namespace tfopt {

namespace {

double gaussian(double x, double mu, double width)
{
  const double z = (x - mu) / width;
  return std::exp(-z * z);
}

// Deterministic per-voxel noise in [0, 1).
double hash_noise(int i, int j, int k)
{
  std::uint64_t h = static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL
                    ^ static_cast<std::uint64_t>(j) * 0xc2b2ae3d27d4eb4fULL
                    ^ static_cast<std::uint64_t>(k) * 0x165667b19e3779f9ULL;
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53);
}

}  // namespace

ScalarField make_two_shell_volume(int n)
{
  std::vector<double> values(static_cast<std::size_t>(n) * n * n);
  const double half = 0.5 * n;
  std::size_t idx = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double dx = (i + 0.5 - half) / half;
        const double dy = (j + 0.5 - half) / half;
        const double dz = (k + 0.5 - half) / half;
        const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
        values[idx++] = 100.0 * gaussian(r, 0.75, 0.1) + 200.0 * gaussian(r, 0.35, 0.1);
      }
  return ScalarField({n, n, n}, {1.0, 1.0, 1.0}, std::move(values));
}

TFRealized two_shell_reference_tf(const ScalarField& field)
{
  TFRealized tf;
  // breakpoints as fractions of the range so small grids (lower peaks) work
  const double lo = field.value_min();
  const double span = field.value_max() - lo;
  tf.positions = {lo, lo + 0.3 * span, lo + 0.5 * span, lo + 0.7 * span, lo + 0.8 * span,
                  field.value_max()};
  tf.density = {0.0, 0.0, 0.6, 0.0, 0.0, 1.5};
  tf.color = {Rgb{0.5, 0.5, 0.5}, Rgb{0.9, 0.35, 0.2}, Rgb{0.9, 0.35, 0.2},
              Rgb{0.9, 0.35, 0.2}, Rgb{0.2, 0.45, 0.9}, Rgb{0.2, 0.45, 0.9}};
  tf.validate();
  return tf;
}

ScalarField make_tree_volume(int n)
{
  std::vector<double> values(static_cast<std::size_t>(n) * n * n, 0.0);
  std::size_t idx = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i, ++idx) {
        const double x = (i + 0.5) / n - 0.5;
        const double y = (j + 0.5) / n - 0.5;
        const double z = (k + 0.5) / n;
        const double axis = std::sqrt(x * x + y * y);
        double v = 0.0;

        if (z >= 0.05 && z <= 0.25 && axis <= 0.3) {
          // pot wall and floor, soil inside
          v = (axis >= 0.26 || z <= 0.08) ? 230.0 : (z <= 0.22 ? 140.0 : 0.0);
        }
        const double trunk_radius = 0.035 + 0.015 * std::sin(14.0 * z);
        if (z > 0.22 && z <= 0.62 && std::hypot(x - 0.04 * std::sin(6.0 * z), y) <= trunk_radius)
          v = 175.0;

        const double cx = x;
        const double cy = y;
        const double cz = z - 0.7;
        const double crown = std::sqrt(cx * cx + cy * cy + 1.6 * cz * cz);
        if (v == 0.0 && crown <= 0.26) {
          const double noise = hash_noise(i / 2, j / 2, k / 2);
          if (noise > 0.55)
            v = std::round(60.0 + 50.0 * noise);
        }
        values[idx] = v;
      }
  return ScalarField({n, n, n}, {1.0, 1.0, 1.0}, std::move(values));
}

}  // namespace tfopt
