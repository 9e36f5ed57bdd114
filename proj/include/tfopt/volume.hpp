// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tfopt/common.hpp"

namespace tfopt {

enum class DType { UInt8, UInt16, Float32 };

std::size_t dtype_size(DType dtype);
std::string to_string(DType dtype);
DType parse_dtype(std::string_view name);

using Dims = std::array<int, 3>;

struct VolumeMeta {
  DType dtype = DType::UInt8;
  Dims dims{0, 0, 0};
  Vec3 spacing{1.0, 1.0, 1.0};

  std::size_t voxel_count() const;
  std::size_t payload_bytes() const { return voxel_count() * dtype_size(dtype); }
};

/// Dense 3D grid of scalars, x fastest and z slowest.
///
/// World space: the grid occupies the box [0, dims * spacing]; voxel (i, j, k)
/// has its center at ((i + 0.5) sx, (j + 0.5) sy, (k + 0.5) sz). Immutable
/// once constructed.
class ScalarField {
 public:
  /// Throws ValidationError on bad dims/spacing/length and FormatError on
  /// non-finite values. Constant fields are allowed here; see require_range.
  ScalarField(Dims dims, Vec3 spacing, std::vector<double> values);

  const Dims& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  const std::vector<double>& values() const { return values_; }
  double value_min() const { return value_min_; }
  double value_max() const { return value_max_; }
  bool is_constant() const { return value_min_ == value_max_; }
  std::size_t voxel_count() const { return values_.size(); }

  double at(int i, int j, int k) const
  {
    return values_[(static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i];
  }

  Vec3 extent() const;
  Vec3 center() const { return extent() * 0.5; }
  /// Half of the bounding-box diagonal.
  double bounding_radius() const { return 0.5 * length(extent()); }
  double min_spacing() const;

  /// Trilinear interpolation between voxel centers, clamped to the edge
  /// voxels inside the box. Points outside the box return value_min().
  double sample(const Vec3& p) const;

 private:
  Dims dims_;
  Vec3 spacing_;
  std::vector<double> values_;
  double value_min_ = 0.0;
  double value_max_ = 0.0;
};

/// Throws DegenerateInputError for a constant field, which has no TF domain.
void require_range(const ScalarField& field);

/// Reads a raw little-endian payload. Integer types keep their raw values.
/// Throws FormatError on a size mismatch and DegenerateInputError if constant.
ScalarField load_raw(const std::filesystem::path& path, const VolumeMeta& meta);

/// Writes values as little-endian float32.
void save_raw_float32(const ScalarField& field, const std::filesystem::path& path);

/// Parses the Open SciVis naming convention `name_XxYxZ_dtype.raw`.
std::optional<VolumeMeta> parse_volume_filename(std::string_view filename);

/// Block-average pooling over factor^3 blocks. Partial blocks at the far
/// boundary average only the voxels present.
ScalarField downsample(const ScalarField& field, int factor);

/// Extracts voxels [lo, hi) along each axis.
ScalarField crop(const ScalarField& field, const Dims& lo, const Dims& hi);

/// Uniform bins over [value_min, value_max]; value_max lands in the last bin.
std::vector<std::size_t> histogram(const ScalarField& field, int bins);

}  // namespace tfopt
