// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/volume.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>

namespace tfopt {

namespace {

template <typename T>
T read_le(const unsigned char* bytes)
{
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* raw = reinterpret_cast<unsigned char*>(&value);
    std::reverse(raw, raw + sizeof(T));
  }
  return value;
}

}  // namespace

std::size_t dtype_size(DType dtype)
{
  switch (dtype) {
  case DType::UInt8:
    return 1;
  case DType::UInt16:
    return 2;
  case DType::Float32:
    return 4;
  }
  return 0;
}

std::string to_string(DType dtype)
{
  switch (dtype) {
  case DType::UInt8:
    return "uint8";
  case DType::UInt16:
    return "uint16";
  case DType::Float32:
    return "float32";
  }
  return "unknown";
}

DType parse_dtype(std::string_view name)
{
  if (name == "uint8")
    return DType::UInt8;
  if (name == "uint16")
    return DType::UInt16;
  if (name == "float32")
    return DType::Float32;
  throw ValidationError("dtype", "unsupported dtype '" + std::string(name) + "'");
}

std::size_t VolumeMeta::voxel_count() const
{
  return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
}

ScalarField::ScalarField(Dims dims, Vec3 spacing, std::vector<double> values)
    : dims_(dims), spacing_(spacing), values_(std::move(values))
{
  for (int d : dims_) {
    if (d <= 0)
      throw ValidationError("dims", "dimensions must be positive");
  }
  if (!(spacing_.x > 0.0 && spacing_.y > 0.0 && spacing_.z > 0.0))
    throw ValidationError("spacing", "spacing must be strictly positive");
  const std::size_t expected = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  if (values_.size() != expected) {
    throw ValidationError("values", "expected " + std::to_string(expected) + " values, got "
                                        + std::to_string(values_.size()));
  }
  auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  value_min_ = *lo;
  value_max_ = *hi;
  if (!std::isfinite(value_min_) || !std::isfinite(value_max_))
    throw FormatError("scalar field contains non-finite values");
}

void require_range(const ScalarField& field)
{
  if (field.is_constant())
    throw DegenerateInputError("scalar field is constant; a non-constant range is required");
}

Vec3 ScalarField::extent() const
{
  return {dims_[0] * spacing_.x, dims_[1] * spacing_.y, dims_[2] * spacing_.z};
}

double ScalarField::min_spacing() const
{
  return std::min({spacing_.x, spacing_.y, spacing_.z});
}

double ScalarField::sample(const Vec3& p) const
{
  const Vec3 ext = extent();
  if (!(p.x >= 0.0 && p.y >= 0.0 && p.z >= 0.0 && p.x <= ext.x && p.y <= ext.y && p.z <= ext.z))
    return value_min_;

  // continuous voxel-center coordinates
  const double gx = std::clamp(p.x / spacing_.x - 0.5, 0.0, double(dims_[0] - 1));
  const double gy = std::clamp(p.y / spacing_.y - 0.5, 0.0, double(dims_[1] - 1));
  const double gz = std::clamp(p.z / spacing_.z - 0.5, 0.0, double(dims_[2] - 1));

  const int x0 = std::min(static_cast<int>(gx), dims_[0] - 1);
  const int y0 = std::min(static_cast<int>(gy), dims_[1] - 1);
  const int z0 = std::min(static_cast<int>(gz), dims_[2] - 1);
  const int x1 = std::min(x0 + 1, dims_[0] - 1);
  const int y1 = std::min(y0 + 1, dims_[1] - 1);
  const int z1 = std::min(z0 + 1, dims_[2] - 1);
  const double fx = gx - x0;
  const double fy = gy - y0;
  const double fz = gz - z0;

  const double c00 = at(x0, y0, z0) * (1 - fx) + at(x1, y0, z0) * fx;
  const double c10 = at(x0, y1, z0) * (1 - fx) + at(x1, y1, z0) * fx;
  const double c01 = at(x0, y0, z1) * (1 - fx) + at(x1, y0, z1) * fx;
  const double c11 = at(x0, y1, z1) * (1 - fx) + at(x1, y1, z1) * fx;
  const double c0 = c00 * (1 - fy) + c10 * fy;
  const double c1 = c01 * (1 - fy) + c11 * fy;
  return c0 * (1 - fz) + c1 * fz;
}

ScalarField load_raw(const std::filesystem::path& path, const VolumeMeta& meta)
{
  for (int d : meta.dims) {
    if (d <= 0)
      throw ValidationError("dims", "dimensions must be positive");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("cannot open volume file " + path.string());
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (file_size != meta.payload_bytes()) {
    throw FormatError("volume file " + path.string() + " has " + std::to_string(file_size)
                      + " bytes, expected " + std::to_string(meta.payload_bytes()) + " for "
                      + std::to_string(meta.dims[0]) + "x" + std::to_string(meta.dims[1]) + "x"
                      + std::to_string(meta.dims[2]) + " " + to_string(meta.dtype));
  }
  std::vector<unsigned char> bytes(file_size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(file_size));
  if (!in)
    throw FormatError("short read from " + path.string());

  const std::size_t n = meta.voxel_count();
  std::vector<double> values(n);
  const unsigned char* src = bytes.data();
  switch (meta.dtype) {
  case DType::UInt8:
    for (std::size_t i = 0; i < n; ++i)
      values[i] = src[i];
    break;
  case DType::UInt16:
    for (std::size_t i = 0; i < n; ++i)
      values[i] = read_le<std::uint16_t>(src + 2 * i);
    break;
  case DType::Float32:
    for (std::size_t i = 0; i < n; ++i)
      values[i] = read_le<float>(src + 4 * i);
    break;
  }
  ScalarField field(meta.dims, meta.spacing, std::move(values));
  require_range(field);
  return field;
}

void save_raw_float32(const ScalarField& field, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot write " + path.string());
  for (double v : field.values()) {
    float f = static_cast<float>(v);
    unsigned char bytes[4];
    std::memcpy(bytes, &f, 4);
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(bytes, bytes + 4);
    out.write(reinterpret_cast<const char*>(bytes), 4);
  }
}

std::optional<VolumeMeta> parse_volume_filename(std::string_view filename)
{
  static const std::regex pattern(R"(^.*_(\d+)x(\d+)x(\d+)_(uint8|uint16|float32)\.raw$)");
  std::string name = std::filesystem::path(filename).filename().string();
  std::smatch match;
  if (!std::regex_match(name, match, pattern))
    return std::nullopt;
  VolumeMeta meta;
  meta.dims = {std::stoi(match[1]), std::stoi(match[2]), std::stoi(match[3])};
  meta.dtype = parse_dtype(match[4].str());
  return meta;
}

ScalarField downsample(const ScalarField& field, int factor)
{
  if (factor < 1)
    throw ValidationError("factor", "downsampling factor must be >= 1");
  if (factor == 1)
    return field;
  const Dims& in = field.dims();
  Dims out;
  for (int a = 0; a < 3; ++a)
    out[a] = (in[a] + factor - 1) / factor;

  std::vector<double> values(static_cast<std::size_t>(out[0]) * out[1] * out[2]);
  std::size_t idx = 0;
  for (int k = 0; k < out[2]; ++k) {
    for (int j = 0; j < out[1]; ++j) {
      for (int i = 0; i < out[0]; ++i) {
        double sum = 0.0;
        int count = 0;
        for (int z = k * factor; z < std::min((k + 1) * factor, in[2]); ++z)
          for (int y = j * factor; y < std::min((j + 1) * factor, in[1]); ++y)
            for (int x = i * factor; x < std::min((i + 1) * factor, in[0]); ++x) {
              sum += field.at(x, y, z);
              ++count;
            }
        values[idx++] = sum / count;
      }
    }
  }
  return ScalarField(out, field.spacing() * static_cast<double>(factor), std::move(values));
}

ScalarField crop(const ScalarField& field, const Dims& lo, const Dims& hi)
{
  const Dims& dims = field.dims();
  for (int a = 0; a < 3; ++a) {
    if (lo[a] < 0 || lo[a] >= hi[a] || hi[a] > dims[a])
      throw ValidationError("crop", "crop bounds out of range on axis " + std::to_string(a));
  }
  Dims out{hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]};
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(out[0]) * out[1] * out[2]);
  for (int k = lo[2]; k < hi[2]; ++k)
    for (int j = lo[1]; j < hi[1]; ++j)
      for (int i = lo[0]; i < hi[0]; ++i)
        values.push_back(field.at(i, j, k));
  return ScalarField(out, field.spacing(), std::move(values));
}

std::vector<std::size_t> histogram(const ScalarField& field, int bins)
{
  if (bins < 1)
    throw ValidationError("bins", "histogram needs at least one bin");
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  const double lo = field.value_min();
  const double range = field.value_max() - lo;
  for (double v : field.values()) {
    auto bin = range > 0.0 ? static_cast<long>((v - lo) / range * bins) : 0L;
    bin = std::clamp(bin, 0L, static_cast<long>(bins - 1));
    ++counts[static_cast<std::size_t>(bin)];
  }
  return counts;
}

}  // namespace tfopt
