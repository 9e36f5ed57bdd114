// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "tfopt/common.hpp"

namespace tfopt {

/// 8-bit RGB PNG; values are clamped to [0, 1] and rounded.
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Little-endian float32, H*W*3 values, row-major RGB.
void write_raw_image(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_raw_image(const std::filesystem::path& path, int width, int height);

}  // namespace tfopt
