// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/image_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>

#include <png.h>

#include "tfopt/protocol.hpp"

namespace tfopt {

void write_png(const std::filesystem::path& path, const RgbImage& image)
{
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file)
    throw Error("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng failed writing " + path.string());
  }

  std::vector<png_byte> row(static_cast<std::size_t>(image.width) * 3);
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(image.at(x, y, c), 0.0, 1.0);
        row[static_cast<std::size_t>(x) * 3 + c] = static_cast<png_byte>(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_raw_image(const std::filesystem::path& path, const RgbImage& image)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot write " + path.string());
  const std::string bytes = pack_float32(encode_floats(image.pixels));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

RgbImage read_raw_image(const std::filesystem::path& path, int width, int height)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  RgbImage image(width, height);
  if (bytes.size() != image.pixels.size() * 4)
    throw FormatError("raw image " + path.string() + " has " + std::to_string(bytes.size())
                      + " bytes, expected " + std::to_string(image.pixels.size() * 4));
  const std::vector<float> values = unpack_float32(bytes);
  std::copy(values.begin(), values.end(), image.pixels.begin());
  return image;
}

}  // namespace tfopt
