// Copyright 2026 The ladc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "ladc/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "ladc/error.hpp"

namespace ladc {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decoded 8-bit pixels with `channels` samples per pixel.
struct RawImage {
  std::size_t height = 0, width = 0, channels = 0;
  std::vector<std::uint8_t> pixels;
};

RawImage decode(const std::filesystem::path& path, bool grey) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(msg.find("open") != std::string::npos ? ErrorCode::kIo : ErrorCode::kImageDecode,
         path.string() + ": " + msg);
  }
  image.format = grey ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  RawImage img;
  img.height = image.height;
  img.width = image.width;
  img.channels = grey ? 1 : 3;
  img.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::kImageDecode, path.string() + ": " + msg);
  }
  return img;
}

thread_local char png_error_message[256];

void png_error_handler(png_structp png, png_const_charp msg) {
  std::snprintf(png_error_message, sizeof png_error_message, "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

void encode(const std::filesystem::path& path, std::size_t height, std::size_t width,
            int color_type, int bit_depth, const std::vector<std::vector<std::uint8_t>>& rows) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_handler, png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorCode::kIo, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, path.string() + ": " + png_error_message);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (const auto& row : rows) png_write_row(png, row.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(fp.get()) != 0) fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * v), 0L, 255L));
}

}  // namespace

Tensor read_png_rgb(const std::filesystem::path& path) {
  const RawImage raw = decode(path, false);
  Tensor t({raw.height, raw.width, 3});
  auto out = t.mutable_data();
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) {
    out[i] = static_cast<float>(raw.pixels[i]) / 255.0f;
  }
  return t;
}

Tensor read_mask_png(const std::filesystem::path& path) {
  const RawImage raw = decode(path, true);
  Tensor t({raw.height, raw.width, 1});
  auto out = t.mutable_data();
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) out[i] = raw.pixels[i] != 0 ? 1.0f : 0.0f;
  return t;
}

void write_png(const Tensor& image, const std::filesystem::path& path) {
  if (image.rank() != 3 || (image.channels() != 3 && image.channels() != 1)) {
    fail(ErrorCode::kShapeMismatch, "write_png: expected H x W x 3 or H x W x 1, got " +
                                        image.shape_string());
  }
  const std::size_t h = image.height(), w = image.width(), c = image.channels();
  std::vector<std::vector<std::uint8_t>> rows(h, std::vector<std::uint8_t>(w * c));
  const auto d = image.data();
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t i = 0; i < w * c; ++i) rows[r][i] = to_byte(d[r * w * c + i]);
  }
  encode(path, h, w, c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, 8, rows);
}

void write_mask_png(const Tensor& mask, const std::filesystem::path& path) {
  if (mask.rank() != 3 || mask.channels() != 1) {
    fail(ErrorCode::kShapeMismatch, "write_mask_png: expected H x W x 1, got " +
                                        mask.shape_string());
  }
  const std::size_t h = mask.height(), w = mask.width();
  std::vector<std::vector<std::uint8_t>> rows(h, std::vector<std::uint8_t>((w + 7) / 8, 0));
  const auto d = mask.data();
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (d[r * w + c] != 0.0f) rows[r][c / 8] |= static_cast<std::uint8_t>(0x80 >> (c % 8));
    }
  }
  encode(path, h, w, PNG_COLOR_TYPE_GRAY, 1, rows);
}

}  // namespace ladc
