// Copyright 2026 The Lightfield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LIGHTFIELD_PNG_HPP
#define LIGHTFIELD_PNG_HPP

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include <png.h>

#include "lightfield/error.hpp"

namespace lightfield {

/// 8-bit interleaved raster with 3 (RGB) or 4 (RGBA) channels, row-major, top row first.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, int ch) : width(w), height(h), channels(ch), pixels(w * h * ch, 0) {}

  std::uint8_t* at(std::size_t x, std::size_t y) { return &pixels[(y * width + x) * channels]; }
  const std::uint8_t* at(std::size_t x, std::size_t y) const { return &pixels[(y * width + x) * channels]; }
};

namespace detail {

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

inline void png_flush_noop(png_structp) {}

struct PngReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

inline void png_read_from_span(png_structp png, png_bytep data, png_size_t length) {
  auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(data, cur->bytes.data() + cur->offset, length);
  cur->offset += length;
}

[[noreturn]] inline void png_throw(png_structp, png_const_charp msg) {
  throw Error(ErrorCode::Io, std::string("libpng: ") + msg);
}

}  // namespace detail

/// Encodes with fixed compression settings so equal images give equal bytes.
inline std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.channels != 3 && img.channels != 4) throw Error(ErrorCode::InvalidArgument, "PNG needs 3 or 4 channels");
  if (img.width == 0 || img.height == 0) throw Error(ErrorCode::InvalidArgument, "empty image");
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_throw, nullptr);
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, detail::png_write_to_vector, detail::png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 img.channels == 4 ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    const std::size_t stride = img.width * static_cast<std::size_t>(img.channels);
    for (std::size_t y = 0; y < img.height; ++y) {
      png_write_row(png, const_cast<png_bytep>(img.pixels.data() + y * stride));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

inline Image decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::Io, "not a PNG stream");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_throw, nullptr);
  png_infop info = png_create_info_struct(png);
  detail::PngReadCursor cursor{bytes, 0};
  Image img;
  try {
    png_set_read_fn(png, &cursor, detail::png_read_from_span);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_read_update_info(png, info);
    const int ch = png_get_channels(png, info);
    if (ch != 3 && ch != 4) throw Error(ErrorCode::Io, "unsupported PNG channel count");
    img = Image(png_get_image_width(png, info), png_get_image_height(png, info), ch);
    const std::size_t stride = img.width * static_cast<std::size_t>(ch);
    for (std::size_t y = 0; y < img.height; ++y) png_read_row(png, img.pixels.data() + y * stride, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace lightfield

#endif  // LIGHTFIELD_PNG_HPP
