// Copyright 2026 The VeriFrame Authors.
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

/**
 * @file
 * @brief 8-bit RGB raster, bilinear resampling and PNG/JPEG codecs
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace veriframe {

/// Interleaved 8-bit RGB image, row-major, no padding between rows.
class Image {
 public:
  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0);
  Image(int width, int height, std::vector<std::uint8_t> rgb);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] bool empty() const { return width_ == 0 || height_ == 0; }
  [[nodiscard]] int longest_side() const { return std::max(width_, height_); }

  [[nodiscard]] std::uint8_t* pixel(int x, int y) {
    return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * 3;
  }
  [[nodiscard]] const std::uint8_t* pixel(int x, int y) const {
    return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * 3;
  }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = pixel(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  [[nodiscard]] std::span<const std::uint8_t> bytes() const { return data_; }
  [[nodiscard]] std::span<std::uint8_t> bytes() { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Integer pixel rectangle, half-open: [x, x+w) x [y, y+h).
struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Bilinear resampling with half-pixel centres. Same-size resampling is an
/// exact copy.
Image resize_bilinear(const Image& src, int out_width, int out_height);

/// Bilinear resampling of a sub-rectangle of `src` to out_width x out_height.
Image resample_region(const Image& src, const PixelRect& region, int out_width,
                      int out_height);

/// Bilinear resampling straight to unit-range doubles (value / 255), laid out
/// as out_height x out_width x 3. Skips the intermediate 8-bit rounding.
std::vector<double> resize_to_unit(const Image& src, int out_width,
                                   int out_height);

Image flip_horizontal(const Image& src);

/// Decodes PNG, JPEG or BMP bytes. Throws DecodeError.
Image decode_image(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Image& image);

Image read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

/// True when the leading bytes carry a PNG, JPEG or BMP signature.
bool looks_like_image(std::span<const std::uint8_t> bytes);

}  // namespace veriframe
