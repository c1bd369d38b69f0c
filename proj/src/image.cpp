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

#include "veriframe/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "veriframe/error.hpp"

namespace veriframe {

Image::Image(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw InvalidArgument("image dimensions must be non-negative");
  }
  data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

Image::Image(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), data_(std::move(rgb)) {
  if (width < 0 || height < 0 ||
      data_.size() != static_cast<std::size_t>(width) * height * 3) {
    throw InvalidArgument("pixel buffer does not match image dimensions");
  }
}

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

// Source taps for one output coordinate along an axis of `extent` source
// pixels starting at `offset`.
std::vector<Tap> make_taps(int offset, int extent, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(extent) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(extent - 1));
    int lo = static_cast<int>(std::floor(src));
    int hi = std::min(lo + 1, extent - 1);
    taps[static_cast<std::size_t>(i)] = {offset + lo, offset + hi, src - lo};
  }
  return taps;
}

template <typename Emit>
void bilinear(const Image& src, const PixelRect& region, int out_width,
              int out_height, Emit&& emit) {
  if (src.empty()) throw InvalidArgument("cannot resample an empty image");
  if (out_width < 1 || out_height < 1) {
    throw InvalidArgument("output size must be positive");
  }
  if (region.w < 1 || region.h < 1 || region.x < 0 || region.y < 0 ||
      region.x + region.w > src.width() || region.y + region.h > src.height()) {
    throw InvalidArgument("resample region outside image");
  }
  const auto xs = make_taps(region.x, region.w, out_width);
  const auto ys = make_taps(region.y, region.h, out_height);
  for (int oy = 0; oy < out_height; ++oy) {
    const Tap& ty = ys[static_cast<std::size_t>(oy)];
    for (int ox = 0; ox < out_width; ++ox) {
      const Tap& tx = xs[static_cast<std::size_t>(ox)];
      const auto* p00 = src.pixel(tx.lo, ty.lo);
      const auto* p01 = src.pixel(tx.hi, ty.lo);
      const auto* p10 = src.pixel(tx.lo, ty.hi);
      const auto* p11 = src.pixel(tx.hi, ty.hi);
      for (int c = 0; c < 3; ++c) {
        // a + (b - a) * f keeps uniform neighbourhoods exact.
        double top = p00[c] + (p01[c] - static_cast<double>(p00[c])) * tx.frac;
        double bottom =
            p10[c] + (p11[c] - static_cast<double>(p10[c])) * tx.frac;
        emit(ox, oy, c, top + (bottom - top) * ty.frac);
      }
    }
  }
}

}  // namespace

Image resample_region(const Image& src, const PixelRect& region, int out_width,
                      int out_height) {
  Image out(out_width, out_height);
  bilinear(src, region, out_width, out_height,
           [&](int x, int y, int c, double v) {
             out.pixel(x, y)[c] =
                 static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
           });
  return out;
}

Image resize_bilinear(const Image& src, int out_width, int out_height) {
  return resample_region(src, {0, 0, src.width(), src.height()}, out_width,
                         out_height);
}

std::vector<double> resize_to_unit(const Image& src, int out_width,
                                   int out_height) {
  std::vector<double> out(static_cast<std::size_t>(out_width) * out_height * 3);
  bilinear(src, {0, 0, src.width(), src.height()}, out_width, out_height,
           [&](int x, int y, int c, double v) {
             out[(static_cast<std::size_t>(y) * out_width + x) * 3 + c] =
                 v / 255.0;
           });
  return out;
}

Image flip_horizontal(const Image& src) {
  Image out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const auto* p = src.pixel(src.width() - 1 - x, y);
      out.set(x, y, p[0], p[1], p[2]);
    }
  }
  return out;
}

namespace {

Image from_mat(const cv::Mat& bgr) {
  Image out(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      out.set(x, y, row[x][2], row[x][1], row[x][0]);
    }
  }
  return out;
}

cv::Mat to_mat(const Image& image) {
  cv::Mat bgr(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      const auto* p = image.pixel(x, y);
      row[x] = cv::Vec3b(p[2], p[1], p[0]);
    }
  }
  return bgr;
}

}  // namespace

bool looks_like_image(std::span<const std::uint8_t> bytes) {
  auto starts = [&](std::initializer_list<std::uint8_t> sig) {
    return bytes.size() >= sig.size() &&
           std::equal(sig.begin(), sig.end(), bytes.begin());
  };
  return starts({0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A}) ||
         starts({0xFF, 0xD8, 0xFF}) || starts({'B', 'M'});
}

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (!looks_like_image(bytes)) {
    throw DecodeError("unrecognised image signature");
  }
  cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
              const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat decoded;
  try {
    decoded = cv::imdecode(raw, cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw DecodeError(std::string("image decode failed: ") + e.what());
  }
  if (decoded.empty()) throw DecodeError("image decode failed");
  return from_mat(decoded);
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.empty()) throw InvalidArgument("cannot encode an empty image");
  std::vector<std::uint8_t> out;
  cv::imencode(".png", to_mat(image), out, {cv::IMWRITE_PNG_COMPRESSION, 3});
  return out;
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const Image& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace veriframe
