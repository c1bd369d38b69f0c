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

#include "veriframe/faces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>

#include "veriframe/error.hpp"

namespace veriframe {

double scale_factor(int longest_side_px) {
  if (longest_side_px < 1) {
    throw InvalidArgument("image side must be positive, got " +
                          std::to_string(longest_side_px));
  }
  if (longest_side_px < 100) return 2.0;
  if (longest_side_px <= 1000) return 1.0;
  if (longest_side_px <= 1900) return 0.5;
  return 0.33;
}

std::vector<FaceBox> StubMarkerDetector::detect(const Image& image) const {
  const int w = image.width();
  const int h = image.height();
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto* p = image.pixel(x, y);
      int d = std::abs(p[0] - kMarkerColor[0]) + std::abs(p[1] - kMarkerColor[1]) +
              std::abs(p[2] - kMarkerColor[2]);
      mask[static_cast<std::size_t>(y) * w + x] = d < kColorTolerance ? 1 : 0;
    }
  }
  auto at = [&](int x, int y) -> std::uint8_t& {
    return mask[static_cast<std::size_t>(y) * w + x];
  };

  std::vector<FaceBox> boxes;
  std::vector<std::pair<int, int>> stack;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      if (at(sx, sy) != 1) continue;
      int x0 = sx, x1 = sx, y0 = sy, y1 = sy;
      stack.assign(1, {sx, sy});
      at(sx, sy) = 2;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        x0 = std::min(x0, cx);
        x1 = std::max(x1, cx);
        y0 = std::min(y0, cy);
        y1 = std::max(y1, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (at(nx, ny) == 1) {
              at(nx, ny) = 2;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      const int bw = x1 - x0 + 1;
      const int bh = y1 - y0 + 1;
      if (bw < kMinSide || bh < kMinSide) continue;
      int covered = 0;
      int perimeter = 0;
      auto visit = [&](int x, int y) {
        ++perimeter;
        if (at(x, y) != 0) ++covered;
      };
      for (int x = x0; x <= x1; ++x) {
        visit(x, y0);
        visit(x, y1);
      }
      for (int y = y0 + 1; y < y1; ++y) {
        visit(x0, y);
        visit(x1, y);
      }
      double confidence = static_cast<double>(covered) / perimeter;
      if (confidence < kMinConfidence) continue;
      boxes.push_back({x0, y0, bw, bh, confidence, 1.0});
    }
  }
  return boxes;
}

std::vector<FaceBox> detect_faces(const Image& image,
                                  const DetectorBackend& backend) {
  if (image.empty()) throw InvalidArgument("cannot detect faces in an empty image");
  const double scale = scale_factor(image.longest_side());

  Image scaled;
  const Image* input = &image;
  if (scale != 1.0) {
    int sw = std::max(1, static_cast<int>(std::lround(image.width() * scale)));
    int sh = std::max(1, static_cast<int>(std::lround(image.height() * scale)));
    scaled = resize_bilinear(image, sw, sh);
    input = &scaled;
  }
  // Map back with the realised per-axis ratio so rounding of the rescaled
  // size does not drift box coordinates.
  const double rx = static_cast<double>(image.width()) / input->width();
  const double ry = static_cast<double>(image.height()) / input->height();

  std::vector<FaceBox> raw;
  try {
    raw = backend.detect(*input);
  } catch (const DetectorError&) {
    throw;
  } catch (const std::exception& e) {
    throw DetectorError(backend.name(), e.what());
  }

  std::vector<FaceBox> out;
  out.reserve(raw.size());
  for (const auto& b : raw) {
    long x0 = std::lround(b.x * rx);
    long y0 = std::lround(b.y * ry);
    long x1 = std::lround((b.x + b.w) * rx);
    long y1 = std::lround((b.y + b.h) * ry);
    x0 = std::clamp<long>(x0, 0, image.width());
    x1 = std::clamp<long>(x1, 0, image.width());
    y0 = std::clamp<long>(y0, 0, image.height());
    y1 = std::clamp<long>(y1, 0, image.height());
    if (x1 <= x0 || y1 <= y0) continue;
    FaceBox mapped;
    mapped.x = static_cast<int>(x0);
    mapped.y = static_cast<int>(y0);
    mapped.w = static_cast<int>(x1 - x0);
    mapped.h = static_cast<int>(y1 - y0);
    mapped.confidence = std::clamp(b.confidence, 0.0, 1.0);
    mapped.applied_scale = scale;
    out.push_back(mapped);
  }
  std::stable_sort(out.begin(), out.end(), [](const FaceBox& a, const FaceBox& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  return out;
}

Image crop_face(const Image& image, const FaceBox& box, double margin,
                int out_size) {
  if (image.empty()) throw InvalidArgument("cannot crop an empty image");
  if (!(margin >= 0.0)) throw InvalidArgument("crop margin must be >= 0");
  if (out_size < 1) throw InvalidArgument("crop size must be >= 1");
  if (box.w <= 0 || box.h <= 0) throw InvalidArgument("face box must have positive size");
  const double mx = margin * box.w;
  const double my = margin * box.h;
  double x0 = std::max(0.0, std::floor(box.x - mx));
  double y0 = std::max(0.0, std::floor(box.y - my));
  double x1 = std::min<double>(image.width(), std::ceil(box.x + box.w + mx));
  double y1 = std::min<double>(image.height(), std::ceil(box.y + box.h + my));
  if (x1 <= x0 || y1 <= y0) {
    throw InvalidArgument("face box lies outside the image");
  }
  PixelRect region{static_cast<int>(x0), static_cast<int>(y0),
                   static_cast<int>(x1 - x0), static_cast<int>(y1 - y0)};
  return resample_region(image, region, out_size, out_size);
}

namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, DetectorFactory> factories{
      {"stub", [] { return std::make_unique<StubMarkerDetector>(); }}};
};

Registry& registry() {
  static Registry instance;
  return instance;
}

}  // namespace

void register_detector(const std::string& name, DetectorFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.factories[name] = std::move(factory);
}

std::unique_ptr<DetectorBackend> make_detector(const std::string& name) {
  auto& r = registry();
  DetectorFactory factory;
  {
    std::lock_guard lock(r.mutex);
    auto it = r.factories.find(name);
    if (it == r.factories.end()) {
      throw InvalidArgument("unknown detector backend '" + name + "'");
    }
    factory = it->second;
  }
  return factory();
}

std::vector<std::string> registered_detectors() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> names;
  for (const auto& [name, _] : r.factories) names.push_back(name);
  return names;
}

}  // namespace veriframe
