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
 * @brief Face detection adapter, detector pre-scaling policy and face cropping
 *
 * Detectors run on a rescaled copy of the frame so that faces arrive at a
 * size close to the 340x340 working resolution of the training corpus. The
 * rescale factor depends only on the longest image side:
 *
 *   L < 100            -> 2.0
 *   100 <= L <= 1000   -> 1.0
 *   1000 < L <= 1900   -> 0.5
 *   L > 1900           -> 0.33
 */

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "veriframe/image.hpp"

namespace veriframe {

inline constexpr double kDefaultCropMargin = 0.20;

struct FaceBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  double confidence = 0.0;
  /// Factor the frame was resized by before the detector ran.
  double applied_scale = 1.0;

  [[nodiscard]] PixelRect rect() const { return {x, y, w, h}; }
  friend bool operator==(const FaceBox&, const FaceBox&) = default;
};

/// Detector pre-scale for an image whose longest side is `longest_side_px`.
/// Throws InvalidArgument for non-positive sizes.
double scale_factor(int longest_side_px);

/// A face detector. Implementations report boxes in the coordinates of the
/// image they are given; detect_faces() handles rescaling.
class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  /// False when detect() must not be called concurrently on one instance.
  [[nodiscard]] virtual bool thread_safe() const { return true; }
  [[nodiscard]] virtual std::vector<FaceBox> detect(const Image& image) const = 0;
};

/// Deterministic detector for the synthetic face marker: a square ring
/// painted in kMarkerColor. Confidence is the fraction of the component's
/// bounding-box perimeter covered by marker pixels.
class StubMarkerDetector final : public DetectorBackend {
 public:
  static constexpr std::uint8_t kMarkerColor[3] = {255, 0, 255};
  /// L1 colour distance under which a pixel counts as marker.
  static constexpr int kColorTolerance = 150;
  static constexpr int kMinSide = 6;
  static constexpr double kMinConfidence = 0.6;

  [[nodiscard]] std::string name() const override { return "stub"; }
  [[nodiscard]] std::vector<FaceBox> detect(const Image& image) const override;
};

/// Runs `backend` on the image rescaled by scale_factor(longest side) and maps
/// the boxes back to original coordinates, clamped to the image and sorted by
/// descending confidence (ties by y, then x). Backend exceptions are rethrown
/// as DetectorError naming the backend.
std::vector<FaceBox> detect_faces(const Image& image,
                                  const DetectorBackend& backend);

/// Expands `box` by `margin` x its size on every side, clamps to the image and
/// resamples to out_size x out_size.
Image crop_face(const Image& image, const FaceBox& box,
                double margin = kDefaultCropMargin, int out_size = 256);

using DetectorFactory = std::function<std::unique_ptr<DetectorBackend>()>;

/// Registers a runtime adapter under `name` (replacing any previous one).
void register_detector(const std::string& name, DetectorFactory factory);
/// Builds the backend registered under `name`; "stub" is always present.
std::unique_ptr<DetectorBackend> make_detector(const std::string& name);
std::vector<std::string> registered_detectors();

}  // namespace veriframe
