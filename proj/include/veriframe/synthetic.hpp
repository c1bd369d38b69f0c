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
 * @brief Synthetic media for hermetic runs: marker "faces" the stub detector
 * finds, frame-directory videos, and a labeled toy corpus.
 *
 * A FAKE marker is filled with bright noise and a REAL marker with dark
 * noise, so the two classes are separable by mean intensity.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "veriframe/image.hpp"
#include "veriframe/manifest.hpp"

namespace veriframe::synthetic {

struct Marker {
  int x = 0;
  int y = 0;
  int size = 64;
  /// Interior fill; nullopt leaves a flat grey interior.
  std::optional<Label> interior = Label::kFake;
  /// Fixed interior intensity; overrides `interior` noise when set.
  std::optional<std::uint8_t> level;
};

/// Ring thickness used for a marker of the given side.
int marker_border(int size);

/// Grey, lightly noisy background.
Image background(int width, int height, std::uint64_t seed);

void draw_marker(Image& image, const Marker& marker, std::uint64_t seed);

Image frame(int width, int height, std::span<const Marker> markers,
            std::uint64_t seed);

/// Writes frames as `frame_00000.png`, `frame_00001.png`, ... under `dir`.
void write_frame_directory(const std::filesystem::path& dir,
                           std::span<const Image> frames);

/// A "video" of `frame_count` frames with one marker of the given class that
/// drifts a few pixels per frame. `with_marker=false` yields face-free frames.
std::vector<Image> marker_video(int frame_count, int width, int height,
                                Label label, std::uint64_t seed,
                                bool with_marker = true);

struct CorpusOptions {
  int videos_per_label = 10;
  int frames_per_video = 12;
  int width = 160;
  int height = 120;
  /// Fractions of videos per label assigned to val and test; rest is train.
  double val_fraction = 0.2;
  double test_fraction = 0.2;
  std::uint64_t seed = 1;
};

/// Writes `<root>/videos/<name>/frame_*.png` for every video plus
/// `<root>/manifest.csv`, and returns the manifest.
Manifest write_corpus(const std::filesystem::path& root,
                      const CorpusOptions& options);

/// Unit-range crop tensor source for datapipe tests: `count` PNG crops of
/// size x size with alternating labels, written under `root/{real,fake}` with
/// an index.csv. Returns the index path.
std::filesystem::path write_crop_corpus(const std::filesystem::path& root,
                                        int count, int size, Split split,
                                        std::uint64_t seed);

}  // namespace veriframe::synthetic
