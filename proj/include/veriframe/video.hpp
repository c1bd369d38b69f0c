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
 * @brief Video decoding behind a small frame-source interface
 *
 * Three sources are provided:
 *  - a directory of `frame_00000.png ...` files (test fixtures, pre-split
 *    footage),
 *  - a frame bundle, a single-file container of PNG frames that can be held
 *    entirely in memory,
 *  - container formats (MP4, AVI, MKV/WebM, MOV) decoded through OpenCV's
 *    FFmpeg backend. In-memory payloads are exposed to the decoder through an
 *    anonymous memory file, never through the filesystem.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "veriframe/image.hpp"

namespace veriframe {

class VideoSource {
 public:
  virtual ~VideoSource() = default;

  [[nodiscard]] virtual std::size_t frame_count() = 0;
  /// `indices` must be sorted ascending and < frame_count().
  virtual std::vector<Image> read_frames(std::span<const std::size_t> indices) = 0;
};

class FrameDirectorySource final : public VideoSource {
 public:
  explicit FrameDirectorySource(std::filesystem::path dir);

  std::size_t frame_count() override { return files_.size(); }
  std::vector<Image> read_frames(std::span<const std::size_t> indices) override;

 private:
  std::vector<std::filesystem::path> files_;
};

/// Frame bundle layout, little-endian:
///   "VFBUNDLE" | u32 version (=1) | u32 frame count | { u32 size | PNG bytes }*
inline constexpr char kFrameBundleMagic[8] = {'V', 'F', 'B', 'U',
                                              'N', 'D', 'L', 'E'};

std::vector<std::uint8_t> encode_frame_bundle(std::span<const Image> frames);

class FrameBundleSource final : public VideoSource {
 public:
  /// Keeps a copy of the bundle bytes; frames decode lazily.
  explicit FrameBundleSource(std::span<const std::uint8_t> bytes);

  std::size_t frame_count() override { return frames_.size(); }
  std::vector<Image> read_frames(std::span<const std::size_t> indices) override;

 private:
  std::vector<std::uint8_t> bytes_;
  std::vector<std::pair<std::size_t, std::size_t>> frames_;  // offset, size
};

/// True for frame-bundle bytes or a recognised container signature.
bool looks_like_video(std::span<const std::uint8_t> bytes);

/// Opens a path: directory -> frame directory, bundle file -> bundle,
/// anything else -> OpenCV. Throws DecodeError when nothing can read it.
std::unique_ptr<VideoSource> open_video(const std::filesystem::path& path);

/// Opens in-memory video bytes without touching the filesystem.
std::unique_ptr<VideoSource> open_video(std::span<const std::uint8_t> bytes);

/// Encodes frames into a container chosen by extension: .avi (MJPG) or
/// .mp4/.mov (MPEG-4 part 2).
void write_video_file(const std::filesystem::path& path, std::span<const Image> frames,
                      double fps = 25.0);

}  // namespace veriframe
