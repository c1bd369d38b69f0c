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
 * @brief Face corpus builder: videos -> sampled frames -> face crops on disk
 *
 * Output layout:
 *
 *   <output_root>/real/<video>__f<frame>__b<box>.png
 *   <output_root>/fake/<video>__f<frame>__b<box>.png
 *   <output_root>/index.csv   crop_path,video,label,split,frame_index,box_index
 *
 * `crop_path` is relative to the directory holding index.csv.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "veriframe/faces.hpp"
#include "veriframe/manifest.hpp"

namespace veriframe {

enum class SamplingMode { kUniform, kRandom };

std::optional<SamplingMode> parse_sampling_mode(std::string_view token);

/// Picks min(n, total_frames) distinct, ascending frame indices.
/// kUniform strides evenly from frame 0; kRandom draws without replacement
/// from a generator seeded with `seed`.
std::vector<std::size_t> sample_frame_indices(std::size_t total_frames,
                                              std::size_t n, SamplingMode mode,
                                              std::uint64_t seed);

struct IndexRow {
  std::string crop_path;
  std::string video;
  Label label = Label::kReal;
  Split split = Split::kTrain;
  std::size_t frame_index = 0;
  std::size_t box_index = 0;

  friend bool operator==(const IndexRow&, const IndexRow&) = default;
};

struct IndexTable {
  /// Directory that crop paths are relative to.
  std::filesystem::path root;
  std::vector<IndexRow> rows;

  [[nodiscard]] std::vector<IndexRow> split_rows(Split split) const;
  [[nodiscard]] std::filesystem::path resolve(const IndexRow& row) const {
    return root / row.crop_path;
  }
};

std::string index_to_csv(const std::vector<IndexRow>& rows);
void write_index(const std::filesystem::path& path, const std::vector<IndexRow>& rows);
IndexTable read_index(const std::filesystem::path& path);

struct IngestOptions {
  std::size_t frames_per_video = 10;
  SamplingMode sampling = SamplingMode::kUniform;
  std::uint64_t seed = 0;
  int crop_size = 256;
  double crop_margin = kDefaultCropMargin;
  /// 0 = hardware concurrency.
  unsigned workers = 0;
};

struct IngestReport {
  std::size_t videos_processed = 0;
  std::vector<std::pair<std::string, std::string>> videos_failed;
  std::size_t frames_sampled = 0;
  std::size_t frames_without_faces = 0;
  std::map<Label, std::size_t> faces_written{{Label::kReal, 0}, {Label::kFake, 0}};
  std::filesystem::path output_root;
};

/// Decodes every manifest video under `video_root`, samples frames, crops
/// every detected face and writes the crops plus index.csv under
/// `output_root`. Unreadable videos are recorded in the report, not thrown.
IngestReport ingest_videos(const Manifest& manifest,
                           const std::filesystem::path& video_root,
                           const std::filesystem::path& output_root,
                           const DetectorBackend& detector,
                           const IngestOptions& options = {});

}  // namespace veriframe
