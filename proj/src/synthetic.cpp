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

#include "veriframe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "veriframe/error.hpp"
#include "veriframe/faces.hpp"
#include "veriframe/ingest.hpp"

namespace veriframe::synthetic {

namespace fs = std::filesystem;

int marker_border(int size) { return std::max(3, size / 8); }

Image background(int width, int height, std::uint64_t seed) {
  Image img(width, height);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> noise(112, 144);
  for (auto& v : img.bytes()) v = static_cast<std::uint8_t>(noise(rng));
  return img;
}

void draw_marker(Image& image, const Marker& marker, std::uint64_t seed) {
  const auto* color = StubMarkerDetector::kMarkerColor;
  const int border = marker_border(marker.size);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> bright(160, 255);
  std::uniform_int_distribution<int> dark(0, 95);
  for (int dy = 0; dy < marker.size; ++dy) {
    for (int dx = 0; dx < marker.size; ++dx) {
      const int x = marker.x + dx;
      const int y = marker.y + dy;
      if (x < 0 || y < 0 || x >= image.width() || y >= image.height()) continue;
      const bool ring = dx < border || dy < border ||
                        dx >= marker.size - border || dy >= marker.size - border;
      auto* p = image.pixel(x, y);
      if (ring) {
        p[0] = color[0];
        p[1] = color[1];
        p[2] = color[2];
        continue;
      }
      for (int c = 0; c < 3; ++c) {
        if (marker.level) {
          p[c] = *marker.level;
        } else if (!marker.interior) {
          p[c] = 128;
        } else if (*marker.interior == Label::kFake) {
          p[c] = static_cast<std::uint8_t>(bright(rng));
        } else {
          p[c] = static_cast<std::uint8_t>(dark(rng));
        }
      }
    }
  }
}

Image frame(int width, int height, std::span<const Marker> markers,
            std::uint64_t seed) {
  Image img = background(width, height, seed);
  std::uint64_t k = 0;
  for (const auto& m : markers) draw_marker(img, m, seed * 1315423911ULL + ++k);
  return img;
}

void write_frame_directory(const fs::path& dir, std::span<const Image> frames) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%05zu.png", i);
    write_png(dir / name, frames[i]);
  }
}

std::vector<Image> marker_video(int frame_count, int width, int height,
                                Label label, std::uint64_t seed,
                                bool with_marker) {
  std::vector<Image> frames;
  frames.reserve(static_cast<std::size_t>(frame_count));
  const int size = std::min(width, height) / 2;
  for (int i = 0; i < frame_count; ++i) {
    const std::uint64_t frame_seed = seed * 7919 + static_cast<std::uint64_t>(i);
    if (!with_marker) {
      frames.push_back(background(width, height, frame_seed));
      continue;
    }
    Marker m;
    m.size = size;
    m.x = width / 4 + (i % 5) * 2;
    m.y = height / 4 + (i % 3) * 2;
    m.interior = label;
    frames.push_back(frame(width, height, std::span(&m, 1), frame_seed));
  }
  return frames;
}

Manifest write_corpus(const fs::path& root, const CorpusOptions& options) {
  if (options.videos_per_label < 1 || options.frames_per_video < 1) {
    throw InvalidArgument("corpus needs at least one video and one frame");
  }
  Manifest manifest;
  const int n = options.videos_per_label;
  const int n_test = static_cast<int>(std::lround(n * options.test_fraction));
  const int n_val = static_cast<int>(std::lround(n * options.val_fraction));
  std::uint64_t video_seed = options.seed * 104729;
  char name[64];
  for (int i = 0; i < n; ++i) {
    const Split split = i < n_test           ? Split::kTest
                        : i < n_test + n_val ? Split::kVal
                                             : Split::kTrain;
    for (Label label : kAllLabels) {
      std::snprintf(name, sizeof(name), "%s_%03d.mp4",
                    label == Label::kFake ? "fake" : "real", i);
      auto frames = marker_video(options.frames_per_video, options.width,
                                 options.height, label, ++video_seed);
      write_frame_directory(root / "videos" / name, frames);
      ManifestEntry entry{name, label, split, std::nullopt};
      if (label == Label::kFake) {
        char original[64];
        std::snprintf(original, sizeof(original), "real_%03d.mp4", i);
        entry.original = original;
      }
      manifest.entries.push_back(std::move(entry));
    }
  }
  manifest.source_path = (root / "manifest.csv").string();
  save_manifest(manifest, root / "manifest.csv");
  return manifest;
}

fs::path write_crop_corpus(const fs::path& root, int count, int size,
                           Split split, std::uint64_t seed) {
  fs::create_directories(root / "real");
  fs::create_directories(root / "fake");
  std::vector<IndexRow> rows;
  char name[64];
  for (int i = 0; i < count; ++i) {
    const Label label = i % 2 == 0 ? Label::kReal : Label::kFake;
    Image img(size, size);
    Marker m{0, 0, size, label, std::nullopt};
    draw_marker(img, m, seed * 31 + static_cast<std::uint64_t>(i));
    std::snprintf(name, sizeof(name), "crop_%05d.png", i);
    const std::string rel =
        std::string(label == Label::kFake ? "fake/" : "real/") + name;
    write_png(root / rel, img);
    rows.push_back({rel, "synthetic", label, split, static_cast<std::size_t>(i), 0});
  }
  const auto index_path = root / "index.csv";
  write_index(index_path, rows);
  return index_path;
}

}  // namespace veriframe::synthetic
