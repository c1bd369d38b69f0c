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

#include "veriframe/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "veriframe/csv.hpp"
#include "veriframe/error.hpp"
#include "veriframe/video.hpp"

namespace veriframe {

namespace fs = std::filesystem;

std::optional<SamplingMode> parse_sampling_mode(std::string_view token) {
  if (token == "uniform") return SamplingMode::kUniform;
  if (token == "random") return SamplingMode::kRandom;
  return std::nullopt;
}

std::vector<std::size_t> sample_frame_indices(std::size_t total_frames,
                                              std::size_t n, SamplingMode mode,
                                              std::uint64_t seed) {
  if (total_frames == 0) throw InvalidArgument("video has no frames");
  if (n == 0) throw InvalidArgument("frame count must be >= 1");
  const std::size_t k = std::min(n, total_frames);
  std::vector<std::size_t> out;
  out.reserve(k);
  if (mode == SamplingMode::kUniform) {
    for (std::size_t i = 0; i < k; ++i) out.push_back(i * total_frames / k);
    return out;
  }
  std::vector<std::size_t> all(total_frames);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(out), k, rng);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<IndexRow> IndexTable::split_rows(Split split) const {
  std::vector<IndexRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [&](const IndexRow& r) { return r.split == split; });
  return out;
}

namespace {

const std::vector<std::string> kIndexHeader{"crop_path", "video",       "label",
                                            "split",     "frame_index", "box_index"};

std::size_t parse_count(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError("index.csv line " + std::to_string(line) +
                    ": expected a non-negative integer, got '" + s + "'");
  }
}

}  // namespace

std::string index_to_csv(const std::vector<IndexRow>& rows) {
  std::string out = csv::join_record(kIndexHeader) + "\n";
  for (const auto& r : rows) {
    out += csv::join_record({r.crop_path, r.video, std::string(to_string(r.label)),
                             std::string(to_string(r.split)),
                             std::to_string(r.frame_index),
                             std::to_string(r.box_index)}) +
           "\n";
  }
  return out;
}

void write_index(const fs::path& path, const std::vector<IndexRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << index_to_csv(rows);
}

IndexTable read_index(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  IndexTable table;
  table.root = path.parent_path();
  std::size_t line_no = 0;
  bool header = false;
  for (auto line : csv::lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = csv::split_record(line);
    if (!header) {
      if (f != kIndexHeader) {
        throw DataError("index.csv: unexpected header in " + path.string());
      }
      header = true;
      continue;
    }
    if (f.size() != kIndexHeader.size()) {
      throw DataError("index.csv line " + std::to_string(line_no) +
                      ": expected 6 columns");
    }
    auto label = parse_label(f[2]);
    auto split = parse_split(f[3]);
    if (!label || !split) {
      throw DataError("index.csv line " + std::to_string(line_no) +
                      ": bad label or split");
    }
    table.rows.push_back({f[0], f[1], *label, *split, parse_count(f[4], line_no),
                          parse_count(f[5], line_no)});
  }
  return table;
}

namespace {

struct VideoResult {
  bool ok = false;
  std::string failure;
  std::size_t frames_sampled = 0;
  std::size_t frames_without_faces = 0;
  std::vector<IndexRow> rows;
};

VideoResult ingest_one(const ManifestEntry& entry, const fs::path& video_root,
                       const fs::path& output_root,
                       const DetectorBackend& detector,
                       std::mutex* detector_lock, const IngestOptions& options,
                       std::uint64_t video_seed) {
  VideoResult result;
  std::vector<std::size_t> indices;
  std::vector<Image> frames;
  try {
    auto source = open_video(video_root / entry.name);
    indices = sample_frame_indices(source->frame_count(), options.frames_per_video,
                                   options.sampling, video_seed);
    frames = source->read_frames(indices);
  } catch (const std::exception& e) {
    result.failure = e.what();
    return result;
  }
  result.ok = true;
  result.frames_sampled = frames.size();

  const std::string stem = fs::path(entry.name).stem().string();
  const std::string subdir = entry.label == Label::kFake ? "fake" : "real";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::vector<FaceBox> boxes;
    if (detector_lock != nullptr) {
      std::lock_guard lock(*detector_lock);
      boxes = detect_faces(frames[i], detector);
    } else {
      boxes = detect_faces(frames[i], detector);
    }
    if (boxes.empty()) {
      ++result.frames_without_faces;
      continue;
    }
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      Image crop = crop_face(frames[i], boxes[k], options.crop_margin, options.crop_size);
      std::string rel = subdir + "/" + stem + "__f" + std::to_string(indices[i]) +
                        "__b" + std::to_string(k) + ".png";
      write_png(output_root / rel, crop);
      result.rows.push_back({rel, entry.name, entry.label, entry.split, indices[i], k});
    }
  }
  return result;
}

}  // namespace

IngestReport ingest_videos(const Manifest& manifest, const fs::path& video_root,
                           const fs::path& output_root,
                           const DetectorBackend& detector,
                           const IngestOptions& options) {
  if (manifest.entries.empty()) throw ManifestError("empty manifest");
  if (options.frames_per_video == 0) throw InvalidArgument("frames_per_video must be >= 1");
  if (options.crop_size < 1) throw InvalidArgument("crop size must be >= 1");
  fs::create_directories(output_root / "real");
  fs::create_directories(output_root / "fake");

  const std::size_t n = manifest.entries.size();
  std::vector<VideoResult> results(n);
  std::mutex detector_mutex;
  std::mutex* detector_lock = detector.thread_safe() ? nullptr : &detector_mutex;

  unsigned workers = options.workers != 0 ? options.workers
                                          : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = ingest_one(manifest.entries[i], video_root, output_root, detector,
                                detector_lock, options, options.seed + i);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (fatal) std::rethrow_exception(fatal);

  IngestReport report;
  report.output_root = output_root;
  std::vector<IndexRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = results[i];
    if (!r.ok) {
      report.videos_failed.emplace_back(manifest.entries[i].name, r.failure);
      continue;
    }
    ++report.videos_processed;
    report.frames_sampled += r.frames_sampled;
    report.frames_without_faces += r.frames_without_faces;
    report.faces_written[manifest.entries[i].label] += r.rows.size();
    rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  }
  write_index(output_root / "index.csv", rows);
  return report;
}

}  // namespace veriframe
