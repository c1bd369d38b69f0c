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

#include "veriframe/video.hpp"

#include <sys/mman.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/videoio.hpp>

#include "veriframe/error.hpp"

namespace veriframe {

namespace fs = std::filesystem;

namespace {

void check_indices(std::span<const std::size_t> indices, std::size_t count) {
  if (!std::is_sorted(indices.begin(), indices.end())) {
    throw InvalidArgument("frame indices must be sorted");
  }
  if (!indices.empty() && indices.back() >= count) {
    throw InvalidArgument("frame index " + std::to_string(indices.back()) +
                          " out of range (" + std::to_string(count) + " frames)");
  }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  if (at + 4 > bytes.size()) throw DecodeError("truncated frame bundle");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

bool is_bundle(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= sizeof(kFrameBundleMagic) &&
         std::memcmp(bytes.data(), kFrameBundleMagic, sizeof(kFrameBundleMagic)) == 0;
}

Image from_bgr(const cv::Mat& bgr) {
  cv::Mat frame = bgr;
  if (frame.type() != CV_8UC3) {
    throw DecodeError("unsupported video pixel format");
  }
  Image out(frame.cols, frame.rows);
  for (int y = 0; y < frame.rows; ++y) {
    const auto* row = frame.ptr<cv::Vec3b>(y);
    for (int x = 0; x < frame.cols; ++x) out.set(x, y, row[x][2], row[x][1], row[x][0]);
  }
  return out;
}

/// Decodes through cv::VideoCapture. Counting frames by grabbing is slower
/// than CAP_PROP_FRAME_COUNT but exact for every container.
class OpenCvSource final : public VideoSource {
 public:
  explicit OpenCvSource(std::string path, int memfd = -1)
      : path_(std::move(path)), memfd_(memfd) {
    cv::VideoCapture probe(path_, cv::CAP_FFMPEG);
    if (!probe.isOpened()) {
      close_fd();
      throw DecodeError("cannot decode video");
    }
  }
  ~OpenCvSource() override { close_fd(); }
  OpenCvSource(const OpenCvSource&) = delete;
  OpenCvSource& operator=(const OpenCvSource&) = delete;

  std::size_t frame_count() override {
    if (count_ < 0) {
      cv::VideoCapture cap(path_, cv::CAP_FFMPEG);
      long n = 0;
      while (cap.grab()) ++n;
      count_ = n;
    }
    return static_cast<std::size_t>(count_);
  }

  std::vector<Image> read_frames(std::span<const std::size_t> indices) override {
    check_indices(indices, frame_count());
    std::vector<Image> frames;
    cv::VideoCapture cap(path_, cv::CAP_FFMPEG);
    std::size_t pos = 0;
    cv::Mat mat;
    for (std::size_t want : indices) {
      while (pos <= want) {
        if (!cap.grab()) throw DecodeError("video ended early");
        ++pos;
      }
      if (!cap.retrieve(mat) || mat.empty()) throw DecodeError("frame decode failed");
      frames.push_back(from_bgr(mat));
    }
    return frames;
  }

 private:
  void close_fd() {
    if (memfd_ >= 0) {
      ::close(memfd_);
      memfd_ = -1;
    }
  }

  std::string path_;
  int memfd_;
  long count_ = -1;
};

}  // namespace

FrameDirectorySource::FrameDirectorySource(fs::path dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw DecodeError("not a frame directory: " + dir.string());
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("frame_", 0) == 0 &&
        entry.path().extension() == ".png") {
      files_.push_back(entry.path());
    }
  }
  std::sort(files_.begin(), files_.end());
}

std::vector<Image> FrameDirectorySource::read_frames(
    std::span<const std::size_t> indices) {
  check_indices(indices, files_.size());
  std::vector<Image> frames;
  frames.reserve(indices.size());
  for (auto i : indices) frames.push_back(read_image(files_[i]));
  return frames;
}

std::vector<std::uint8_t> encode_frame_bundle(std::span<const Image> frames) {
  std::vector<std::uint8_t> out(kFrameBundleMagic,
                                kFrameBundleMagic + sizeof(kFrameBundleMagic));
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) {
    auto png = encode_png(f);
    put_u32(out, static_cast<std::uint32_t>(png.size()));
    out.insert(out.end(), png.begin(), png.end());
  }
  return out;
}

FrameBundleSource::FrameBundleSource(std::span<const std::uint8_t> bytes)
    : bytes_(bytes.begin(), bytes.end()) {
  if (!is_bundle(bytes_)) throw DecodeError("not a frame bundle");
  std::size_t at = sizeof(kFrameBundleMagic);
  if (get_u32(bytes_, at) != 1) throw DecodeError("unsupported frame bundle version");
  const std::uint32_t count = get_u32(bytes_, at + 4);
  at += 8;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t size = get_u32(bytes_, at);
    at += 4;
    if (at + size > bytes_.size()) throw DecodeError("truncated frame bundle");
    frames_.emplace_back(at, size);
    at += size;
  }
  if (at != bytes_.size()) throw DecodeError("trailing bytes in frame bundle");
}

std::vector<Image> FrameBundleSource::read_frames(
    std::span<const std::size_t> indices) {
  check_indices(indices, frames_.size());
  std::vector<Image> frames;
  for (auto i : indices) {
    auto [offset, size] = frames_[i];
    frames.push_back(decode_image(std::span(bytes_).subspan(offset, size)));
  }
  return frames;
}

bool looks_like_video(std::span<const std::uint8_t> bytes) {
  if (is_bundle(bytes)) return true;
  auto at = [&](std::size_t offset, std::string_view sig) {
    return bytes.size() >= offset + sig.size() &&
           std::memcmp(bytes.data() + offset, sig.data(), sig.size()) == 0;
  };
  return at(4, "ftyp") ||                             // MP4 / MOV
         (at(0, "RIFF") && at(8, "AVI ")) ||          // AVI
         at(0, "\x1A\x45\xDF\xA3");                   // Matroska / WebM
}

std::unique_ptr<VideoSource> open_video(const fs::path& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) return std::make_unique<FrameDirectorySource>(path);
  if (!fs::is_regular_file(path, ec)) throw DecodeError("no such video: " + path.string());
  {
    std::ifstream in(path, std::ios::binary);
    char head[sizeof(kFrameBundleMagic)] = {};
    in.read(head, sizeof(head));
    if (in.gcount() == sizeof(head) &&
        std::memcmp(head, kFrameBundleMagic, sizeof(head)) == 0) {
      in.seekg(0, std::ios::end);
      std::vector<std::uint8_t> bytes(static_cast<std::size_t>(in.tellg()));
      in.seekg(0);
      in.read(reinterpret_cast<char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
      return std::make_unique<FrameBundleSource>(bytes);
    }
  }
  return std::make_unique<OpenCvSource>(path.string());
}

std::unique_ptr<VideoSource> open_video(std::span<const std::uint8_t> bytes) {
  if (is_bundle(bytes)) return std::make_unique<FrameBundleSource>(bytes);
  if (!looks_like_video(bytes)) throw DecodeError("unrecognised video signature");
  int fd = ::memfd_create("veriframe-payload", MFD_CLOEXEC);
  if (fd < 0) throw DecodeError("cannot allocate in-memory video buffer");
  std::size_t written = 0;
  while (written < bytes.size()) {
    ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n <= 0) {
      ::close(fd);
      throw DecodeError("cannot buffer video payload");
    }
    written += static_cast<std::size_t>(n);
  }
  return std::make_unique<OpenCvSource>("/proc/self/fd/" + std::to_string(fd), fd);
}

void write_video_file(const fs::path& path, std::span<const Image> frames, double fps) {
  if (frames.empty()) throw InvalidArgument("cannot write a video without frames");
  const auto ext = path.extension().string();
  int fourcc = 0;
  if (ext == ".avi") {
    fourcc = cv::VideoWriter::fourcc('M', 'J', 'P', 'G');
  } else if (ext == ".mp4" || ext == ".mov") {
    fourcc = cv::VideoWriter::fourcc('m', 'p', '4', 'v');
  } else {
    throw InvalidArgument("unsupported video extension '" + ext + "'");
  }
  const cv::Size size(frames[0].width(), frames[0].height());
  cv::VideoWriter writer(path.string(), fourcc, fps, size);
  if (!writer.isOpened()) throw Error("cannot open video writer for " + path.string());
  cv::Mat bgr(size, CV_8UC3);
  for (const auto& frame : frames) {
    if (frame.width() != size.width || frame.height() != size.height) {
      throw InvalidArgument("all frames must share one size");
    }
    for (int y = 0; y < size.height; ++y) {
      auto* row = bgr.ptr<cv::Vec3b>(y);
      for (int x = 0; x < size.width; ++x) {
        const auto px = frame.pixel(x, y);
        row[x] = cv::Vec3b(px[2], px[1], px[0]);
      }
    }
    writer.write(bgr);
  }
}

}  // namespace veriframe
