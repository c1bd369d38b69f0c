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

#include "veriframe/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <nlohmann/json.hpp>
#include <random>
#include <thread>

#include "veriframe/datapipe.hpp"
#include "veriframe/error.hpp"
#include "veriframe/ingest.hpp"
#include "veriframe/video.hpp"

namespace veriframe {

using nlohmann::ordered_json;

std::string_view to_string(MediaType type) {
  return type == MediaType::kVideo ? "video" : "image";
}

std::optional<MediaType> sniff_media(std::span<const std::uint8_t> bytes,
                                     std::string_view filename) {
  if (looks_like_image(bytes)) return MediaType::kImage;
  if (looks_like_video(bytes)) return MediaType::kVideo;
  std::string ext(std::filesystem::path(std::string(filename)).extension().string());
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp") return MediaType::kImage;
  if (ext == ".mp4" || ext == ".avi" || ext == ".mov" || ext == ".mkv" || ext == ".webm" ||
      ext == ".vfb") {
    return MediaType::kVideo;
  }
  return std::nullopt;
}

ModelScorer::ModelScorer(LoadedModel loaded) : loaded_(std::move(loaded)) {
  if (!loaded_.model) throw ModelError("scorer needs a model");
}

int ModelScorer::input_size() const { return loaded_.model->input_size(); }
double ModelScorer::crop_margin() const { return loaded_.artifact.descriptor.crop_margin; }
std::string ModelScorer::model_id() const { return loaded_.artifact.model_id(); }
std::vector<double> ModelScorer::score(const Tensor& batch) const {
  return loaded_.model->predict(batch);
}

std::string PredictionReport::to_json() const {
  ordered_json faces_json = ordered_json::array();
  for (const auto& f : faces) {
    faces_json.push_back({{"frame_index", f.frame_index},
                          {"box",
                           {{"x", f.box.x},
                            {"y", f.box.y},
                            {"w", f.box.w},
                            {"h", f.box.h},
                            {"confidence", f.box.confidence}}},
                          {"probability_fake", f.probability_fake},
                          {"label", std::string(veriframe::to_string(f.label))}});
  }
  ordered_json agg = {
      {"probability_fake",
       aggregate.probability_fake ? ordered_json(*aggregate.probability_fake) : ordered_json()},
      {"label", aggregate.label ? ordered_json(std::string(veriframe::to_string(*aggregate.label)))
                                : ordered_json()},
      {"threshold", aggregate.threshold},
      {"status", aggregate.status}};
  ordered_json doc = {{"media_type", std::string(veriframe::to_string(media_type))},
                      {"frames_analyzed", frames_analyzed},
                      {"faces", faces_json},
                      {"aggregate", agg},
                      {"model_id", model_id}};
  return doc.dump();
}

namespace {

struct PendingFace {
  std::size_t frame_index;
  FaceBox box;
  Image crop;
};

Label decide(double p, double threshold) { return p >= threshold ? Label::kFake : Label::kReal; }

}  // namespace

PredictionReport classify_media(std::span<const std::uint8_t> payload, MediaType declared_type,
                                const FaceScorer& scorer, const DetectorBackend& detector,
                                const ClassifyParams& params) {
  if (!(params.threshold >= 0.0 && params.threshold <= 1.0)) {
    throw InvalidArgument("threshold must lie in [0, 1]");
  }
  if (params.frames < 1) throw InvalidArgument("frames must be >= 1");

  std::vector<std::size_t> indices;
  std::vector<Image> frames;
  if (declared_type == MediaType::kImage) {
    frames.push_back(decode_image(payload));
    indices.push_back(0);
  } else {
    auto source = open_video(payload);
    const std::size_t total = source->frame_count();
    if (total == 0) throw DecodeError("video has no frames");
    const std::uint64_t seed = params.seed ? *params.seed : std::random_device{}();
    indices = sample_frame_indices(total, params.frames, SamplingMode::kRandom, seed);
    frames = source->read_frames(indices);
  }

  std::vector<PendingFace> pending;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (const FaceBox& box : detect_faces(frames[i], detector)) {
      pending.push_back(
          {indices[i], box, crop_face(frames[i], box, scorer.crop_margin(), kServiceCropSize)});
    }
  }
  frames.clear();

  PredictionReport report;
  report.media_type = declared_type;
  report.frames_analyzed = indices.size();
  report.aggregate.threshold = params.threshold;
  report.model_id = scorer.model_id();

  const int size = scorer.input_size();
  constexpr std::size_t kBatch = 32;
  for (std::size_t begin = 0; begin < pending.size(); begin += kBatch) {
    const std::size_t end = std::min(pending.size(), begin + kBatch);
    Tensor batch({static_cast<int>(end - begin), size, size, 3});
    for (std::size_t i = begin; i < end; ++i) {
      const auto pixels = preprocess_sample(pending[i].crop, size);
      auto dst = batch.sample(static_cast<int>(i - begin));
      std::memcpy(dst.data(), pixels.data(), sizeof(double) * dst.size());
    }
    const auto p = scorer.score(batch);
    if (p.size() != end - begin) throw ModelError("scorer returned the wrong number of scores");
    for (std::size_t i = begin; i < end; ++i) {
      const double q = p[i - begin];
      report.faces.push_back(
          {pending[i].frame_index, pending[i].box, q, decide(q, params.threshold)});
    }
  }

  if (report.faces.empty()) {
    report.aggregate.status = "no_face_detected";
  } else {
    double sum = 0.0;
    for (const auto& f : report.faces) sum += f.probability_fake;
    const double mean = sum / static_cast<double>(report.faces.size());
    report.aggregate.probability_fake = mean;
    report.aggregate.label = decide(mean, params.threshold);
  }
  return report;
}

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  ordered_json doc = {{"error", {{"code", code}, {"message", message}}}};
  return {status, doc.dump(), "application/json"};
}

namespace {

template <typename T>
std::optional<T> parse_number(const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

struct InferenceService::Server {
  httplib::Server http;
  std::thread thread;
};

InferenceService::InferenceService(ServiceConfig config) : config_(std::move(config)) {
  detector_ = make_detector(config_.detector);
  if (!config_.model_artifact.empty()) reload();
}

InferenceService::~InferenceService() { stop(); }

std::shared_ptr<const FaceScorer> InferenceService::scorer() const {
  std::lock_guard lock(mutex_);
  return scorer_;
}

void InferenceService::set_scorer(std::shared_ptr<const FaceScorer> scorer) {
  std::lock_guard lock(mutex_);
  scorer_ = std::move(scorer);
  last_error_.reset();
}

std::optional<std::string> InferenceService::reload() {
  if (config_.model_artifact.empty()) {
    std::lock_guard lock(mutex_);
    last_error_ = "service.model_artifact is not set";
    return last_error_;
  }
  try {
    auto scorer = std::make_shared<const ModelScorer>(load_model(config_.model_artifact));
    set_scorer(std::move(scorer));
    return std::nullopt;
  } catch (const Error& e) {
    std::lock_guard lock(mutex_);
    last_error_ = e.what();
    return last_error_;
  }
}

std::optional<std::string> InferenceService::last_error() const {
  std::lock_guard lock(mutex_);
  return last_error_;
}

HttpResponse InferenceService::handle_predict(const PredictRequest& request) const {
  const std::size_t limit = config_.max_upload_mb * 1024 * 1024;
  if (request.content_length > limit) {
    return error_response(413, "payload_too_large",
                          "upload exceeds " + std::to_string(config_.max_upload_mb) + " MB");
  }
  if (!request.file) return error_response(400, "missing_file", "multipart field 'file' is required");
  const auto scorer = this->scorer();
  if (!scorer) return error_response(503, "model_not_loaded", "no model artifact is loaded");

  ClassifyParams params;
  if (auto it = request.query.find("frames"); it != request.query.end()) {
    const auto v = parse_number<std::size_t>(it->second);
    if (!v || *v < 1) return error_response(400, "invalid_parameter", "frames must be a positive integer");
    params.frames = *v;
  }
  if (auto it = request.query.find("threshold"); it != request.query.end()) {
    std::optional<double> v;
    try {
      std::size_t used = 0;
      v = std::stod(it->second, &used);
      if (used != it->second.size()) v.reset();
    } catch (const std::exception&) {
    }
    if (!v || !(*v >= 0.0 && *v <= 1.0)) {
      return error_response(400, "invalid_parameter", "threshold must be a number in [0, 1]");
    }
    params.threshold = *v;
  }
  if (auto it = request.query.find("seed"); it != request.query.end()) {
    const auto v = parse_number<std::uint64_t>(it->second);
    if (!v) return error_response(400, "invalid_parameter", "seed must be a non-negative integer");
    params.seed = *v;
  }

  const auto& content = request.file->content;
  const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(content.data()),
                                            content.size());
  const auto type = sniff_media(bytes, request.file->filename);
  if (!type) return error_response(400, "unsupported_media", "file is neither an image nor a video");

  try {
    std::unique_lock<std::mutex> lock(detector_mutex_, std::defer_lock);
    if (!detector_->thread_safe()) lock.lock();
    const auto report = classify_media(bytes, *type, *scorer, *detector_, params);
    return {200, report.to_json(), "application/json"};
  } catch (const DecodeError& e) {
    return error_response(400, "undecodable_media", e.what());
  } catch (const InvalidArgument& e) {
    return error_response(400, "invalid_parameter", e.what());
  } catch (const DetectorError& e) {
    return error_response(500, "detector_error", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal_error", e.what());
  }
}

HttpResponse InferenceService::health() const {
  const auto scorer = this->scorer();
  const bool ok = scorer && detector_;
  ordered_json doc = {{"status", ok ? "ok" : "unavailable"},
                      {"model_id", scorer ? ordered_json(scorer->model_id()) : ordered_json()},
                      {"backend_name", detector_ ? detector_->name() : std::string()}};
  if (!ok) {
    if (const auto err = last_error()) doc["error"] = *err;
  }
  return {ok ? 200 : 503, doc.dump(), "application/json"};
}

namespace {

void send(httplib::Response& res, const HttpResponse& out) {
  res.status = out.status;
  res.set_content(out.body, out.content_type);
}

}  // namespace

int InferenceService::start() {
  if (server_) throw Error("service already started");
  server_ = std::make_unique<Server>();
  auto& http = server_->http;
  const std::size_t limit = config_.max_upload_mb * 1024 * 1024;
  // Headroom for multipart framing; handle_predict applies the exact limit.
  http.set_payload_max_length(limit + 64 * 1024);

  http.Post("/api/v1/predict", [this](const httplib::Request& req, httplib::Response& res) {
    PredictRequest request;
    request.content_length = req.body.size();
    if (req.has_header("Content-Length")) {
      if (auto n = parse_number<std::size_t>(req.get_header_value("Content-Length"))) {
        request.content_length = *n;
      }
    }
    for (const auto& [key, value] : req.params) request.query[key] = value;
    if (req.is_multipart_form_data() && req.has_file("file")) {
      const auto part = req.get_file_value("file");
      request.file = UploadedFile{part.filename, part.content_type, part.content};
      // Multipart framing is not part of the upload.
      request.content_length = part.content.size();
    }
    send(res, handle_predict(request));
  });
  http.Get("/api/v1/health",
           [this](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    switch (res.status) {
      case 413:
        send(res, error_response(413, "payload_too_large", "upload exceeds the configured limit"));
        break;
      case 404:
        send(res, error_response(404, "not_found", "no such endpoint"));
        break;
      default:
        send(res, error_response(res.status, "http_error", "request failed"));
    }
  });

  int port = config_.port;
  if (port == 0) {
    port = http.bind_to_any_port(config_.host);
    if (port < 0) throw Error("cannot bind " + config_.host);
  } else if (!http.bind_to_port(config_.host, port)) {
    throw Error("cannot bind " + config_.host + ":" + std::to_string(port));
  }
  server_->thread = std::thread([this] { server_->http.listen_after_bind(); });
  server_->http.wait_until_ready();
  return port;
}

void InferenceService::listen() {
  start();
  if (server_->thread.joinable()) server_->thread.join();
}

void InferenceService::stop() {
  if (!server_) return;
  server_->http.stop();
  if (server_->thread.joinable()) server_->thread.join();
  server_.reset();
}

}  // namespace veriframe
