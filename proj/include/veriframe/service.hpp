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
 * @brief Inference service: media -> frames -> faces -> scores -> report
 *
 * Payloads are decoded from memory and never written to disk. The HTTP
 * surface is
 *
 *   POST /api/v1/predict   multipart field `file`; query frames, threshold, seed
 *   GET  /api/v1/health
 *
 * Errors are JSON: {"error": {"code": ..., "message": ...}}.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veriframe/artifact.hpp"
#include "veriframe/faces.hpp"
#include "veriframe/manifest.hpp"
#include "veriframe/tensor.hpp"

namespace veriframe {

enum class MediaType { kImage, kVideo };

std::string_view to_string(MediaType type);

/// Identifies media by magic bytes, falling back to the filename extension.
std::optional<MediaType> sniff_media(std::span<const std::uint8_t> bytes,
                                     std::string_view filename = {});

/// Crop side used before resizing to the model input, matching ingest.
inline constexpr int kServiceCropSize = 256;
inline constexpr std::size_t kDefaultInferenceFrames = 10;

/// Scores preprocessed face batches. Implementations must be safe to call
/// concurrently.
class FaceScorer {
 public:
  virtual ~FaceScorer() = default;
  [[nodiscard]] virtual int input_size() const = 0;
  [[nodiscard]] virtual double crop_margin() const = 0;
  [[nodiscard]] virtual std::string model_id() const = 0;
  /// (B, S, S, 3) in [0, 1] -> B probabilities of FAKE.
  [[nodiscard]] virtual std::vector<double> score(const Tensor& batch) const = 0;
};

class ModelScorer final : public FaceScorer {
 public:
  explicit ModelScorer(LoadedModel loaded);

  [[nodiscard]] int input_size() const override;
  [[nodiscard]] double crop_margin() const override;
  [[nodiscard]] std::string model_id() const override;
  [[nodiscard]] std::vector<double> score(const Tensor& batch) const override;

 private:
  LoadedModel loaded_;
};

struct ClassifyParams {
  std::size_t frames = kDefaultInferenceFrames;
  double threshold = 0.5;
  /// nullopt draws a fresh seed per request.
  std::optional<std::uint64_t> seed;
};

struct FaceResult {
  std::size_t frame_index = 0;
  FaceBox box;
  double probability_fake = 0.0;
  Label label = Label::kReal;
};

struct PredictionReport {
  MediaType media_type = MediaType::kImage;
  std::size_t frames_analyzed = 0;
  std::vector<FaceResult> faces;
  struct Aggregate {
    std::optional<double> probability_fake;
    std::optional<Label> label;
    double threshold = 0.5;
    std::string status = "ok";  // or "no_face_detected"
  } aggregate;
  std::string model_id;

  /// Compact JSON with a fixed field order.
  [[nodiscard]] std::string to_json() const;
};

/// Runs the full inference workflow on an in-memory payload. Throws
/// DecodeError for undecodable payloads and InvalidArgument for bad params.
PredictionReport classify_media(std::span<const std::uint8_t> payload, MediaType declared_type,
                                const FaceScorer& scorer, const DetectorBackend& detector,
                                const ClassifyParams& params = {});

struct ServiceConfig {
  std::filesystem::path model_artifact;
  std::string detector = "stub";
  std::size_t max_upload_mb = 50;
  std::string host = "127.0.0.1";
  int port = 8080;
};

struct UploadedFile {
  std::string filename;
  std::string content_type;
  std::string content;
};

struct PredictRequest {
  std::optional<UploadedFile> file;
  /// Full request body size in bytes.
  std::size_t content_length = 0;
  std::map<std::string, std::string> query;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

HttpResponse error_response(int status, std::string_view code, std::string_view message);

/// Shared state behind the HTTP endpoints. The scorer is swapped atomically
/// on reload; in-flight requests keep the instance they started with.
class InferenceService {
 public:
  /// Binds the detector and, when `config.model_artifact` is set, loads the
  /// artifact. A failed load leaves the service up but unhealthy.
  explicit InferenceService(ServiceConfig config);
  ~InferenceService();

  InferenceService(const InferenceService&) = delete;
  InferenceService& operator=(const InferenceService&) = delete;

  [[nodiscard]] const ServiceConfig& config() const { return config_; }
  [[nodiscard]] std::shared_ptr<const FaceScorer> scorer() const;
  void set_scorer(std::shared_ptr<const FaceScorer> scorer);
  /// Reloads the configured artifact. On failure the current model stays and
  /// the error message is returned.
  std::optional<std::string> reload();
  [[nodiscard]] std::optional<std::string> last_error() const;

  [[nodiscard]] HttpResponse handle_predict(const PredictRequest& request) const;
  [[nodiscard]] HttpResponse health() const;

  /// Starts the HTTP server on a background thread and returns the bound
  /// port (config port 0 picks a free one). Throws Error when binding fails.
  int start();
  /// Blocks serving on the calling thread.
  void listen();
  void stop();

 private:
  struct Server;

  ServiceConfig config_;
  std::unique_ptr<DetectorBackend> detector_;
  mutable std::mutex detector_mutex_;  // held per request when the backend is not thread-safe
  mutable std::mutex mutex_;
  std::shared_ptr<const FaceScorer> scorer_;
  std::optional<std::string> last_error_;
  std::unique_ptr<Server> server_;
};

}  // namespace veriframe
