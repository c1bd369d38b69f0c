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

#include <gtest/gtest.h>
#include <httplib.h>

#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <regex>

#include "support/test_support.hpp"
#include "veriframe/artifact.hpp"
#include "veriframe/error.hpp"
#include "veriframe/image.hpp"
#include "veriframe/service.hpp"
#include "veriframe/synthetic.hpp"
#include "veriframe/video.hpp"

namespace veriframe {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Scores a crop 0.8 when its centre is bright and 0.2 otherwise.
class BrightnessScorer final : public FaceScorer {
 public:
  int input_size() const override { return 32; }
  double crop_margin() const override { return 0.2; }
  std::string model_id() const override { return "brightness"; }
  std::vector<double> score(const Tensor& batch) const override {
    std::vector<double> out;
    for (int n = 0; n < batch.shape().n; ++n) {
      double sum = 0;
      int count = 0;
      for (int y = 12; y < 20; ++y) {
        for (int x = 12; x < 20; ++x) {
          for (int c = 0; c < 3; ++c, ++count) sum += batch.at(n, y, x, c);
        }
      }
      out.push_back(sum / count > 0.5 ? 0.8 : 0.2);
    }
    return out;
  }
};

std::vector<std::uint8_t> png(const Image& img) { return encode_png(img); }

Image two_face_image() {
  const std::vector<synthetic::Marker> markers{{20, 30, 90, std::nullopt, 40},
                                               {180, 60, 100, std::nullopt, 220}};
  return synthetic::frame(320, 240, markers, 5);
}

std::vector<std::uint8_t> marker_bundle(int frames, std::uint64_t seed) {
  const auto video = synthetic::marker_video(frames, 160, 120, Label::kFake, seed);
  return encode_frame_bundle(video);
}

TEST(SniffMedia, MagicThenExtension) {
  EXPECT_EQ(sniff_media(png(Image(4, 4))), MediaType::kImage);
  EXPECT_EQ(sniff_media(marker_bundle(2, 1)), MediaType::kVideo);
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  EXPECT_FALSE(sniff_media(junk));
  EXPECT_FALSE(sniff_media(junk, "notes.txt"));
  EXPECT_EQ(sniff_media(junk, "clip.MP4"), MediaType::kVideo);
  EXPECT_EQ(sniff_media(junk, "face.jpeg"), MediaType::kImage);
  // Content wins over a misleading name.
  EXPECT_EQ(sniff_media(png(Image(4, 4)), "clip.mp4"), MediaType::kImage);
}

TEST(ClassifyMedia, TwoFacesAverageToFakeAtTie) {
  BrightnessScorer scorer;
  StubMarkerDetector stub;
  const auto report = classify_media(png(two_face_image()), MediaType::kImage, scorer, stub);
  EXPECT_EQ(report.media_type, MediaType::kImage);
  EXPECT_EQ(report.frames_analyzed, 1u);
  ASSERT_EQ(report.faces.size(), 2u);
  std::vector<double> ps{report.faces[0].probability_fake, report.faces[1].probability_fake};
  std::sort(ps.begin(), ps.end());
  EXPECT_EQ(ps, (std::vector<double>{0.2, 0.8}));
  EXPECT_NEAR(*report.aggregate.probability_fake, 0.5, 1e-12);
  EXPECT_EQ(report.aggregate.label, Label::kFake);
  EXPECT_EQ(report.aggregate.status, "ok");
  EXPECT_EQ(report.model_id, "brightness");
}

TEST(ClassifyMedia, VideoSamplesRequestedFrames) {
  BrightnessScorer scorer;
  StubMarkerDetector stub;
  ClassifyParams params;
  params.frames = 10;
  params.seed = 3;
  const auto report = classify_media(marker_bundle(30, 2), MediaType::kVideo, scorer, stub, params);
  EXPECT_EQ(report.media_type, MediaType::kVideo);
  EXPECT_EQ(report.frames_analyzed, 10u);
  std::set<std::size_t> frames;
  for (const auto& f : report.faces) {
    EXPECT_LT(f.frame_index, 30u);
    frames.insert(f.frame_index);
  }
  EXPECT_EQ(frames.size(), 10u);
}

TEST(ClassifyMedia, BlankImageHasNoFaces) {
  BrightnessScorer scorer;
  StubMarkerDetector stub;
  const auto report = classify_media(png(Image(200, 150, 128)), MediaType::kImage, scorer, stub);
  EXPECT_TRUE(report.faces.empty());
  EXPECT_EQ(report.aggregate.status, "no_face_detected");
  EXPECT_FALSE(report.aggregate.probability_fake);
  const auto j = json::parse(report.to_json());
  EXPECT_TRUE(j["aggregate"]["probability_fake"].is_null());
  EXPECT_EQ(j["aggregate"]["status"], "no_face_detected");
}

TEST(ClassifyMedia, UndecodablePayload) {
  BrightnessScorer scorer;
  StubMarkerDetector stub;
  const std::vector<std::uint8_t> junk(64, 0x42);
  EXPECT_THROW(classify_media(junk, MediaType::kImage, scorer, stub), DecodeError);
  EXPECT_THROW(classify_media(junk, MediaType::kVideo, scorer, stub), DecodeError);
}

TEST(ClassifyMedia, ReportJsonFieldOrder) {
  BrightnessScorer scorer;
  StubMarkerDetector stub;
  const auto text = classify_media(png(two_face_image()), MediaType::kImage, scorer, stub).to_json();
  const std::vector<std::string> keys{"\"media_type\"", "\"frames_analyzed\"", "\"faces\"",
                                      "\"aggregate\"", "\"model_id\""};
  std::size_t at = 0;
  for (const auto& k : keys) {
    const auto pos = text.find(k, at);
    ASSERT_NE(pos, std::string::npos) << k;
    at = pos;
  }
  const auto j = json::parse(text);
  EXPECT_EQ(j["media_type"], "image");
  EXPECT_EQ(j["faces"][0]["box"].size(), 5u);
  EXPECT_EQ(j["aggregate"]["threshold"], 0.5);
}

TEST(ServiceProperty, AggregateIsMeanAndLabelsFollowThreshold) {
  BrightnessScorer scorer;
  StubMarkerDetector stub;
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    // Random dark/bright markers on a grid so they never overlap.
    std::vector<synthetic::Marker> markers;
    for (int slot = 0; slot < 6; ++slot) {
      if (rng() % 2) continue;
      const std::uint8_t level = rng() % 2 ? 220 : 40;
      markers.push_back({10 + (slot % 3) * 130, 10 + (slot / 3) * 130, 100, std::nullopt, level});
    }
    const Image img = synthetic::frame(400, 270, markers, rng());
    ClassifyParams params;
    params.threshold = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    const auto report = classify_media(png(img), MediaType::kImage, scorer, stub, params);
    ASSERT_EQ(report.faces.size(), markers.size());
    if (markers.empty()) continue;
    double sum = 0;
    for (const auto& f : report.faces) {
      sum += f.probability_fake;
      ASSERT_EQ(f.label, f.probability_fake >= params.threshold ? Label::kFake : Label::kReal);
    }
    const double mean = sum / static_cast<double>(report.faces.size());
    ASSERT_NEAR(*report.aggregate.probability_fake, mean, 1e-12);
    // Any permutation of the faces gives the same mean.
    std::vector<double> ps;
    for (const auto& f : report.faces) ps.push_back(f.probability_fake);
    std::shuffle(ps.begin(), ps.end(), rng);
    ASSERT_NEAR(std::accumulate(ps.begin(), ps.end(), 0.0) / static_cast<double>(ps.size()),
                *report.aggregate.probability_fake, 1e-12);
    ASSERT_EQ(report.aggregate.label,
              *report.aggregate.probability_fake >= params.threshold ? Label::kFake : Label::kReal);
  }
}

TEST(ServiceProperty, SameSeedSameReport) {
  BrightnessScorer scorer;
  StubMarkerDetector stub;
  const auto video = marker_bundle(40, 6);
  ClassifyParams params;
  params.frames = 7;
  params.seed = 99;
  const auto a = classify_media(video, MediaType::kVideo, scorer, stub, params).to_json();
  const auto b = classify_media(video, MediaType::kVideo, scorer, stub, params).to_json();
  EXPECT_EQ(a, b);
  params.seed = 100;
  EXPECT_NE(a, classify_media(video, MediaType::kVideo, scorer, stub, params).to_json());
}

// ----------------------------------------------------------------- handler

ServiceConfig no_model_config(std::size_t limit_mb = 50) {
  ServiceConfig c;
  c.max_upload_mb = limit_mb;
  c.port = 0;
  return c;
}

PredictRequest upload(std::vector<std::uint8_t> bytes, std::string name) {
  PredictRequest r;
  r.content_length = bytes.size();
  r.file = UploadedFile{std::move(name), "application/octet-stream",
                        std::string(bytes.begin(), bytes.end())};
  return r;
}

std::string error_code(const HttpResponse& r) { return json::parse(r.body)["error"]["code"]; }

TEST(HandlePredict, MissingFile) {
  InferenceService svc(no_model_config());
  svc.set_scorer(std::make_shared<BrightnessScorer>());
  const auto r = svc.handle_predict(PredictRequest{});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(error_code(r), "missing_file");
}

TEST(HandlePredict, OversizeUploadIs413) {
  InferenceService svc(no_model_config(50));
  svc.set_scorer(std::make_shared<BrightnessScorer>());
  PredictRequest r = upload(png(Image(4, 4)), "a.png");
  r.content_length = 200u * 1024 * 1024;
  const auto resp = svc.handle_predict(r);
  EXPECT_EQ(resp.status, 413);
  EXPECT_EQ(error_code(resp), "payload_too_large");
}

TEST(HandlePredict, NoModelIs503) {
  InferenceService svc(no_model_config());
  const auto r = svc.handle_predict(upload(png(Image(4, 4)), "a.png"));
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(error_code(r), "model_not_loaded");
}

TEST(HandlePredict, ParameterAndMediaErrors) {
  InferenceService svc(no_model_config());
  svc.set_scorer(std::make_shared<BrightnessScorer>());
  for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"frames", "0"}, {"frames", "ten"}, {"threshold", "1.5"}, {"threshold", "-0.1"},
           {"seed", "x"}}) {
    auto r = upload(png(Image(4, 4)), "a.png");
    r.query[key] = value;
    const auto resp = svc.handle_predict(r);
    EXPECT_EQ(resp.status, 400) << key << "=" << value;
    EXPECT_EQ(error_code(resp), "invalid_parameter") << key;
  }
  const auto bad = svc.handle_predict(upload(std::vector<std::uint8_t>(32, 7), "notes.txt"));
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(error_code(bad), "unsupported_media");
  const auto corrupt = svc.handle_predict(upload(std::vector<std::uint8_t>(32, 7), "photo.png"));
  EXPECT_EQ(corrupt.status, 400);
  EXPECT_EQ(error_code(corrupt), "undecodable_media");
}

TEST(HandlePredict, SucceedsWithQueryParameters) {
  InferenceService svc(no_model_config());
  svc.set_scorer(std::make_shared<BrightnessScorer>());
  auto r = upload(marker_bundle(20, 4), "clip.vfb");
  r.query = {{"frames", "5"}, {"threshold", "0.9"}, {"seed", "1"}};
  const auto resp = svc.handle_predict(r);
  ASSERT_EQ(resp.status, 200) << resp.body;
  const auto j = json::parse(resp.body);
  EXPECT_EQ(j["media_type"], "video");
  EXPECT_EQ(j["frames_analyzed"], 5);
  EXPECT_EQ(j["aggregate"]["threshold"], 0.9);
}

class FailingBackend final : public DetectorBackend {
 public:
  std::string name() const override { return "failing"; }
  std::vector<FaceBox> detect(const Image&) const override { throw std::runtime_error("offline"); }
};

TEST(HandlePredict, DetectorFailureIs500) {
  register_detector("failing-test", [] { return std::make_unique<FailingBackend>(); });
  auto cfg = no_model_config();
  cfg.detector = "failing-test";
  InferenceService svc(cfg);
  svc.set_scorer(std::make_shared<BrightnessScorer>());
  const auto r = svc.handle_predict(upload(png(Image(8, 8)), "a.png"));
  EXPECT_EQ(r.status, 500);
  EXPECT_EQ(error_code(r), "detector_error");
}

TEST(Health, UnsetArtifactIs503) {
  InferenceService svc(no_model_config());
  const auto r = svc.health();
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(json::parse(r.body)["status"], "unavailable");
}

TEST(Health, BrokenArtifactIs503WithError) {
  testing::TempDir dir;
  auto cfg = no_model_config();
  cfg.model_artifact = dir / "missing";
  InferenceService svc(cfg);
  const auto r = svc.health();
  EXPECT_EQ(r.status, 503);
  EXPECT_TRUE(json::parse(r.body).contains("error"));
  EXPECT_TRUE(svc.last_error());
}

TEST(Health, ReloadSwapsModelId) {
  testing::TempDir dir;
  ModelConfig a;
  a.init_seed = 1;
  ModelConfig b;
  b.init_seed = 2;
  const auto first = export_model(Model(a), dir / "model", 0.2);
  auto cfg = no_model_config();
  cfg.model_artifact = dir / "model";
  InferenceService svc(cfg);
  auto h = json::parse(svc.health().body);
  EXPECT_EQ(h["status"], "ok");
  EXPECT_EQ(h["model_id"], first.model_id());
  EXPECT_EQ(h["backend_name"], "stub");

  const auto second = export_model(Model(b), dir / "model", 0.2);
  ASSERT_NE(first.model_id(), second.model_id());
  EXPECT_FALSE(svc.reload());
  h = json::parse(svc.health().body);
  EXPECT_EQ(h["model_id"], second.model_id());

  // A failed reload keeps serving the previous model.
  fs::remove(dir / "model" / "descriptor.json");
  EXPECT_TRUE(svc.reload());
  EXPECT_EQ(svc.health().status, 200);
  EXPECT_EQ(json::parse(svc.health().body)["model_id"], second.model_id());
}

// -------------------------------------------------------------------- HTTP

httplib::Result post_file(httplib::Client& c, const std::string& path, const std::string& content,
                          const std::string& filename) {
  httplib::MultipartFormDataItems items{{"file", content, filename, "application/octet-stream"}};
  return c.Post(path, items);
}

TEST(Http, EndToEndOverLoopback) {
  auto cfg = no_model_config(1);
  InferenceService svc(cfg);
  svc.set_scorer(std::make_shared<BrightnessScorer>());
  const int port = svc.start();
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(30, 0);

  const auto health = client.Get("/api/v1/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  const auto bytes = png(two_face_image());
  const auto ok = post_file(client, "/api/v1/predict?seed=1", std::string(bytes.begin(), bytes.end()),
                            "two.png");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  EXPECT_EQ(json::parse(ok->body)["faces"].size(), 2u);

  const auto missing = client.Post("/api/v1/predict", "", "application/octet-stream");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 400);
  EXPECT_EQ(json::parse(missing->body)["error"]["code"], "missing_file");

  // Just over the 1 MB limit: rejected by the handler.
  const std::string over(1024 * 1024 + 10, 'x');
  const auto slightly = post_file(client, "/api/v1/predict", over, "big.png");
  ASSERT_TRUE(slightly);
  EXPECT_EQ(slightly->status, 413);
  EXPECT_EQ(json::parse(slightly->body)["error"]["code"], "payload_too_large");

  // Far over: rejected by the transport before the body is read.
  const std::string huge(3 * 1024 * 1024, 'x');
  const auto far = post_file(client, "/api/v1/predict", huge, "huge.png");
  ASSERT_TRUE(far);
  EXPECT_EQ(far->status, 413);
  EXPECT_EQ(json::parse(far->body)["error"]["code"], "payload_too_large");

  const auto unknown = client.Get("/api/v1/nothing");
  ASSERT_TRUE(unknown);
  EXPECT_EQ(unknown->status, 404);
  svc.stop();
}

std::set<std::string> snapshot(const std::vector<fs::path>& roots) {
  std::set<std::string> all;
  for (const auto& r : roots) {
    const auto files = testing::list_files(r);
    all.insert(files.begin(), files.end());
  }
  return all;
}

TEST(Http, PrivacySweepLeavesNoFiles) {
  // Container payload prepared before the baseline snapshot.
  std::string avi;
  {
    testing::TempDir prep;
    const auto frames = synthetic::marker_video(12, 160, 120, Label::kFake, 8);
    write_video_file(prep / "clip.avi", frames);
    const auto bytes = testing::read_bytes(prep / "clip.avi");
    avi.assign(bytes.begin(), bytes.end());
  }
  const auto image = png(two_face_image());
  const auto bundle = marker_bundle(15, 3);
  const std::vector<std::pair<std::string, std::string>> payloads{
      {std::string(image.begin(), image.end()), "photo.png"},
      {std::string(bundle.begin(), bundle.end()), "clip.vfb"},
      {avi, "clip.avi"}};

  const std::vector<fs::path> roots{fs::temp_directory_path(), fs::current_path()};
  InferenceService svc(no_model_config());
  svc.set_scorer(std::make_shared<BrightnessScorer>());
  const int port = svc.start();
  const auto before = snapshot(roots);
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);
  int videos = 0;
  for (int i = 0; i < 10; ++i) {
    const auto& [content, name] = payloads[static_cast<std::size_t>(i) % payloads.size()];
    const auto r = post_file(client, "/api/v1/predict?frames=4&seed=" + std::to_string(i), content, name);
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200) << name << ": " << r->body;
    if (json::parse(r->body)["media_type"] == "video") {
      ++videos;
      EXPECT_EQ(json::parse(r->body)["frames_analyzed"], 4);
    }
  }
  svc.stop();
  EXPECT_EQ(videos, 6);
  const auto after = snapshot(roots);
  std::vector<std::string> created;
  std::set_difference(after.begin(), after.end(), before.begin(), before.end(),
                      std::back_inserter(created));
  EXPECT_TRUE(created.empty()) << created.front();
}

// --------------------------------------------------------------- golden

std::string strip_model_id(const std::string& body) {
  return std::regex_replace(body, std::regex("\"model_id\":\"[0-9a-f]*\""), "\"model_id\":\"\"");
}

TEST(Golden, FrozenModelImageReport) {
  const auto artifact = testing::data_dir() / "tiny_model";
  ASSERT_TRUE(fs::exists(artifact / "descriptor.json")) << "frozen artifact missing";
  auto cfg = no_model_config();
  cfg.model_artifact = artifact;
  InferenceService svc(cfg);
  auto r = upload(png(two_face_image()), "two.png");
  r.query["seed"] = "0";
  const auto resp = svc.handle_predict(r);
  ASSERT_EQ(resp.status, 200) << resp.body;
  const auto body = strip_model_id(resp.body) + "\n";
  const auto golden = testing::golden_dir() / "predict_two_faces.json";
  if (testing::regenerate_golden() || !fs::exists(golden)) {
    fs::create_directories(golden.parent_path());
    testing::write_text(golden, body);
    if (!testing::regenerate_golden()) GTEST_SKIP() << "golden created; rerun";
  }
  EXPECT_EQ(body, testing::read_text(golden));
}

}  // namespace
}  // namespace veriframe
