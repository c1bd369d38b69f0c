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

#include <nlohmann/json.hpp>
#include <random>

#include "support/test_support.hpp"
#include "veriframe/artifact.hpp"
#include "veriframe/error.hpp"

namespace veriframe {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

Tensor random_batch(int n, int size, std::uint64_t seed) {
  Tensor t({n, size, size, 3});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (auto& v : t.values()) v = d(rng);
  return t;
}

Model seeded_model(std::uint64_t seed, HeadOutput head = HeadOutput::kSoftmax2) {
  ModelConfig cfg;
  cfg.init_seed = seed;
  cfg.head_output = head;
  return Model(cfg);
}

std::string message_of(const fs::path& p) {
  try {
    load_model(p);
  } catch (const ArtifactError& e) {
    return e.what();
  }
  return "";
}

void edit_descriptor(const fs::path& dir, const std::function<void(json&)>& edit) {
  json j = json::parse(testing::read_text(dir / "descriptor.json"));
  edit(j);
  testing::write_text(dir / "descriptor.json", j.dump(2));
}

TEST(Sha256, KnownVectors) {
  const std::string abc = "abc";
  EXPECT_EQ(sha256_hex({reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()}),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex({}), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

class RoundTrip : public ::testing::TestWithParam<HeadOutput> {};

TEST_P(RoundTrip, PredictionsSurviveExportAndLoad) {
  testing::TempDir dir;
  const Model m = seeded_model(3, GetParam());
  const auto art = export_model(m, dir / "model", 0.2);
  const auto loaded = load_model(dir / "model");
  EXPECT_EQ(loaded.artifact.checksum, art.checksum);
  EXPECT_EQ(loaded.artifact.descriptor.config.head_output, GetParam());
  EXPECT_EQ(loaded.artifact.descriptor.crop_margin, 0.2);
  EXPECT_EQ(loaded.artifact.descriptor.normalization, kUnitRangeNormalization);
  EXPECT_EQ(loaded.artifact.descriptor.positive_class, "FAKE");
  EXPECT_EQ(loaded.artifact.descriptor.parameter_count, m.network().parameter_count());
  const auto x = random_batch(5, 64, 8);
  const auto a = m.predict(x);
  const auto b = loaded.model->predict(x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-6);
  const Tensor zero({1, 64, 64, 3});
  EXPECT_EQ(m.predict(zero), loaded.model->predict(zero));
}

INSTANTIATE_TEST_SUITE_P(Heads, RoundTrip,
                         ::testing::Values(HeadOutput::kSoftmax2, HeadOutput::kSigmoid1));

TEST(Artifact, ChecksumMatchesWeightsBlob) {
  testing::TempDir dir;
  const Model m = seeded_model(1);
  const auto art = export_model(m, dir.path(), 0.2);
  const auto blob = testing::read_bytes(dir / "weights.bin");
  EXPECT_EQ(art.checksum, sha256_hex(blob));
  EXPECT_EQ(blob.size(), m.network().parameter_count() * sizeof(double));
  EXPECT_EQ(art.model_id(), art.checksum.substr(0, 12));
}

TEST(Artifact, TamperedWeightsFailChecksum) {
  testing::TempDir dir;
  export_model(seeded_model(1), dir.path(), 0.2);
  auto blob = testing::read_bytes(dir / "weights.bin");
  blob[blob.size() / 2] ^= 0x01;
  testing::write_text(dir / "weights.bin", std::string(blob.begin(), blob.end()));
  EXPECT_NE(message_of(dir.path()).find("checksum"), std::string::npos);
}

TEST(Artifact, MissingDescriptorFieldIsNamed) {
  for (const std::string field : {"backbone", "input_size", "head_output", "normalization",
                                  "crop_margin", "format_version", "parameter_count"}) {
    testing::TempDir dir;
    export_model(seeded_model(1), dir.path(), 0.2);
    edit_descriptor(dir.path(), [&](json& j) { j.erase(field); });
    EXPECT_NE(message_of(dir.path()).find("'" + field + "'"), std::string::npos) << field;
  }
}

TEST(Artifact, MissingDescriptorFile) {
  testing::TempDir dir;
  export_model(seeded_model(1), dir.path(), 0.2);
  fs::remove(dir / "descriptor.json");
  EXPECT_NE(message_of(dir.path()).find("descriptor"), std::string::npos);
}

TEST(Artifact, UnsupportedVersion) {
  testing::TempDir dir;
  export_model(seeded_model(1), dir.path(), 0.2);
  edit_descriptor(dir.path(), [](json& j) { j["format_version"] = 999; });
  EXPECT_NE(message_of(dir.path()).find("unsupported version"), std::string::npos);
}

TEST(Artifact, InconsistentDescriptorRejected) {
  testing::TempDir dir;
  export_model(seeded_model(1), dir.path(), 0.2);
  edit_descriptor(dir.path(), [](json& j) { j["input_size"] = 224; });
  EXPECT_THROW(load_model(dir.path()), ArtifactError);
  testing::TempDir dir2;
  export_model(seeded_model(1), dir2.path(), 0.2);
  edit_descriptor(dir2.path(), [](json& j) { j["head_hidden_units"] = 8; });
  EXPECT_THROW(load_model(dir2.path()), ArtifactError);
}

TEST(Artifact, MissingDirectory) {
  EXPECT_THROW(load_model("/nonexistent/artifact"), ArtifactError);
}

TEST(ArtifactProperty, ExportOfLoadedModelIsIdempotent) {
  for (std::uint64_t seed : {0u, 5u, 19u}) {
    testing::TempDir dir;
    const auto first = export_model(seeded_model(seed), dir / "a", 0.3);
    const auto loaded = load_model(dir / "a");
    const auto second = export_model(*loaded.model, dir / "b", loaded.artifact.descriptor.crop_margin);
    EXPECT_EQ(first.checksum, second.checksum);
    EXPECT_EQ(testing::read_text(dir / "a" / "descriptor.json"),
              testing::read_text(dir / "b" / "descriptor.json"));
  }
}

// A checked-in artifact guards the on-disk format against silent changes.
TEST(ArtifactProperty, FrozenArtifactStillLoads) {
  const auto frozen = testing::data_dir() / "tiny_model";
  const Model reference = seeded_model(7);
  if (testing::regenerate_golden() || !fs::exists(frozen / "descriptor.json")) {
    export_model(reference, frozen, 0.2);
    if (!testing::regenerate_golden()) GTEST_SKIP() << "frozen artifact created; rerun";
  }
  const auto loaded = load_model(frozen);
  EXPECT_EQ(loaded.artifact.checksum, sha256_hex(serialize_weights(reference)));
  const auto x = random_batch(2, 64, 1);
  EXPECT_EQ(loaded.model->predict(x), reference.predict(x));
}

}  // namespace
}  // namespace veriframe
