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

#include <map>
#include <random>

#include "support/test_support.hpp"
#include "veriframe/config.hpp"
#include "veriframe/error.hpp"

namespace veriframe {
namespace {

std::function<const char*(const char*)> fake_env(const std::map<std::string, std::string>& vars) {
  return [vars](const char* name) -> const char* {
    const auto it = vars.find(name);
    return it == vars.end() ? nullptr : it->second.c_str();
  };
}

TEST(Toml, SectionsScalarsAndComments) {
  const auto m = parse_toml(
      "seed = 4  # top level\n"
      "[trainer]\n"
      "epochs = 20\n"
      "learning_rate = 3e-3\n"
      "checkpoint_dir = \"ckpt # not a comment\"\n"
      "\n"
      "[service]\n"
      "host = \"0.0.0.0\"\n"
      "name = \"tab\\there \\\"q\\\"\"\n");
  EXPECT_EQ(m.at("seed"), "4");
  EXPECT_EQ(m.at("trainer.epochs"), "20");
  EXPECT_EQ(m.at("trainer.learning_rate"), "3e-3");
  EXPECT_EQ(m.at("trainer.checkpoint_dir"), "ckpt # not a comment");
  EXPECT_EQ(m.at("service.host"), "0.0.0.0");
  EXPECT_EQ(m.at("service.name"), "tab\there \"q\"");
}

TEST(Toml, ErrorsCarryLineNumbers) {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_toml(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message("a = 1\na = 2\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("[x\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("ok = 1\nnot a pair\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("a = [1, 2]\n").find("not supported"), std::string::npos);
  EXPECT_NE(message("a = \"open\n").find("unterminated"), std::string::npos);
  EXPECT_NE(message("a =\n").find("missing value"), std::string::npos);
}

TEST(Config, DefaultsCoverModuleKeys) {
  const auto c = Config::with_defaults();
  EXPECT_EQ(c.unsigned_integer("trainer.batch_size"), 32u);
  EXPECT_DOUBLE_EQ(c.real("trainer.learning_rate"), 1e-4);
  EXPECT_EQ(c.unsigned_integer("evaluator.n"), 128u);
  EXPECT_EQ(c.unsigned_integer("service.max_upload_mb"), 50u);
  EXPECT_EQ(c.unsigned_integer("ingest.frames_per_video"), 10u);
  EXPECT_EQ(c.str("ingest.sampling"), "uniform");
  EXPECT_EQ(c.integer("ingest.crop_size"), 256);
  EXPECT_EQ(c.str("model.head_output"), "softmax_2");
  EXPECT_TRUE(c.boolean("datapipe.augment"));
  EXPECT_EQ(c.source("seed"), ConfigLayer::kDefault);
}

TEST(Config, EnvironmentNames) {
  EXPECT_EQ(env_name("service.max_upload_mb"), "VERIFRAME_SERVICE_MAX_UPLOAD_MB");
  EXPECT_EQ(env_name("seed"), "VERIFRAME_SEED");
}

TEST(Config, PrecedenceFlagsEnvFileDefaults) {
  testing::TempDir dir;
  testing::write_text(dir / "veriframe.toml",
                      "seed = 1\n[trainer]\nepochs = 3\nbatch_size = 8\n[evaluator]\nn = 64\n");
  auto c = Config::with_defaults();
  c.load_file(dir / "veriframe.toml");
  c.load_environment(fake_env({{"VERIFRAME_TRAINER_EPOCHS", "5"}, {"VERIFRAME_SEED", "2"}}));
  c.set("seed", "3", ConfigLayer::kFlag);
  EXPECT_EQ(c.integer("seed"), 3);
  EXPECT_EQ(c.source("seed"), ConfigLayer::kFlag);
  EXPECT_EQ(c.integer("trainer.epochs"), 5);
  EXPECT_EQ(c.source("trainer.epochs"), ConfigLayer::kEnvironment);
  EXPECT_EQ(c.integer("trainer.batch_size"), 8);
  EXPECT_EQ(c.source("trainer.batch_size"), ConfigLayer::kFile);
  EXPECT_EQ(c.integer("evaluator.n"), 64);
  EXPECT_EQ(c.source("trainer.learning_rate"), ConfigLayer::kDefault);
}

TEST(ConfigProperty, PrecedenceIndependentOfLoadOrder) {
  const std::vector<ConfigLayer> layers{ConfigLayer::kDefault, ConfigLayer::kFile,
                                        ConfigLayer::kEnvironment, ConfigLayer::kFlag};
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<ConfigLayer, std::string>> writes;
    for (const auto layer : layers) {
      if (rng() % 2) writes.push_back({layer, std::to_string(static_cast<int>(layer) * 100 + trial)});
    }
    std::shuffle(writes.begin(), writes.end(), rng);
    auto c = Config::with_defaults();
    std::string expected = "0";
    ConfigLayer top = ConfigLayer::kDefault;
    for (const auto& [layer, value] : writes) {
      c.set("seed", value, layer);
      if (layer >= top) {
        top = layer;
        expected = value;
      }
    }
    // Highest layer wins; within one layer there is a single write.
    ASSERT_EQ(c.str("seed"), expected);
    ASSERT_EQ(c.source("seed"), top);
  }
}

TEST(Config, UnknownKeysRejected) {
  testing::TempDir dir;
  testing::write_text(dir / "bad.toml", "[trainer]\nepoch = 3\n");
  auto c = Config::with_defaults();
  EXPECT_THROW(c.load_file(dir / "bad.toml"), ConfigError);
  EXPECT_THROW(c.set("nope", "1", ConfigLayer::kFlag), ConfigError);
  EXPECT_THROW(c.load_file(dir / "absent.toml"), ConfigError);
}

TEST(Config, TypedAccessorsReject) {
  auto c = Config::with_defaults();
  c.set("trainer.epochs", "ten", ConfigLayer::kFlag);
  EXPECT_THROW(c.integer("trainer.epochs"), ConfigError);
  c.set("seed", "-1", ConfigLayer::kFlag);
  EXPECT_THROW(c.unsigned_integer("seed"), ConfigError);
  c.set("evaluator.threshold", "0.5x", ConfigLayer::kFlag);
  EXPECT_THROW(c.real("evaluator.threshold"), ConfigError);
  c.set("datapipe.cache", "maybe", ConfigLayer::kFlag);
  EXPECT_THROW(c.boolean("datapipe.cache"), ConfigError);
  c.set("datapipe.augment", "off", ConfigLayer::kFlag);
  EXPECT_FALSE(c.boolean("datapipe.augment"));
}

}  // namespace
}  // namespace veriframe
