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
 * @brief Backbone registry and the binary real/fake classifier built on it
 *
 * Every public prediction is probability_fake. The two head
 * parameterisations are equivalent:
 *
 *  - softmax_2: two logits (z_real, z_fake); p_fake = softmax(z)[1].
 *  - sigmoid_1: one neuron modelling p_real = S(z); p_fake = 1 - S(z).
 *
 * since softmax([a, b])[1] = S(b - a).
 */

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veriframe/nn.hpp"

namespace veriframe {

enum class Backbone { kResNet50, kEfficientNetB0, kInceptionResNetV2, kTinyTest };

struct BackboneSpec {
  Backbone id = Backbone::kTinyTest;
  std::string name;
  int input_size = 0;
  /// Published layer depth; nullopt when no figure is quoted.
  std::optional<int> nominal_depth;
  /// Whether pretrained weights are bound at build time. The in-repo builders
  /// always initialise randomly; pretrained weights arrive via load_model().
  bool pretrained = false;
};

/// Throws ModelError for unregistered names.
BackboneSpec backbone_spec(std::string_view name);
std::vector<std::string> registered_backbones();

/// Feature extractor for `spec`, ending in global average pooling.
nn::Network build_backbone(const BackboneSpec& spec, std::uint64_t seed);

enum class HeadOutput { kSigmoid1, kSoftmax2 };

std::string_view to_string(HeadOutput head);
std::optional<HeadOutput> parse_head_output(std::string_view token);

struct ModelConfig {
  BackboneSpec backbone = backbone_spec("tiny_test");
  int head_hidden_units = 16;
  HeadOutput head_output = HeadOutput::kSoftmax2;
  std::uint64_t init_seed = 0;
};

/// Backbone + dense head. Immutable inference is safe to call concurrently.
class Model {
 public:
  explicit Model(ModelConfig config);

  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] int input_size() const { return config_.backbone.input_size; }

  /// Batch (B, S, S, 3) with S = input_size -> B probabilities of FAKE.
  [[nodiscard]] std::vector<double> predict(const Tensor& batch) const;

  /// Raw head logits for a batch, shaped (B, 1, 1, K).
  [[nodiscard]] Tensor logits(const Tensor& batch) const;

  struct LossResult {
    double loss = 0.0;  // mean binary cross-entropy
    std::vector<double> probabilities;
  };
  /// Mean binary cross-entropy against labels in {0 = REAL, 1 = FAKE}.
  /// Adds d(loss)/d(param) into `grads` (aligned with network().parameters()).
  LossResult loss_and_gradients(const Tensor& batch, std::span<const double> labels,
                                std::vector<Tensor>& grads) const;
  /// Loss only; no gradient work.
  [[nodiscard]] double loss(const Tensor& batch, std::span<const double> labels) const;

  [[nodiscard]] nn::Network& network() { return net_; }
  [[nodiscard]] const nn::Network& network() const { return net_; }

 private:
  void check_batch(const Tensor& batch) const;
  /// Fake-class logit t per sample, so that p_fake = S(t).
  [[nodiscard]] std::vector<double> fake_logits(const Tensor& logits) const;

  ModelConfig config_;
  nn::Network net_;
};

Model build_model(const ModelConfig& config);

}  // namespace veriframe
