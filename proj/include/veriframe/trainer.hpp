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
 * @brief Fine-tuning loop: Adam on mean binary cross-entropy, keeping the
 * parameters of the epoch with the best validation accuracy
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "veriframe/datapipe.hpp"
#include "veriframe/model.hpp"

namespace veriframe {

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  int epochs = 10;
  std::uint64_t seed = 0;
  /// When set, the best model so far is exported to <dir>/best and the
  /// history is written to <dir>/history.csv.
  std::optional<std::filesystem::path> checkpoint_dir;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;

  /// Throws InvalidArgument on a non-positive field.
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Adam over the trainable parameters of a network.
class Adam {
 public:
  Adam(double learning_rate, double beta1, double beta2, double epsilon);

  /// One update; `grads` is aligned with `params`. Non-trainable entries are
  /// skipped.
  void step(std::span<nn::Param* const> params, const std::vector<Tensor>& grads);

  [[nodiscard]] long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

/// Mean loss and accuracy (threshold 0.5) of `model` over one pass of
/// `stream`.
struct StreamScore {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t samples = 0;
};
StreamScore score_stream(const Model& model, const BatchStream& stream, std::size_t epoch = 0);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains a fresh model built from `config`. The returned model carries the
/// parameters of the best validation epoch (earliest on ties). Throws
/// TrainingDiverged on a non-finite loss and ModelError when the stream
/// target size differs from the backbone input size.
TrainResult train(const ModelConfig& config, const BatchStream& train_stream,
                  const BatchStream& val_stream, const TrainConfig& tcfg,
                  const EpochCallback& on_epoch = {});

}  // namespace veriframe
