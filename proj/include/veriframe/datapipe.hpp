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
 * @brief Batched sample stream: ordered read -> decode/resize map -> optional
 * cache -> bounded prefetch
 *
 * Batch order is fixed by the (optionally seeded) sample permutation of each
 * epoch. Map workers and the prefetch thread never change that order; the
 * consumer sees at most `prefetch_depth` finished batches ahead of it.
 */

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "veriframe/image.hpp"
#include "veriframe/ingest.hpp"
#include "veriframe/tensor.hpp"

namespace veriframe {

/// Resizes a crop to target_size^2 and scales channels to [0, 1]. Output is
/// laid out H x W x 3.
std::vector<double> preprocess_sample(const Image& crop, int target_size);

struct Sample {
  std::vector<double> pixels;
  double label = 0.0;  // 0 = REAL, 1 = FAKE
  std::string source_id;
};

struct Batch {
  Tensor pixels;  // (B, S, S, 3)
  std::vector<double> labels;
  std::vector<std::string> source_ids;
};

/// Decodes the crop at a resolved path. Swappable for instrumentation.
using SampleLoader = std::function<Image(const std::filesystem::path&)>;

struct StreamOptions {
  std::size_t batch_size = 32;
  int target_size = 256;
  /// nullopt keeps index order (sequential read).
  std::optional<std::uint64_t> shuffle_seed;
  bool cache = false;
  std::size_t prefetch_depth = 2;
  /// Random horizontal flips (p = 0.5). Only applied to the train split.
  bool augment = true;
  std::uint64_t augment_seed = 0;
  unsigned map_workers = 1;
};

class BatchStream {
 public:
  /// Streams the rows of `table` belonging to `split`. Throws DataError when
  /// the split is empty.
  BatchStream(const IndexTable& table, Split split, StreamOptions options,
              SampleLoader loader = {});

  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] std::size_t batches_per_epoch() const;
  [[nodiscard]] const StreamOptions& options() const;
  [[nodiscard]] Split split() const;

  /// Sample order (indices into the split's rows) for `epoch`.
  [[nodiscard]] std::vector<std::size_t> order(std::size_t epoch) const;

  /// Number of times the loader has been invoked so far.
  [[nodiscard]] std::size_t decode_count() const;

  class Epoch {
   public:
    Epoch(Epoch&&) noexcept;
    Epoch& operator=(Epoch&&) noexcept;
    ~Epoch();

    /// Next batch in order, or nullopt at the end of the epoch. Rethrows
    /// decode errors raised by the map stage.
    std::optional<Batch> next();

   private:
    friend class BatchStream;
    struct Impl;
    explicit Epoch(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
  };

  [[nodiscard]] Epoch epoch(std::size_t epoch_index) const;

  struct State;

 private:
  std::shared_ptr<State> state_;
};

BatchStream build_stream(const IndexTable& table, Split split,
                         const StreamOptions& options, SampleLoader loader = {});

}  // namespace veriframe
