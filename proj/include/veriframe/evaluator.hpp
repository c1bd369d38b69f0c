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
 * @brief Test-set sampling, confusion matrices, metrics and comparison reports
 *
 * The positive class is FAKE and a probability equal to the threshold counts
 * as FAKE. A metric whose denominator is zero is nullopt, never 0.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veriframe/ingest.hpp"
#include "veriframe/manifest.hpp"
#include "veriframe/model.hpp"

namespace veriframe {

inline constexpr std::size_t kDefaultTestSample = 128;

/// min(n, available) distinct test-split rows, chosen uniformly without
/// replacement under `seed`, in index order. Throws DataError when the test
/// split is empty.
std::vector<IndexRow> sample_test_set(const IndexTable& index, std::size_t n, std::uint64_t seed);

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  [[nodiscard]] std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws InvalidArgument on a length mismatch or a probability outside
/// [0, 1].
ConfusionMatrix confusion(std::span<const Label> labels, std::span<const double> probabilities_fake,
                          double threshold = 0.5);

struct Metrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_score;
  std::optional<double> accuracy;
};

Metrics metrics(const ConfusionMatrix& cm);

inline constexpr const char* kMetricNames[] = {"precision", "recall", "f_score", "accuracy"};
std::optional<double> metric_value(const Metrics& m, std::string_view name);

struct NamedResult {
  std::string name;
  ConfusionMatrix cm;
  /// Accuracy as published alongside the counts, when it exists.
  std::optional<double> reported_accuracy;
  /// Free-form provenance remark carried into the report footnotes.
  std::optional<std::string> note;
};

struct ComparisonRow {
  std::string name;
  ConfusionMatrix cm;
  Metrics metrics;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  /// Metric name -> names of the rows holding the best value.
  std::map<std::string, std::vector<std::string>> best;
  std::vector<std::string> footnotes;

  [[nodiscard]] bool is_best(const std::string& metric, const std::string& name) const;
  [[nodiscard]] std::string to_csv() const;
  [[nodiscard]] std::string to_json() const;
};

/// Flags the best row per metric (all tied rows flagged, with a footnote) and
/// footnotes every reported accuracy that differs from the computed one by
/// more than 0.005 percentage points. Throws InvalidArgument on empty input.
ComparisonReport compare_models(const std::vector<NamedResult>& results);

/// Writes report.csv and report.json into `dir`.
void write_report(const ComparisonReport& report, const std::filesystem::path& dir);

/// Published per-backbone confusion counts. The InceptionResNetV2 false
/// positive count is 8: the printed 87 contradicts its own precision and the
/// 256-image total.
std::vector<NamedResult> reference_results();

struct Evaluation {
  std::vector<IndexRow> samples;
  std::vector<double> probabilities;
  ConfusionMatrix cm;
  Metrics metrics;
};

/// Samples the test split, scores every crop with `model` and tallies.
Evaluation evaluate_model(const Model& model, const IndexTable& index, std::size_t n,
                          std::uint64_t seed, double threshold = 0.5, std::size_t batch_size = 32);

}  // namespace veriframe
