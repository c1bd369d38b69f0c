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

#include "veriframe/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "veriframe/csv.hpp"
#include "veriframe/datapipe.hpp"
#include "veriframe/error.hpp"

namespace veriframe {

std::vector<IndexRow> sample_test_set(const IndexTable& index, std::size_t n, std::uint64_t seed) {
  const auto rows = index.split_rows(Split::kTest);
  if (rows.empty()) throw DataError("test split has no rows");
  std::vector<IndexRow> picked;
  std::mt19937_64 rng(seed);
  std::sample(rows.begin(), rows.end(), std::back_inserter(picked), n, rng);
  return picked;
}

ConfusionMatrix confusion(std::span<const Label> labels, std::span<const double> probabilities_fake,
                          double threshold) {
  if (labels.size() != probabilities_fake.size()) {
    throw InvalidArgument("labels and probabilities differ in length (" +
                          std::to_string(labels.size()) + " vs " +
                          std::to_string(probabilities_fake.size()) + ")");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probabilities_fake[i];
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("probability outside [0, 1]");
    const bool predicted_fake = p >= threshold;
    if (labels[i] == Label::kFake) {
      ++(predicted_fake ? cm.tp : cm.fn);
    } else {
      ++(predicted_fake ? cm.fp : cm.tn);
    }
  }
  return cm;
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string format_number(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

std::string format_metric(const std::optional<double>& v) {
  return v ? format_number(*v) : "undefined";
}

std::string percent(double v, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v * 100.0 << '%';
  return out.str();
}

}  // namespace

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f_score = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

std::optional<double> metric_value(const Metrics& m, std::string_view name) {
  if (name == "precision") return m.precision;
  if (name == "recall") return m.recall;
  if (name == "f_score") return m.f_score;
  if (name == "accuracy") return m.accuracy;
  throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

bool ComparisonReport::is_best(const std::string& metric, const std::string& name) const {
  const auto it = best.find(metric);
  return it != best.end() && std::find(it->second.begin(), it->second.end(), name) != it->second.end();
}

ComparisonReport compare_models(const std::vector<NamedResult>& results) {
  if (results.empty()) throw InvalidArgument("compare_models needs at least one entry");
  ComparisonReport report;
  for (const auto& r : results) report.rows.push_back({r.name, r.cm, metrics(r.cm)});

  for (const char* metric : kMetricNames) {
    std::optional<double> top;
    for (const auto& row : report.rows) {
      const auto v = metric_value(row.metrics, metric);
      if (v && (!top || *v > *top)) top = v;
    }
    auto& names = report.best[metric];
    if (!top) continue;
    for (const auto& row : report.rows) {
      const auto v = metric_value(row.metrics, metric);
      if (v && *v == *top) names.push_back(row.name);
    }
    if (names.size() > 1) {
      std::string joined;
      for (const auto& n : names) joined += (joined.empty() ? "" : ", ") + n;
      report.footnotes.push_back("tie for best " + std::string(metric) + ": " + joined);
    }
  }

  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const auto& computed = report.rows[i].metrics.accuracy;
    if (r.reported_accuracy && computed &&
        std::abs(*r.reported_accuracy - *computed) > 0.00005) {
      report.footnotes.push_back(r.name + ": accuracy computed from the counts is " +
                                 percent(*computed, 2) + ", which differs from the reported " +
                                 format_number(*r.reported_accuracy * 100.0) + "%");
    }
    if (r.note) report.footnotes.push_back(r.name + ": " + *r.note);
  }
  return report;
}

std::string ComparisonReport::to_csv() const {
  std::string out = "model,tp,fp,tn,fn,precision,recall,f_score,accuracy\n";
  for (const auto& row : rows) {
    out += csv::join_record({row.name, std::to_string(row.cm.tp), std::to_string(row.cm.fp),
                        std::to_string(row.cm.tn), std::to_string(row.cm.fn),
                        format_metric(row.metrics.precision), format_metric(row.metrics.recall),
                        format_metric(row.metrics.f_score), format_metric(row.metrics.accuracy)});
    out += '\n';
  }
  return out;
}

std::string ComparisonReport::to_json() const {
  using nlohmann::ordered_json;
  auto value = [](const std::optional<double>& v) -> ordered_json {
    return v ? ordered_json(*v) : ordered_json("undefined");
  };
  ordered_json rows_json = ordered_json::array();
  ordered_json series = ordered_json::object();
  for (const char* metric : kMetricNames) series[metric] = ordered_json::array();
  ordered_json labels = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json best_for = ordered_json::array();
    for (const char* metric : kMetricNames) {
      if (is_best(metric, row.name)) best_for.push_back(metric);
    }
    rows_json.push_back({{"model", row.name},
                         {"tp", row.cm.tp},
                         {"fp", row.cm.fp},
                         {"tn", row.cm.tn},
                         {"fn", row.cm.fn},
                         {"precision", value(row.metrics.precision)},
                         {"recall", value(row.metrics.recall)},
                         {"f_score", value(row.metrics.f_score)},
                         {"accuracy", value(row.metrics.accuracy)},
                         {"best", best_for}});
    labels.push_back(row.name);
    for (const char* metric : kMetricNames) {
      series[metric].push_back(value(metric_value(row.metrics, metric)));
    }
  }
  ordered_json best_json = ordered_json::object();
  for (const char* metric : kMetricNames) best_json[metric] = best.at(metric);
  ordered_json doc = {{"positive_class", "FAKE"},
                      {"rows", rows_json},
                      {"best", best_json},
                      {"series", {{"models", labels}, {"values", series}}},
                      {"footnotes", footnotes}};
  return doc.dump(2) + "\n";
}

void write_report(const ComparisonReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  for (const auto& [name, text] :
       {std::pair{"report.csv", report.to_csv()}, std::pair{"report.json", report.to_json()}}) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error("cannot write " + (dir / name).string());
  }
}

std::vector<NamedResult> reference_results() {
  return {
      {"ResNet50", {106, 22, 103, 25}, 0.82081, std::nullopt},
      {"EfficientNetB0", {108, 20, 104, 24}, 0.8301, std::nullopt},
      {"InceptionResNetV2",
       {120, 8, 83, 45},
       0.9008,
       "fp repaired to 8 from the printed 87 (precision 0.93750 = 120/128; 87 makes the counts "
       "sum to 335, not 256)"},
  };
}

Evaluation evaluate_model(const Model& model, const IndexTable& index, std::size_t n,
                          std::uint64_t seed, double threshold, std::size_t batch_size) {
  Evaluation result;
  result.samples = sample_test_set(index, n, seed);
  const int size = model.input_size();
  std::vector<Label> labels;
  for (std::size_t begin = 0; begin < result.samples.size(); begin += batch_size) {
    const std::size_t end = std::min(result.samples.size(), begin + batch_size);
    Tensor batch({static_cast<int>(end - begin), size, size, 3});
    for (std::size_t i = begin; i < end; ++i) {
      const auto pixels = preprocess_sample(read_image(index.resolve(result.samples[i])), size);
      auto dst = batch.sample(static_cast<int>(i - begin));
      std::memcpy(dst.data(), pixels.data(), sizeof(double) * dst.size());
      labels.push_back(result.samples[i].label);
    }
    const auto p = model.predict(batch);
    result.probabilities.insert(result.probabilities.end(), p.begin(), p.end());
  }
  result.cm = confusion(labels, result.probabilities, threshold);
  result.metrics = metrics(result.cm);
  return result;
}

}  // namespace veriframe
