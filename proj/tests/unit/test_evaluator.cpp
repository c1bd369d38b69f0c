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
#include <set>

#include "support/test_support.hpp"
#include "veriframe/error.hpp"
#include "veriframe/evaluator.hpp"

namespace veriframe {
namespace {

using nlohmann::json;

TEST(Metrics, ResNetCounts) {
  const auto m = metrics({106, 22, 103, 25});
  EXPECT_NEAR(*m.precision, 0.828125, 1e-5);
  EXPECT_NEAR(*m.recall, 0.80916, 1e-5);
  EXPECT_NEAR(*m.f_score, 0.8185328, 1e-5);
  EXPECT_NEAR(*m.accuracy, 0.8164, 1e-4);
}

TEST(Metrics, EfficientNetCounts) {
  const auto m = metrics({108, 20, 104, 24});
  EXPECT_NEAR(*m.precision, 0.843750, 1e-5);
  EXPECT_NEAR(*m.recall, 0.818182, 1e-5);
  EXPECT_NEAR(*m.f_score, 0.8307692, 1e-5);
  EXPECT_NEAR(*m.accuracy, 0.8281, 1e-4);
}

TEST(Metrics, InceptionCountsWithRepairedFp) {
  // The printed precision 0.9375 = 120 / (120 + fp) pins fp at 8.
  const std::size_t fp = static_cast<std::size_t>(std::lround(120 / 0.9375 - 120));
  EXPECT_EQ(fp, 8u);
  const auto m = metrics({120, fp, 83, 45});
  EXPECT_NEAR(*m.precision, 0.93750, 1e-5);
  EXPECT_NEAR(*m.recall, 0.727273, 1e-5);
  EXPECT_NEAR(*m.f_score, 0.819112, 1e-5);
  EXPECT_NEAR(*m.accuracy, 0.7930, 1e-4);
  EXPECT_EQ(ConfusionMatrix({120, fp, 83, 45}).total(), 256u);
  EXPECT_EQ(ConfusionMatrix({120, 87, 83, 45}).total(), 335u);
}

TEST(Metrics, DegenerateDenominatorIsUndefined) {
  const auto m = metrics({0, 0, 10, 0});
  EXPECT_FALSE(m.precision);
  EXPECT_FALSE(m.recall);
  EXPECT_FALSE(m.f_score);
  EXPECT_EQ(m.accuracy, 1.0);
  const auto empty = metrics({});
  EXPECT_FALSE(empty.accuracy);
  // tp = 0 with both denominators defined: P = R = 0, F undefined.
  const auto zero = metrics({0, 3, 1, 2});
  EXPECT_EQ(zero.precision, 0.0);
  EXPECT_EQ(zero.recall, 0.0);
  EXPECT_FALSE(zero.f_score);
}

TEST(Confusion, HandCount) {
  const std::vector<Label> y{Label::kFake, Label::kFake};
  const std::vector<double> p{0.9, 0.2};
  EXPECT_EQ(confusion(y, p), (ConfusionMatrix{1, 0, 0, 1}));
}

TEST(Confusion, ThresholdTieIsFake) {
  const std::vector<Label> y{Label::kFake, Label::kReal};
  const std::vector<double> p{0.5, 0.5};
  EXPECT_EQ(confusion(y, p), (ConfusionMatrix{1, 1, 0, 0}));
}

TEST(Confusion, EmptyAndErrors) {
  EXPECT_EQ(confusion({}, {}), ConfusionMatrix{});
  const std::vector<Label> y{Label::kFake};
  const std::vector<double> two{0.1, 0.2};
  EXPECT_THROW(confusion(y, two), InvalidArgument);
  const std::vector<double> out_of_range{1.5};
  EXPECT_THROW(confusion(y, out_of_range), InvalidArgument);
}

struct Instance {
  std::vector<Label> labels;
  std::vector<double> p;
};

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(0, 60), coin(0, 1), grid(0, 20);
  Instance in;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    in.labels.push_back(coin(rng) ? Label::kFake : Label::kReal);
    // A coarse grid makes exact threshold ties common.
    in.p.push_back(grid(rng) / 20.0);
  }
  return in;
}

TEST(EvaluatorProperty, MatchesBruteForceOracle) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> thr(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_instance(rng);
    const double t = trial % 4 == 0 ? 0.5 : thr(rng);
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < in.p.size(); ++i) {
      const bool said_fake = !(in.p[i] < t);
      const bool is_fake = in.labels[i] == Label::kFake;
      tp += said_fake && is_fake;
      fp += said_fake && !is_fake;
      tn += !said_fake && !is_fake;
      fn += !said_fake && is_fake;
    }
    const auto cm = confusion(in.labels, in.p, t);
    ASSERT_EQ(cm, (ConfusionMatrix{static_cast<std::size_t>(tp), static_cast<std::size_t>(fp),
                                   static_cast<std::size_t>(tn), static_cast<std::size_t>(fn)}));
    ASSERT_EQ(cm.total(), in.p.size());
    const auto m = metrics(cm);
    if (tp + fp > 0) {
      ASSERT_NEAR(*m.precision, static_cast<double>(tp) / (tp + fp), 1e-12);
    } else {
      ASSERT_FALSE(m.precision);
    }
    if (tp + fn > 0) {
      ASSERT_NEAR(*m.recall, static_cast<double>(tp) / (tp + fn), 1e-12);
    } else {
      ASSERT_FALSE(m.recall);
    }
    if (m.precision && m.recall && *m.precision + *m.recall > 0) {
      const double pr = *m.precision, rc = *m.recall;
      ASSERT_NEAR(*m.f_score, 2 * pr * rc / (pr + rc), 1e-12);
    }
    if (!in.p.empty()) {
      ASSERT_NEAR(*m.accuracy, static_cast<double>(tp + tn) / in.p.size(), 1e-12);
    }
  }
}

TEST(EvaluatorProperty, ThresholdMonotonicity) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const auto in = random_instance(rng);
    ConfusionMatrix prev = confusion(in.labels, in.p, 0.0);
    for (int k = 1; k <= 21; ++k) {
      const auto cm = confusion(in.labels, in.p, k / 20.0);
      ASSERT_LE(cm.tp, prev.tp);
      ASSERT_GE(cm.tn, prev.tn);
      prev = cm;
    }
  }
}

TEST(EvaluatorProperty, RelabelingSwapsClassConditionalMetrics) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Label> y, y_swapped;
    std::vector<double> p, p_swapped;
    for (int i = 0; i < 40; ++i) {
      const Label l = u(rng) < 0.5 ? Label::kFake : Label::kReal;
      const double v = u(rng);  // continuous, so no exact ties at 0.5
      y.push_back(l);
      p.push_back(v);
      y_swapped.push_back(l == Label::kFake ? Label::kReal : Label::kFake);
      p_swapped.push_back(1.0 - v);
    }
    const auto a = confusion(y, p);
    const auto b = confusion(y_swapped, p_swapped);
    ASSERT_EQ(b, (ConfusionMatrix{a.tn, a.fn, a.tp, a.fp}));
    const auto ma = metrics(a);
    const auto mb = metrics(b);
    ASSERT_NEAR(*ma.accuracy, *mb.accuracy, 1e-12);
    if (a.tn + a.fn > 0) ASSERT_NEAR(*mb.precision, static_cast<double>(a.tn) / (a.tn + a.fn), 1e-12);
    if (a.tn + a.fp > 0) ASSERT_NEAR(*mb.recall, static_cast<double>(a.tn) / (a.tn + a.fp), 1e-12);
  }
}

TEST(Compare, ReferenceRowsFlagsAndFootnotes) {
  const auto report = compare_models(reference_results());
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_TRUE(report.is_best("precision", "InceptionResNetV2"));
  EXPECT_FALSE(report.is_best("precision", "ResNet50"));
  EXPECT_TRUE(report.is_best("accuracy", "EfficientNetB0"));
  auto has = [&](const std::string& s) {
    return std::any_of(report.footnotes.begin(), report.footnotes.end(),
                       [&](const std::string& f) { return f.find(s) != std::string::npos; });
  };
  EXPECT_TRUE(has("81.64%"));
  EXPECT_TRUE(has("82.081%"));
  EXPECT_TRUE(has("82.81%"));
  EXPECT_TRUE(has("83.01%"));
  EXPECT_TRUE(has("79.30%"));
  EXPECT_TRUE(has("90.08%"));
  EXPECT_TRUE(has("fp repaired to 8"));
}

TEST(Compare, SingleModelIsBestEverywhere) {
  const auto report = compare_models({{"only", {5, 1, 4, 2}, std::nullopt, std::nullopt}});
  for (const char* metric : kMetricNames) EXPECT_TRUE(report.is_best(metric, "only")) << metric;
  EXPECT_TRUE(report.footnotes.empty());
}

TEST(Compare, TiesFlagBothAndAreNoted) {
  const auto report = compare_models({{"a", {5, 1, 4, 2}, std::nullopt, std::nullopt},
                                      {"b", {4, 2, 5, 1}, std::nullopt, std::nullopt}});
  EXPECT_TRUE(report.is_best("accuracy", "a"));
  EXPECT_TRUE(report.is_best("accuracy", "b"));
  EXPECT_TRUE(std::any_of(report.footnotes.begin(), report.footnotes.end(), [](const std::string& f) {
    return f.find("tie for best accuracy") != std::string::npos;
  }));
}

TEST(Compare, UndefinedMetricsAreNeverBestAndPrintedExplicitly) {
  const auto report = compare_models({{"none", {0, 0, 10, 0}, std::nullopt, std::nullopt},
                                      {"some", {1, 1, 1, 1}, std::nullopt, std::nullopt}});
  EXPECT_FALSE(report.is_best("precision", "none"));
  EXPECT_TRUE(report.is_best("precision", "some"));
  EXPECT_NE(report.to_csv().find("none,0,0,10,0,undefined,undefined,undefined,1"), std::string::npos);
  const auto j = json::parse(report.to_json());
  EXPECT_EQ(j["rows"][0]["precision"], "undefined");
}

TEST(Report, WritesCsvAndJson) {
  testing::TempDir dir;
  write_report(compare_models(reference_results()), dir / "out");
  const auto csv = testing::read_text(dir / "out" / "report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,tp,fp,tn,fn,precision,recall,f_score,accuracy");
  EXPECT_NE(csv.find("ResNet50,106,22,103,25,"), std::string::npos);
  const auto j = json::parse(testing::read_text(dir / "out" / "report.json"));
  ASSERT_EQ(j["rows"].size(), 3u);
  EXPECT_EQ(j["rows"][2]["fp"], 8);
  EXPECT_NEAR(j["rows"][2]["precision"].get<double>(), 0.9375, 1e-12);
  EXPECT_FALSE(j["footnotes"].empty());
}

IndexTable rows_in_test(std::size_t n) {
  IndexTable t;
  t.root = "/x";
  for (std::size_t i = 0; i < n; ++i) {
    t.rows.push_back({"c" + std::to_string(i) + ".png", "v", Label::kReal, Split::kTest, i, 0});
  }
  t.rows.push_back({"train.png", "v", Label::kFake, Split::kTrain, 0, 0});
  return t;
}

TEST(SampleTestSet, DrawsDistinctRows) {
  const auto s = sample_test_set(rows_in_test(500), 128, 1);
  ASSERT_EQ(s.size(), 128u);
  std::set<std::string> names;
  for (const auto& r : s) {
    names.insert(r.crop_path);
    EXPECT_EQ(r.split, Split::kTest);
  }
  EXPECT_EQ(names.size(), 128u);
}

TEST(SampleTestSet, ExhaustsSmallSplit) {
  EXPECT_EQ(sample_test_set(rows_in_test(50), 128, 1).size(), 50u);
}

TEST(SampleTestSet, SeededSelection) {
  const auto t = rows_in_test(300);
  EXPECT_EQ(sample_test_set(t, 128, 9), sample_test_set(t, 128, 9));
  EXPECT_NE(sample_test_set(t, 128, 9), sample_test_set(t, 128, 10));
}

TEST(SampleTestSet, EmptyTestSplitIsAnError) {
  EXPECT_THROW(sample_test_set(rows_in_test(0), 128, 1), DataError);
}

TEST(SampleTestSet, RoughlyUniform) {
  // Each of 200 rows should be picked about 128/200 of the time.
  const auto t = rows_in_test(200);
  std::vector<int> hits(200, 0);
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    for (const auto& r : sample_test_set(t, 128, seed)) ++hits[r.frame_index];
  }
  for (int h : hits) {
    EXPECT_GT(h, 200);  // mean 256, sd ~9.6
    EXPECT_LT(h, 310);
  }
}

}  // namespace
}  // namespace veriframe
