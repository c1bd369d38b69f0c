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

#include <cmath>
#include <numeric>
#include <random>

#include "veriframe/activations.hpp"
#include "veriframe/error.hpp"

namespace veriframe {
namespace {

// exp(x) by a long-double Taylor series with argument halving; independent of
// the library exp used by the implementation.
long double series_exp(long double x) {
  int halvings = 0;
  while (std::fabs(static_cast<double>(x)) > 0.5L) {
    x /= 2;
    ++halvings;
  }
  long double term = 1, sum = 1;
  for (int k = 1; k < 40; ++k) {
    term *= x / k;
    sum += term;
  }
  for (int i = 0; i < halvings; ++i) sum *= sum;
  return sum;
}

long double oracle_sigmoid(long double x) { return 1.0L / (1.0L + series_exp(-x)); }

TEST(Sigmoid, Zero) { EXPECT_EQ(sigmoid(0.0), 0.5); }

TEST(Sigmoid, TwoAgainstSeriesOracle) {
  const long double expected = oracle_sigmoid(2.0L);
  EXPECT_NEAR(static_cast<double>(expected), 0.8807970779778824, 1e-15);
  EXPECT_NEAR(sigmoid(2.0), static_cast<double>(expected), 1e-15);
}

TEST(Sigmoid, StableAtLargeMagnitudes) {
  for (double x : {500.0, -500.0, 709.0, -745.0, 1e6, -1e6}) {
    const double s = sigmoid(x);
    EXPECT_TRUE(std::isfinite(s)) << x;
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  EXPECT_EQ(sigmoid(500.0), 1.0);
  EXPECT_GT(sigmoid(-500.0), 0.0);
  EXPECT_NEAR(std::log(sigmoid(-500.0)), -500.0, 1e-9);
}

TEST(SigmoidProperty, ComplementAndOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(-40.0, 40.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = x(rng);
    ASSERT_NEAR(sigmoid(v) + sigmoid(-v), 1.0, 1e-15) << v;
    ASSERT_NEAR(sigmoid(v), static_cast<double>(oracle_sigmoid(v)), 1e-15) << v;
  }
}

TEST(Softmax, UniformInputs) {
  const std::vector<double> z{0, 0, 0};
  for (double p : softmax(z)) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LnTwo) {
  const std::vector<double> z{std::log(2.0), 0.0};
  const auto p = softmax(z);
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, EmptyIsAnError) { EXPECT_THROW(softmax({}), InvalidArgument); }

TEST(Softmax, LargeInputsDoNotOverflow) {
  const std::vector<double> z{1000.0, 999.0, -1000.0};
  const auto p = softmax(z);
  for (double v : p) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(p[0], sigmoid(1.0), 1e-12);
}

TEST(SoftmaxProperty, MatchesNaiveFormula) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-10.0, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> z(8);
    for (auto& v : z) v = d(rng);
    std::vector<double> naive(8);
    double sum = 0;
    for (std::size_t i = 0; i < 8; ++i) sum += naive[i] = std::exp(z[i]);
    for (auto& v : naive) v /= sum;
    const auto p = softmax(z);
    for (std::size_t i = 0; i < 8; ++i) ASSERT_NEAR(p[i], naive[i], 1e-12);
    ASSERT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    for (double v : p) {
      ASSERT_GT(v, 0.0);
      ASSERT_LT(v, 1.0);
    }
  }
}

TEST(SoftmaxProperty, ShiftInvariance) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-20.0, 20.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> z(5);
    for (auto& v : z) v = d(rng);
    const double c = d(rng) * 10;
    std::vector<double> shifted = z;
    for (auto& v : shifted) v += c;
    const auto a = softmax(z);
    const auto b = softmax(shifted);
    for (std::size_t i = 0; i < z.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-9);
    ASSERT_EQ(std::max_element(a.begin(), a.end()) - a.begin(),
              std::max_element(z.begin(), z.end()) - z.begin());
  }
}

TEST(ActivationProperty, SigmoidSoftmaxBridge) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> d(-30.0, 30.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double z = d(rng);
    const std::vector<double> pair{z, 0.0};
    ASSERT_NEAR(softmax(pair)[0], sigmoid(z), 1e-9) << z;
  }
}

TEST(Softplus, MatchesLogOnePlusExp) {
  for (double x : {-30.0, -2.0, 0.0, 1.5, 30.0}) {
    EXPECT_NEAR(softplus(x), std::log1p(std::exp(x)), 1e-12) << x;
  }
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-9);
}

}  // namespace
}  // namespace veriframe
