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
 * @brief Logistic sigmoid and softmax, overflow-free for large magnitudes
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "veriframe/error.hpp"

namespace veriframe {

/// S(x) = 1 / (1 + e^-x). Only ever exponentiates a non-positive number.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// sigma(z)_i = e^{z_i} / sum_j e^{z_j}, evaluated as e^{z_i - max z}.
/// Throws InvalidArgument for an empty vector.
inline std::vector<double> softmax(std::span<const double> z) {
  if (z.empty()) throw InvalidArgument("softmax of an empty vector");
  const double peak = *std::max_element(z.begin(), z.end());
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - peak);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

}  // namespace veriframe
