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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace veriframe {

/// Four-dimensional extent. Activations use NHWC; kernels reuse the same
/// four slots as (KH, KW, Cin, Cout).
struct Shape {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(n) * h * w * c;
  }
  [[nodiscard]] std::size_t per_sample() const {
    return static_cast<std::size_t>(h) * w * c;
  }
  [[nodiscard]] std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(h) + "," +
           std::to_string(w) + "," + std::to_string(c) + ")";
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense double-precision tensor with value semantics.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(shape), data_(shape.size(), fill) {}
  Tensor(Shape shape, std::vector<double> data);

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] double* data() { return data_.data(); }
  [[nodiscard]] const double* data() const { return data_.data(); }
  [[nodiscard]] std::span<double> values() { return data_; }
  [[nodiscard]] std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] std::size_t offset(int n, int y, int x, int c) const {
    return ((static_cast<std::size_t>(n) * shape_.h + y) * shape_.w + x) * shape_.c + c;
  }
  double& at(int n, int y, int x, int c) { return data_[offset(n, y, x, c)]; }
  [[nodiscard]] double at(int n, int y, int x, int c) const {
    return data_[offset(n, y, x, c)];
  }

  [[nodiscard]] std::span<double> sample(int n) {
    return std::span(data_).subspan(static_cast<std::size_t>(n) * shape_.per_sample(),
                                    shape_.per_sample());
  }
  [[nodiscard]] std::span<const double> sample(int n) const {
    return std::span(data_).subspan(static_cast<std::size_t>(n) * shape_.per_sample(),
                                    shape_.per_sample());
  }

  void fill(double v);
  /// this += other (shapes must match).
  void add(const Tensor& other);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace veriframe
