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
 * @brief Minimal layer graph with forward and reverse-mode differentiation
 *
 * Layers are immutable during forward/backward: parameters live in the layer
 * but gradients are written to caller-owned buffers, so one Network can serve
 * concurrent inference calls while a trainer owns a separate gradient set.
 * Tensors are NHWC doubles. Convolutions lower to GEMM through Eigen.
 */

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "veriframe/tensor.hpp"

namespace veriframe::nn {

struct Param {
  std::string name;
  Tensor value;
  bool trainable = true;
};

enum class Padding { kValid, kSame };

/// Output extent and leading/trailing padding along one axis, following the
/// usual "valid"/"same" conventions (extra padding goes at the end).
struct AxisPlan {
  int out = 0;
  int before = 0;
  int after = 0;
};
AxisPlan plan_axis(int in, int kernel, int stride, Padding padding);

class Layer {
 public:
  virtual ~Layer() = default;

  [[nodiscard]] virtual std::string kind() const = 0;
  [[nodiscard]] virtual std::unique_ptr<Layer> clone() const = 0;

  /// Validates input shapes (batch slot ignored) and creates parameters.
  virtual Shape build(std::span<const Shape> in, std::mt19937_64& rng) = 0;

  [[nodiscard]] virtual Tensor forward(std::span<const Tensor* const> in) const = 0;

  /// Returns d(loss)/d(input) for every input and adds parameter gradients
  /// into `param_grads`, which is aligned with params().
  virtual std::vector<Tensor> backward(std::span<const Tensor* const> in,
                                       const Tensor& out, const Tensor& dout,
                                       std::span<Tensor> param_grads) const = 0;

  [[nodiscard]] std::vector<Param>& params() { return params_; }
  [[nodiscard]] const std::vector<Param>& params() const { return params_; }

 protected:
  std::vector<Param> params_;
};

template <typename Derived>
class LayerBase : public Layer {
 public:
  [[nodiscard]] std::unique_ptr<Layer> clone() const override {
    return std::make_unique<Derived>(static_cast<const Derived&>(*this));
  }
};

class Conv2D final : public LayerBase<Conv2D> {
 public:
  Conv2D(int filters, int kernel_h, int kernel_w, int stride, Padding padding,
         bool use_bias);
  std::string kind() const override { return "Conv2D"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;

 private:
  int filters_, kh_, kw_, stride_;
  Padding padding_;
  bool use_bias_;
};

class DepthwiseConv2D final : public LayerBase<DepthwiseConv2D> {
 public:
  DepthwiseConv2D(int kernel, int stride, Padding padding, bool use_bias);
  std::string kind() const override { return "DepthwiseConv2D"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;

 private:
  int k_, stride_;
  Padding padding_;
  bool use_bias_;
};

class Dense final : public LayerBase<Dense> {
 public:
  explicit Dense(int units, bool use_bias = true);
  std::string kind() const override { return "Dense"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;

 private:
  int units_;
  bool use_bias_;
};

/// Batch normalisation with frozen running statistics. `scale`/`center` add
/// the trainable gamma/beta; the running mean and variance are stored as
/// non-trainable parameters.
class BatchNorm final : public LayerBase<BatchNorm> {
 public:
  explicit BatchNorm(double epsilon = 1e-3, bool scale = true, bool center = true);
  std::string kind() const override { return "BatchNorm"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;

  /// Initialise gamma to zero (residual branches start as identity).
  void zero_gamma();

 private:
  const Tensor* gamma() const;
  const Tensor* beta() const;
  double epsilon_;
  bool scale_, center_;
};

enum class ActivationKind { kLinear, kRelu, kSigmoid, kSwish };

class Activation final : public LayerBase<Activation> {
 public:
  explicit Activation(ActivationKind kind) : kind_(kind) {}
  std::string kind() const override;
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;

 private:
  ActivationKind kind_;
};

class ZeroPad2D final : public LayerBase<ZeroPad2D> {
 public:
  ZeroPad2D(int top, int bottom, int left, int right)
      : top_(top), bottom_(bottom), left_(left), right_(right) {}
  std::string kind() const override { return "ZeroPad2D"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;

 private:
  int top_, bottom_, left_, right_;
};

class MaxPool2D final : public LayerBase<MaxPool2D> {
 public:
  MaxPool2D(int pool, int stride, Padding padding)
      : pool_(pool), stride_(stride), padding_(padding) {}
  std::string kind() const override { return "MaxPool2D"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;

 private:
  int pool_, stride_;
  Padding padding_;
};

/// Average pooling; padded cells are excluded from the mean.
class AvgPool2D final : public LayerBase<AvgPool2D> {
 public:
  AvgPool2D(int pool, int stride, Padding padding)
      : pool_(pool), stride_(stride), padding_(padding) {}
  std::string kind() const override { return "AvgPool2D"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;

 private:
  int pool_, stride_;
  Padding padding_;
};

class GlobalAvgPool final : public LayerBase<GlobalAvgPool> {
 public:
  std::string kind() const override { return "GlobalAvgPool"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;
};

/// Elementwise sum of two or more equally shaped inputs.
class Add final : public LayerBase<Add> {
 public:
  std::string kind() const override { return "Add"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;
};

/// in[0] + scale * in[1].
class ScaledResidual final : public LayerBase<ScaledResidual> {
 public:
  explicit ScaledResidual(double scale) : scale_(scale) {}
  std::string kind() const override { return "ScaledResidual"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;

 private:
  double scale_;
};

/// in[0] (N,H,W,C) times in[1] (N,1,1,C) broadcast over space.
class ChannelScale final : public LayerBase<ChannelScale> {
 public:
  std::string kind() const override { return "ChannelScale"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;
};

/// Channel-axis concatenation.
class Concat final : public LayerBase<Concat> {
 public:
  std::string kind() const override { return "Concat"; }
  Shape build(std::span<const Shape> in, std::mt19937_64& rng) override;
  Tensor forward(std::span<const Tensor* const> in) const override;
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor& out,
                               const Tensor& dout,
                               std::span<Tensor> param_grads) const override;
};

/// Activations retained by a training forward pass.
struct Trace {
  std::vector<Tensor> activations;
};

/// Layer DAG with one input node (id 0) and one output node. Nodes are added
/// in topological order.
class Network {
 public:
  Network(int height, int width, int channels, std::uint64_t init_seed = 0);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;
  ~Network() = default;

  [[nodiscard]] static constexpr int input() { return 0; }

  /// Appends a node and returns its id. Throws ModelError on shape mismatch.
  int add(std::unique_ptr<Layer> layer, std::vector<int> inputs);
  template <typename L, typename... Args>
  int add(std::vector<int> inputs, Args&&... args) {
    return add(std::make_unique<L>(std::forward<Args>(args)...), std::move(inputs));
  }
  /// Output defaults to the last node added.
  void set_output(int node) { output_ = node; }

  [[nodiscard]] Shape input_shape() const { return shapes_[0]; }
  [[nodiscard]] Shape node_shape(int node) const { return shapes_.at(static_cast<std::size_t>(node)); }
  [[nodiscard]] Shape output_shape() const { return shapes_.at(static_cast<std::size_t>(output_)); }
  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
  [[nodiscard]] const Layer* layer(int node) const { return nodes_[static_cast<std::size_t>(node)].layer.get(); }
  [[nodiscard]] Layer* layer(int node) { return nodes_[static_cast<std::size_t>(node)].layer.get(); }

  /// Inference pass; intermediates are released as soon as unused.
  [[nodiscard]] Tensor forward(const Tensor& x) const;
  /// Training pass; keeps every activation in `trace`.
  Tensor forward(const Tensor& x, Trace& trace) const;
  /// Accumulates parameter gradients (aligned with parameters()) and returns
  /// d(loss)/d(input).
  Tensor backward(const Trace& trace, const Tensor& dout,
                  std::vector<Tensor>& param_grads) const;

  [[nodiscard]] std::vector<Param*> parameters();
  [[nodiscard]] std::vector<const Param*> parameters() const;
  /// Zero tensors shaped like parameters().
  [[nodiscard]] std::vector<Tensor> zero_gradients() const;
  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] std::size_t count_layers(const std::string& kind) const;

 private:
  struct Node {
    std::unique_ptr<Layer> layer;  // null for the input node
    std::vector<int> inputs;
  };
  void check_input(const Tensor& x) const;

  std::vector<Node> nodes_;
  std::vector<Shape> shapes_;  // per node, n = 1
  int output_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace veriframe::nn
