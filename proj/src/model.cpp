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

#include "veriframe/model.hpp"

#include <cmath>

#include "veriframe/activations.hpp"
#include "veriframe/error.hpp"

namespace veriframe {

std::string_view to_string(HeadOutput head) {
  return head == HeadOutput::kSigmoid1 ? "sigmoid_1" : "softmax_2";
}

std::optional<HeadOutput> parse_head_output(std::string_view token) {
  if (token == "sigmoid_1") return HeadOutput::kSigmoid1;
  if (token == "softmax_2") return HeadOutput::kSoftmax2;
  return std::nullopt;
}

Model::Model(ModelConfig config)
    : config_(std::move(config)),
      net_(build_backbone(config_.backbone, config_.init_seed)) {
  if (config_.head_hidden_units < 1) {
    throw ModelError("head_hidden_units must be >= 1");
  }
  const int features = static_cast<int>(net_.node_count()) - 1;
  int x = net_.add<nn::Dense>({features}, config_.head_hidden_units);
  x = net_.add<nn::Activation>({x}, nn::ActivationKind::kRelu);
  net_.add<nn::Dense>({x}, config_.head_output == HeadOutput::kSoftmax2 ? 2 : 1);
}

void Model::check_batch(const Tensor& batch) const {
  const Shape s = batch.shape();
  const int size = input_size();
  if (s.n < 1 || s.h != size || s.w != size || s.c != 3) {
    throw ModelError("backbone '" + config_.backbone.name + "' expects (B," +
                     std::to_string(size) + "," + std::to_string(size) + ",3), got " +
                     s.str());
  }
}

Tensor Model::logits(const Tensor& batch) const {
  check_batch(batch);
  return net_.forward(batch);
}

std::vector<double> Model::fake_logits(const Tensor& logits) const {
  const int n = logits.shape().n;
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (config_.head_output == HeadOutput::kSoftmax2) {
      t[static_cast<std::size_t>(i)] = logits.at(i, 0, 0, 1) - logits.at(i, 0, 0, 0);
    } else {
      // The single neuron models p_real.
      t[static_cast<std::size_t>(i)] = -logits.at(i, 0, 0, 0);
    }
  }
  return t;
}

std::vector<double> Model::predict(const Tensor& batch) const {
  const Tensor z = logits(batch);
  std::vector<double> p(static_cast<std::size_t>(z.shape().n));
  for (int i = 0; i < z.shape().n; ++i) {
    if (config_.head_output == HeadOutput::kSoftmax2) {
      const double pair[2] = {z.at(i, 0, 0, 0), z.at(i, 0, 0, 1)};
      p[static_cast<std::size_t>(i)] = softmax(pair)[1];
    } else {
      p[static_cast<std::size_t>(i)] = 1.0 - sigmoid(z.at(i, 0, 0, 0));
    }
  }
  return p;
}

namespace {

void check_labels(std::span<const double> labels, int n) {
  if (labels.size() != static_cast<std::size_t>(n)) {
    throw ModelError("label count does not match batch size");
  }
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw ModelError("labels must be 0 (REAL) or 1 (FAKE)");
  }
}

}  // namespace

double Model::loss(const Tensor& batch, std::span<const double> labels) const {
  check_labels(labels, batch.shape().n);
  const auto t = fake_logits(logits(batch));
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) total += softplus(t[i]) - labels[i] * t[i];
  return total / static_cast<double>(t.size());
}

Model::LossResult Model::loss_and_gradients(const Tensor& batch,
                                            std::span<const double> labels,
                                            std::vector<Tensor>& grads) const {
  check_batch(batch);
  const int n = batch.shape().n;
  check_labels(labels, n);
  nn::Trace trace;
  const Tensor z = net_.forward(batch, trace);
  const auto t = fake_logits(z);

  LossResult result;
  result.probabilities.resize(static_cast<std::size_t>(n));
  Tensor dz(z.shape());
  for (int i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    // BCE(p = S(t), y) = softplus(t) - y t; dBCE/dt = S(t) - y.
    result.loss += softplus(t[u]) - labels[u] * t[u];
    const double p = sigmoid(t[u]);
    result.probabilities[u] = p;
    const double dt = (p - labels[u]) / n;
    if (config_.head_output == HeadOutput::kSoftmax2) {
      dz.at(i, 0, 0, 1) = dt;
      dz.at(i, 0, 0, 0) = -dt;
    } else {
      dz.at(i, 0, 0, 0) = -dt;
    }
  }
  result.loss /= n;
  net_.backward(trace, dz, grads);
  return result;
}

Model build_model(const ModelConfig& config) { return Model(config); }

}  // namespace veriframe
