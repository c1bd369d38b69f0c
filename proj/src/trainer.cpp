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

#include "veriframe/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "veriframe/artifact.hpp"
#include "veriframe/error.hpp"

namespace veriframe {

void TrainConfig::validate() const {
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Adam::step(std::span<nn::Param* const> params, const std::vector<Tensor>& grads) {
  if (grads.size() != params.size()) throw InvalidArgument("gradient count mismatch");
  if (m_.empty()) {
    for (const nn::Param* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->trainable) continue;
    double* w = params[k]->value.data();
    const double* g = grads[k].data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::size_t i = 0, n = params[k]->value.size(); i < n; ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

StreamScore score_stream(const Model& model, const BatchStream& stream, std::size_t epoch) {
  StreamScore score;
  std::size_t correct = 0;
  auto it = stream.epoch(epoch);
  while (auto batch = it.next()) {
    const auto p = model.predict(batch->pixels);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double y = batch->labels[i];
      // BCE from the probability, clamped away from log(0).
      const double q = std::clamp(p[i], 1e-15, 1.0 - 1e-15);
      score.loss -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
      if ((p[i] >= 0.5 ? 1.0 : 0.0) == y) ++correct;
    }
    score.samples += p.size();
  }
  if (score.samples > 0) {
    score.loss /= static_cast<double>(score.samples);
    score.accuracy = static_cast<double>(correct) / static_cast<double>(score.samples);
  }
  return score;
}

namespace {

void write_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  out << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  out.precision(17);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.train_accuracy << ',' << r.val_loss << ','
        << r.val_accuracy << '\n';
  }
}

}  // namespace

TrainResult train(const ModelConfig& config, const BatchStream& train_stream,
                  const BatchStream& val_stream, const TrainConfig& tcfg,
                  const EpochCallback& on_epoch) {
  tcfg.validate();
  Model model(config);
  for (const BatchStream* s : {&train_stream, &val_stream}) {
    if (s->options().target_size != model.input_size()) {
      throw ModelError("stream target size " + std::to_string(s->options().target_size) +
                       " does not match backbone input size " +
                       std::to_string(model.input_size()));
    }
  }
  if (train_stream.options().batch_size != tcfg.batch_size) {
    throw InvalidArgument("train stream batch size differs from TrainConfig.batch_size");
  }

  Adam adam(tcfg.learning_rate, tcfg.beta1, tcfg.beta2, tcfg.epsilon);
  auto params = model.network().parameters();
  std::vector<Tensor> best = [&] {
    std::vector<Tensor> copy;
    for (const nn::Param* p : params) copy.push_back(p->value);
    return copy;
  }();

  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_accuracy = -1.0;
  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    std::size_t seen = 0, correct = 0;
    auto it = train_stream.epoch(static_cast<std::size_t>(epoch - 1));
    while (auto batch = it.next()) {
      auto grads = model.network().zero_gradients();
      const auto step = model.loss_and_gradients(batch->pixels, batch->labels, grads);
      if (!std::isfinite(step.loss)) throw TrainingDiverged(epoch);
      adam.step(params, grads);
      const std::size_t n = batch->labels.size();
      record.train_loss += step.loss * static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        if ((step.probabilities[i] >= 0.5 ? 1.0 : 0.0) == batch->labels[i]) ++correct;
      }
      seen += n;
    }
    record.train_loss /= static_cast<double>(seen);
    record.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);

    const auto val = score_stream(model, val_stream, static_cast<std::size_t>(epoch - 1));
    if (!std::isfinite(val.loss)) throw TrainingDiverged(epoch);
    record.val_loss = val.loss;
    record.val_accuracy = val.accuracy;
    history.push_back(record);

    if (record.val_accuracy > best_accuracy) {
      best_accuracy = record.val_accuracy;
      best_epoch = epoch;
      for (std::size_t k = 0; k < params.size(); ++k) best[k] = params[k]->value;
      if (tcfg.checkpoint_dir) export_model(model, *tcfg.checkpoint_dir / "best");
    }
    if (tcfg.checkpoint_dir) write_history(*tcfg.checkpoint_dir / "history.csv", history);
    if (on_epoch) on_epoch(record);
  }

  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best[k];
  return TrainResult{std::move(model), std::move(history), best_epoch};
}

}  // namespace veriframe
