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

#include "veriframe/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include <Eigen/Core>

#include "veriframe/activations.hpp"
#include "veriframe/error.hpp"

namespace veriframe {

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw InvalidArgument("tensor data does not match shape " + shape_.str());
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add(const Tensor& other) {
  if (other.shape_ != shape_) {
    throw InvalidArgument("tensor shape mismatch " + shape_.str() + " vs " +
                          other.shape_.str());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

}  // namespace veriframe

namespace veriframe::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using MapRow = Eigen::Map<Eigen::RowVectorXd>;
using ConstMapRow = Eigen::Map<const Eigen::RowVectorXd>;

void expect_inputs(std::span<const Shape> in, std::size_t n, const char* kind) {
  if (in.size() != n) {
    throw ModelError(std::string(kind) + " expects " + std::to_string(n) +
                     " input(s), got " + std::to_string(in.size()));
  }
}

void expect_same(std::span<const Shape> in, const char* kind) {
  if (in.size() < 2) throw ModelError(std::string(kind) + " needs at least two inputs");
  for (const auto& s : in) {
    if (s.h != in[0].h || s.w != in[0].w || s.c != in[0].c) {
      throw ModelError(std::string(kind) + " input shapes differ: " + in[0].str() +
                       " vs " + s.str());
    }
  }
}

Tensor he_normal(Shape shape, int fan_in, std::mt19937_64& rng) {
  Tensor t(shape);
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / std::max(1, fan_in)));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

Tensor glorot_uniform(Shape shape, int fan_in, int fan_out, std::mt19937_64& rng) {
  Tensor t(shape);
  const double limit = std::sqrt(6.0 / std::max(1, fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

struct ConvGeometry {
  int n, h, w, c;
  AxisPlan y, x;
};

// Lowers sample `n` of `x` to a (OH*OW) x (KH*KW*C) patch matrix.
void im2col(const Tensor& x, int n, const ConvGeometry& g, int kh, int kw, int stride,
            RowMat& col) {
  const int k = kh * kw * g.c;
  col.resize(static_cast<Eigen::Index>(g.y.out) * g.x.out, k);
  double* dst = col.data();
  for (int oy = 0; oy < g.y.out; ++oy) {
    for (int ox = 0; ox < g.x.out; ++ox) {
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride - g.y.before + ky;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride - g.x.before + kx;
          if (iy < 0 || iy >= g.h || ix < 0 || ix >= g.w) {
            std::fill(dst, dst + g.c, 0.0);
          } else {
            std::memcpy(dst, x.data() + x.offset(n, iy, ix, 0),
                        sizeof(double) * static_cast<std::size_t>(g.c));
          }
          dst += g.c;
        }
      }
    }
  }
}

void col2im(const RowMat& col, int n, const ConvGeometry& g, int kh, int kw, int stride,
            Tensor& dx) {
  const double* src = col.data();
  for (int oy = 0; oy < g.y.out; ++oy) {
    for (int ox = 0; ox < g.x.out; ++ox) {
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride - g.y.before + ky;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride - g.x.before + kx;
          if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) {
            double* d = dx.data() + dx.offset(n, iy, ix, 0);
            for (int c = 0; c < g.c; ++c) d[c] += src[c];
          }
          src += g.c;
        }
      }
    }
  }
}

}  // namespace

AxisPlan plan_axis(int in, int kernel, int stride, Padding padding) {
  if (kernel < 1 || stride < 1) throw ModelError("kernel and stride must be >= 1");
  AxisPlan p;
  if (padding == Padding::kValid) {
    if (in < kernel) {
      throw ModelError("input extent " + std::to_string(in) +
                       " smaller than kernel " + std::to_string(kernel));
    }
    p.out = (in - kernel) / stride + 1;
  } else {
    p.out = (in + stride - 1) / stride;
    const int total = std::max((p.out - 1) * stride + kernel - in, 0);
    p.before = total / 2;
    p.after = total - p.before;
  }
  return p;
}

// ---------------------------------------------------------------- Conv2D

Conv2D::Conv2D(int filters, int kernel_h, int kernel_w, int stride, Padding padding,
               bool use_bias)
    : filters_(filters), kh_(kernel_h), kw_(kernel_w), stride_(stride),
      padding_(padding), use_bias_(use_bias) {
  if (filters < 1) throw ModelError("Conv2D needs at least one filter");
}

Shape Conv2D::build(std::span<const Shape> in, std::mt19937_64& rng) {
  expect_inputs(in, 1, "Conv2D");
  const auto y = plan_axis(in[0].h, kh_, stride_, padding_);
  const auto x = plan_axis(in[0].w, kw_, stride_, padding_);
  params_.clear();
  params_.push_back({"kernel", he_normal({kh_, kw_, in[0].c, filters_}, kh_ * kw_ * in[0].c, rng), true});
  if (use_bias_) params_.push_back({"bias", Tensor({1, 1, 1, filters_}), true});
  return {1, y.out, x.out, filters_};
}

Tensor Conv2D::forward(std::span<const Tensor* const> in) const {
  const Tensor& x = *in[0];
  const Shape s = x.shape();
  ConvGeometry g{s.n, s.h, s.w, s.c, plan_axis(s.h, kh_, stride_, padding_),
                 plan_axis(s.w, kw_, stride_, padding_)};
  Tensor out({s.n, g.y.out, g.x.out, filters_});
  const int k = kh_ * kw_ * s.c;
  ConstMapMat kernel(params_[0].value.data(), k, filters_);
  const bool pointwise = kh_ == 1 && kw_ == 1 && stride_ == 1;
  const Eigen::Index rows = static_cast<Eigen::Index>(g.y.out) * g.x.out;
  RowMat col;
  for (int n = 0; n < s.n; ++n) {
    MapMat o(out.data() + out.offset(n, 0, 0, 0), rows, filters_);
    if (pointwise) {
      ConstMapMat xin(x.data() + x.offset(n, 0, 0, 0), rows, s.c);
      o.noalias() = xin * kernel;
    } else {
      im2col(x, n, g, kh_, kw_, stride_, col);
      o.noalias() = col * kernel;
    }
    if (use_bias_) o.rowwise() += ConstMapRow(params_[1].value.data(), filters_);
  }
  return out;
}

std::vector<Tensor> Conv2D::backward(std::span<const Tensor* const> in, const Tensor&,
                                     const Tensor& dout,
                                     std::span<Tensor> param_grads) const {
  const Tensor& x = *in[0];
  const Shape s = x.shape();
  ConvGeometry g{s.n, s.h, s.w, s.c, plan_axis(s.h, kh_, stride_, padding_),
                 plan_axis(s.w, kw_, stride_, padding_)};
  const int k = kh_ * kw_ * s.c;
  const Eigen::Index rows = static_cast<Eigen::Index>(g.y.out) * g.x.out;
  ConstMapMat kernel(params_[0].value.data(), k, filters_);
  MapMat dkernel(param_grads[0].data(), k, filters_);
  Tensor dx(s);
  const bool pointwise = kh_ == 1 && kw_ == 1 && stride_ == 1;
  RowMat col, dcol;
  for (int n = 0; n < s.n; ++n) {
    ConstMapMat d(dout.data() + dout.offset(n, 0, 0, 0), rows, filters_);
    if (use_bias_) MapRow(param_grads[1].data(), filters_) += d.colwise().sum();
    if (pointwise) {
      ConstMapMat xin(x.data() + x.offset(n, 0, 0, 0), rows, s.c);
      dkernel.noalias() += xin.transpose() * d;
      MapMat(dx.data() + dx.offset(n, 0, 0, 0), rows, s.c).noalias() = d * kernel.transpose();
    } else {
      im2col(x, n, g, kh_, kw_, stride_, col);
      dkernel.noalias() += col.transpose() * d;
      dcol.noalias() = d * kernel.transpose();
      col2im(dcol, n, g, kh_, kw_, stride_, dx);
    }
  }
  std::vector<Tensor> grads;
  grads.push_back(std::move(dx));
  return grads;
}

// ------------------------------------------------------- DepthwiseConv2D

DepthwiseConv2D::DepthwiseConv2D(int kernel, int stride, Padding padding, bool use_bias)
    : k_(kernel), stride_(stride), padding_(padding), use_bias_(use_bias) {}

Shape DepthwiseConv2D::build(std::span<const Shape> in, std::mt19937_64& rng) {
  expect_inputs(in, 1, "DepthwiseConv2D");
  const auto y = plan_axis(in[0].h, k_, stride_, padding_);
  const auto x = plan_axis(in[0].w, k_, stride_, padding_);
  params_.clear();
  params_.push_back({"depthwise_kernel", he_normal({k_, k_, in[0].c, 1}, k_ * k_, rng), true});
  if (use_bias_) params_.push_back({"bias", Tensor({1, 1, 1, in[0].c}), true});
  return {1, y.out, x.out, in[0].c};
}

Tensor DepthwiseConv2D::forward(std::span<const Tensor* const> in) const {
  const Tensor& x = *in[0];
  const Shape s = x.shape();
  const auto py = plan_axis(s.h, k_, stride_, padding_);
  const auto px = plan_axis(s.w, k_, stride_, padding_);
  Tensor out({s.n, py.out, px.out, s.c});
  const double* kernel = params_[0].value.data();
  for (int n = 0; n < s.n; ++n) {
    for (int oy = 0; oy < py.out; ++oy) {
      for (int ox = 0; ox < px.out; ++ox) {
        double* o = out.data() + out.offset(n, oy, ox, 0);
        if (use_bias_) {
          std::memcpy(o, params_[1].value.data(), sizeof(double) * static_cast<std::size_t>(s.c));
        }
        for (int ky = 0; ky < k_; ++ky) {
          const int iy = oy * stride_ - py.before + ky;
          if (iy < 0 || iy >= s.h) continue;
          for (int kx = 0; kx < k_; ++kx) {
            const int ix = ox * stride_ - px.before + kx;
            if (ix < 0 || ix >= s.w) continue;
            const double* xi = x.data() + x.offset(n, iy, ix, 0);
            const double* kk = kernel + (static_cast<std::size_t>(ky) * k_ + kx) * s.c;
            for (int c = 0; c < s.c; ++c) o[c] += xi[c] * kk[c];
          }
        }
      }
    }
  }
  return out;
}

std::vector<Tensor> DepthwiseConv2D::backward(std::span<const Tensor* const> in,
                                              const Tensor&, const Tensor& dout,
                                              std::span<Tensor> param_grads) const {
  const Tensor& x = *in[0];
  const Shape s = x.shape();
  const auto py = plan_axis(s.h, k_, stride_, padding_);
  const auto px = plan_axis(s.w, k_, stride_, padding_);
  Tensor dx(s);
  const double* kernel = params_[0].value.data();
  double* dk = param_grads[0].data();
  for (int n = 0; n < s.n; ++n) {
    for (int oy = 0; oy < py.out; ++oy) {
      for (int ox = 0; ox < px.out; ++ox) {
        const double* d = dout.data() + dout.offset(n, oy, ox, 0);
        if (use_bias_) {
          double* db = param_grads[1].data();
          for (int c = 0; c < s.c; ++c) db[c] += d[c];
        }
        for (int ky = 0; ky < k_; ++ky) {
          const int iy = oy * stride_ - py.before + ky;
          if (iy < 0 || iy >= s.h) continue;
          for (int kx = 0; kx < k_; ++kx) {
            const int ix = ox * stride_ - px.before + kx;
            if (ix < 0 || ix >= s.w) continue;
            const std::size_t kofs = (static_cast<std::size_t>(ky) * k_ + kx) * s.c;
            const double* xi = x.data() + x.offset(n, iy, ix, 0);
            double* dxi = dx.data() + dx.offset(n, iy, ix, 0);
            for (int c = 0; c < s.c; ++c) {
              dxi[c] += d[c] * kernel[kofs + c];
              dk[kofs + c] += d[c] * xi[c];
            }
          }
        }
      }
    }
  }
  std::vector<Tensor> grads;
  grads.push_back(std::move(dx));
  return grads;
}

// ----------------------------------------------------------------- Dense

Dense::Dense(int units, bool use_bias) : units_(units), use_bias_(use_bias) {
  if (units < 1) throw ModelError("Dense needs at least one unit");
}

Shape Dense::build(std::span<const Shape> in, std::mt19937_64& rng) {
  expect_inputs(in, 1, "Dense");
  const int d = static_cast<int>(in[0].per_sample());
  params_.clear();
  params_.push_back({"kernel", glorot_uniform({1, 1, d, units_}, d, units_, rng), true});
  if (use_bias_) params_.push_back({"bias", Tensor({1, 1, 1, units_}), true});
  return {1, 1, 1, units_};
}

Tensor Dense::forward(std::span<const Tensor* const> in) const {
  const Tensor& x = *in[0];
  const int n = x.shape().n;
  const auto d = static_cast<Eigen::Index>(x.shape().per_sample());
  Tensor out({n, 1, 1, units_});
  MapMat o(out.data(), n, units_);
  o.noalias() = ConstMapMat(x.data(), n, d) * ConstMapMat(params_[0].value.data(), d, units_);
  if (use_bias_) o.rowwise() += ConstMapRow(params_[1].value.data(), units_);
  return out;
}

std::vector<Tensor> Dense::backward(std::span<const Tensor* const> in, const Tensor&,
                                    const Tensor& dout,
                                    std::span<Tensor> param_grads) const {
  const Tensor& x = *in[0];
  const int n = x.shape().n;
  const auto d = static_cast<Eigen::Index>(x.shape().per_sample());
  ConstMapMat dmat(dout.data(), n, units_);
  MapMat(param_grads[0].data(), d, units_).noalias() += ConstMapMat(x.data(), n, d).transpose() * dmat;
  if (use_bias_) MapRow(param_grads[1].data(), units_) += dmat.colwise().sum();
  Tensor dx(x.shape());
  MapMat(dx.data(), n, d).noalias() = dmat * ConstMapMat(params_[0].value.data(), d, units_).transpose();
  std::vector<Tensor> grads;
  grads.push_back(std::move(dx));
  return grads;
}

// ------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(double epsilon, bool scale, bool center)
    : epsilon_(epsilon), scale_(scale), center_(center) {}

Shape BatchNorm::build(std::span<const Shape> in, std::mt19937_64&) {
  expect_inputs(in, 1, "BatchNorm");
  const Shape ch{1, 1, 1, in[0].c};
  params_.clear();
  if (scale_) params_.push_back({"gamma", Tensor(ch, 1.0), true});
  if (center_) params_.push_back({"beta", Tensor(ch, 0.0), true});
  params_.push_back({"moving_mean", Tensor(ch, 0.0), false});
  params_.push_back({"moving_variance", Tensor(ch, 1.0), false});
  return in[0];
}

const Tensor* BatchNorm::gamma() const { return scale_ ? &params_[0].value : nullptr; }
const Tensor* BatchNorm::beta() const {
  return center_ ? &params_[scale_ ? 1 : 0].value : nullptr;
}

void BatchNorm::zero_gamma() {
  if (scale_) params_[0].value.fill(0.0);
}

Tensor BatchNorm::forward(std::span<const Tensor* const> in) const {
  const Tensor& x = *in[0];
  const int c = x.shape().c;
  const std::size_t stat = params_.size() - 2;
  const Tensor& mean = params_[stat].value;
  const Tensor& var = params_[stat + 1].value;
  std::vector<double> a(static_cast<std::size_t>(c)), b(static_cast<std::size_t>(c));
  for (int i = 0; i < c; ++i) {
    const double g = scale_ ? (*gamma())[static_cast<std::size_t>(i)] : 1.0;
    const double be = center_ ? (*beta())[static_cast<std::size_t>(i)] : 0.0;
    const double inv = 1.0 / std::sqrt(var[static_cast<std::size_t>(i)] + epsilon_);
    a[static_cast<std::size_t>(i)] = g * inv;
    b[static_cast<std::size_t>(i)] = be - mean[static_cast<std::size_t>(i)] * g * inv;
  }
  Tensor out(x.shape());
  const std::size_t pixels = x.size() / static_cast<std::size_t>(c);
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* xi = x.data() + p * c;
    double* o = out.data() + p * c;
    for (int i = 0; i < c; ++i) o[i] = xi[i] * a[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<Tensor> BatchNorm::backward(std::span<const Tensor* const> in, const Tensor&,
                                        const Tensor& dout,
                                        std::span<Tensor> param_grads) const {
  const Tensor& x = *in[0];
  const int c = x.shape().c;
  const std::size_t stat = params_.size() - 2;
  const Tensor& mean = params_[stat].value;
  const Tensor& var = params_[stat + 1].value;
  std::vector<double> inv(static_cast<std::size_t>(c)), a(static_cast<std::size_t>(c));
  for (int i = 0; i < c; ++i) {
    const auto u = static_cast<std::size_t>(i);
    inv[u] = 1.0 / std::sqrt(var[u] + epsilon_);
    a[u] = (scale_ ? (*gamma())[u] : 1.0) * inv[u];
  }
  Tensor dx(x.shape());
  double* dg = scale_ ? param_grads[0].data() : nullptr;
  double* db = center_ ? param_grads[scale_ ? 1 : 0].data() : nullptr;
  const std::size_t pixels = x.size() / static_cast<std::size_t>(c);
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* xi = x.data() + p * c;
    const double* d = dout.data() + p * c;
    double* o = dx.data() + p * c;
    for (int i = 0; i < c; ++i) {
      const auto u = static_cast<std::size_t>(i);
      o[i] = d[i] * a[u];
      if (dg) dg[i] += d[i] * (xi[i] - mean[u]) * inv[u];
      if (db) db[i] += d[i];
    }
  }
  std::vector<Tensor> grads;
  grads.push_back(std::move(dx));
  return grads;
}

// ------------------------------------------------------------ Activation

std::string Activation::kind() const {
  switch (kind_) {
    case ActivationKind::kLinear:
      return "Linear";
    case ActivationKind::kRelu:
      return "ReLU";
    case ActivationKind::kSigmoid:
      return "Sigmoid";
    case ActivationKind::kSwish:
      return "Swish";
  }
  return "Activation";
}

Shape Activation::build(std::span<const Shape> in, std::mt19937_64&) {
  expect_inputs(in, 1, "Activation");
  return in[0];
}

Tensor Activation::forward(std::span<const Tensor* const> in) const {
  const Tensor& x = *in[0];
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    switch (kind_) {
      case ActivationKind::kLinear:
        out[i] = v;
        break;
      case ActivationKind::kRelu:
        out[i] = v > 0.0 ? v : 0.0;
        break;
      case ActivationKind::kSigmoid:
        out[i] = sigmoid(v);
        break;
      case ActivationKind::kSwish:
        out[i] = v * sigmoid(v);
        break;
    }
  }
  return out;
}

std::vector<Tensor> Activation::backward(std::span<const Tensor* const> in,
                                         const Tensor& out, const Tensor& dout,
                                         std::span<Tensor>) const {
  const Tensor& x = *in[0];
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    switch (kind_) {
      case ActivationKind::kLinear:
        dx[i] = dout[i];
        break;
      case ActivationKind::kRelu:
        dx[i] = x[i] > 0.0 ? dout[i] : 0.0;
        break;
      case ActivationKind::kSigmoid:
        dx[i] = dout[i] * out[i] * (1.0 - out[i]);
        break;
      case ActivationKind::kSwish: {
        const double s = sigmoid(x[i]);
        dx[i] = dout[i] * (s + x[i] * s * (1.0 - s));
        break;
      }
    }
  }
  std::vector<Tensor> grads;
  grads.push_back(std::move(dx));
  return grads;
}

// ------------------------------------------------------------- ZeroPad2D

Shape ZeroPad2D::build(std::span<const Shape> in, std::mt19937_64&) {
  expect_inputs(in, 1, "ZeroPad2D");
  return {1, in[0].h + top_ + bottom_, in[0].w + left_ + right_, in[0].c};
}

Tensor ZeroPad2D::forward(std::span<const Tensor* const> in) const {
  const Tensor& x = *in[0];
  const Shape s = x.shape();
  Tensor out({s.n, s.h + top_ + bottom_, s.w + left_ + right_, s.c});
  for (int n = 0; n < s.n; ++n) {
    for (int y = 0; y < s.h; ++y) {
      std::memcpy(out.data() + out.offset(n, y + top_, left_, 0), x.data() + x.offset(n, y, 0, 0),
                  sizeof(double) * static_cast<std::size_t>(s.w) * s.c);
    }
  }
  return out;
}

std::vector<Tensor> ZeroPad2D::backward(std::span<const Tensor* const> in, const Tensor&,
                                        const Tensor& dout, std::span<Tensor>) const {
  const Shape s = in[0]->shape();
  Tensor dx(s);
  for (int n = 0; n < s.n; ++n) {
    for (int y = 0; y < s.h; ++y) {
      std::memcpy(dx.data() + dx.offset(n, y, 0, 0), dout.data() + dout.offset(n, y + top_, left_, 0),
                  sizeof(double) * static_cast<std::size_t>(s.w) * s.c);
    }
  }
  std::vector<Tensor> grads;
  grads.push_back(std::move(dx));
  return grads;
}

// --------------------------------------------------------------- Pooling

Shape MaxPool2D::build(std::span<const Shape> in, std::mt19937_64&) {
  expect_inputs(in, 1, "MaxPool2D");
  return {1, plan_axis(in[0].h, pool_, stride_, padding_).out,
          plan_axis(in[0].w, pool_, stride_, padding_).out, in[0].c};
}

Tensor MaxPool2D::forward(std::span<const Tensor* const> in) const {
  const Tensor& x = *in[0];
  const Shape s = x.shape();
  const auto py = plan_axis(s.h, pool_, stride_, padding_);
  const auto px = plan_axis(s.w, pool_, stride_, padding_);
  Tensor out({s.n, py.out, px.out, s.c}, -std::numeric_limits<double>::infinity());
  for (int n = 0; n < s.n; ++n) {
    for (int oy = 0; oy < py.out; ++oy) {
      for (int ox = 0; ox < px.out; ++ox) {
        double* o = out.data() + out.offset(n, oy, ox, 0);
        for (int ky = 0; ky < pool_; ++ky) {
          const int iy = oy * stride_ - py.before + ky;
          if (iy < 0 || iy >= s.h) continue;
          for (int kx = 0; kx < pool_; ++kx) {
            const int ix = ox * stride_ - px.before + kx;
            if (ix < 0 || ix >= s.w) continue;
            const double* xi = x.data() + x.offset(n, iy, ix, 0);
            for (int c = 0; c < s.c; ++c) o[c] = std::max(o[c], xi[c]);
          }
        }
      }
    }
  }
  return out;
}

std::vector<Tensor> MaxPool2D::backward(std::span<const Tensor* const> in, const Tensor& out,
                                        const Tensor& dout, std::span<Tensor>) const {
  const Tensor& x = *in[0];
  const Shape s = x.shape();
  const auto py = plan_axis(s.h, pool_, stride_, padding_);
  const auto px = plan_axis(s.w, pool_, stride_, padding_);
  Tensor dx(s);
  std::vector<char> routed(static_cast<std::size_t>(s.c));
  for (int n = 0; n < s.n; ++n) {
    for (int oy = 0; oy < py.out; ++oy) {
      for (int ox = 0; ox < px.out; ++ox) {
        const double* o = out.data() + out.offset(n, oy, ox, 0);
        const double* d = dout.data() + dout.offset(n, oy, ox, 0);
        std::fill(routed.begin(), routed.end(), 0);
        // Gradient goes to the first maximal cell in scan order.
        for (int ky = 0; ky < pool_; ++ky) {
          const int iy = oy * stride_ - py.before + ky;
          if (iy < 0 || iy >= s.h) continue;
          for (int kx = 0; kx < pool_; ++kx) {
            const int ix = ox * stride_ - px.before + kx;
            if (ix < 0 || ix >= s.w) continue;
            const double* xi = x.data() + x.offset(n, iy, ix, 0);
            double* dxi = dx.data() + dx.offset(n, iy, ix, 0);
            for (int c = 0; c < s.c; ++c) {
              if (!routed[static_cast<std::size_t>(c)] && xi[c] == o[c]) {
                dxi[c] += d[c];
                routed[static_cast<std::size_t>(c)] = 1;
              }
            }
          }
        }
      }
    }
  }
  std::vector<Tensor> grads;
  grads.push_back(std::move(dx));
  return grads;
}

Shape AvgPool2D::build(std::span<const Shape> in, std::mt19937_64&) {
  expect_inputs(in, 1, "AvgPool2D");
  return {1, plan_axis(in[0].h, pool_, stride_, padding_).out,
          plan_axis(in[0].w, pool_, stride_, padding_).out, in[0].c};
}

Tensor AvgPool2D::forward(std::span<const Tensor* const> in) const {
  const Tensor& x = *in[0];
  const Shape s = x.shape();
  const auto py = plan_axis(s.h, pool_, stride_, padding_);
  const auto px = plan_axis(s.w, pool_, stride_, padding_);
  Tensor out({s.n, py.out, px.out, s.c});
  for (int n = 0; n < s.n; ++n) {
    for (int oy = 0; oy < py.out; ++oy) {
      for (int ox = 0; ox < px.out; ++ox) {
        double* o = out.data() + out.offset(n, oy, ox, 0);
        int count = 0;
        for (int ky = 0; ky < pool_; ++ky) {
          const int iy = oy * stride_ - py.before + ky;
          if (iy < 0 || iy >= s.h) continue;
          for (int kx = 0; kx < pool_; ++kx) {
            const int ix = ox * stride_ - px.before + kx;
            if (ix < 0 || ix >= s.w) continue;
            ++count;
            const double* xi = x.data() + x.offset(n, iy, ix, 0);
            for (int c = 0; c < s.c; ++c) o[c] += xi[c];
          }
        }
        for (int c = 0; c < s.c; ++c) o[c] /= count;
      }
    }
  }
  return out;
}

std::vector<Tensor> AvgPool2D::backward(std::span<const Tensor* const> in, const Tensor&,
                                        const Tensor& dout, std::span<Tensor>) const {
  const Shape s = in[0]->shape();
  const auto py = plan_axis(s.h, pool_, stride_, padding_);
  const auto px = plan_axis(s.w, pool_, stride_, padding_);
  Tensor dx(s);
  for (int n = 0; n < s.n; ++n) {
    for (int oy = 0; oy < py.out; ++oy) {
      for (int ox = 0; ox < px.out; ++ox) {
        const int y0 = std::max(0, oy * stride_ - py.before);
        const int y1 = std::min(s.h, oy * stride_ - py.before + pool_);
        const int x0 = std::max(0, ox * stride_ - px.before);
        const int x1 = std::min(s.w, ox * stride_ - px.before + pool_);
        const double inv = 1.0 / ((y1 - y0) * (x1 - x0));
        const double* d = dout.data() + dout.offset(n, oy, ox, 0);
        for (int iy = y0; iy < y1; ++iy) {
          for (int ix = x0; ix < x1; ++ix) {
            double* dxi = dx.data() + dx.offset(n, iy, ix, 0);
            for (int c = 0; c < s.c; ++c) dxi[c] += d[c] * inv;
          }
        }
      }
    }
  }
  std::vector<Tensor> grads;
  grads.push_back(std::move(dx));
  return grads;
}

Shape GlobalAvgPool::build(std::span<const Shape> in, std::mt19937_64&) {
  expect_inputs(in, 1, "GlobalAvgPool");
  return {1, 1, 1, in[0].c};
}

Tensor GlobalAvgPool::forward(std::span<const Tensor* const> in) const {
  const Tensor& x = *in[0];
  const Shape s = x.shape();
  Tensor out({s.n, 1, 1, s.c});
  const double inv = 1.0 / (static_cast<double>(s.h) * s.w);
  for (int n = 0; n < s.n; ++n) {
    double* o = out.data() + out.offset(n, 0, 0, 0);
    const double* xi = x.data() + x.offset(n, 0, 0, 0);
    for (int p = 0; p < s.h * s.w; ++p, xi += s.c) {
      for (int c = 0; c < s.c; ++c) o[c] += xi[c];
    }
    for (int c = 0; c < s.c; ++c) o[c] *= inv;
  }
  return out;
}

std::vector<Tensor> GlobalAvgPool::backward(std::span<const Tensor* const> in, const Tensor&,
                                            const Tensor& dout, std::span<Tensor>) const {
  const Shape s = in[0]->shape();
  Tensor dx(s);
  const double inv = 1.0 / (static_cast<double>(s.h) * s.w);
  for (int n = 0; n < s.n; ++n) {
    const double* d = dout.data() + dout.offset(n, 0, 0, 0);
    double* o = dx.data() + dx.offset(n, 0, 0, 0);
    for (int p = 0; p < s.h * s.w; ++p, o += s.c) {
      for (int c = 0; c < s.c; ++c) o[c] = d[c] * inv;
    }
  }
  std::vector<Tensor> grads;
  grads.push_back(std::move(dx));
  return grads;
}

// ------------------------------------------------------------- Merging

Shape Add::build(std::span<const Shape> in, std::mt19937_64&) {
  expect_same(in, "Add");
  return in[0];
}

Tensor Add::forward(std::span<const Tensor* const> in) const {
  Tensor out = *in[0];
  for (std::size_t i = 1; i < in.size(); ++i) out.add(*in[i]);
  return out;
}

std::vector<Tensor> Add::backward(std::span<const Tensor* const> in, const Tensor&,
                                  const Tensor& dout, std::span<Tensor>) const {
  return std::vector<Tensor>(in.size(), dout);
}

Shape ScaledResidual::build(std::span<const Shape> in, std::mt19937_64&) {
  expect_inputs(in, 2, "ScaledResidual");
  expect_same(in, "ScaledResidual");
  return in[0];
}

Tensor ScaledResidual::forward(std::span<const Tensor* const> in) const {
  Tensor out = *in[0];
  const Tensor& b = *in[1];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale_ * b[i];
  return out;
}

std::vector<Tensor> ScaledResidual::backward(std::span<const Tensor* const>, const Tensor&,
                                             const Tensor& dout, std::span<Tensor>) const {
  Tensor db = dout;
  for (auto& v : db.values()) v *= scale_;
  std::vector<Tensor> grads;
  grads.push_back(dout);
  grads.push_back(std::move(db));
  return grads;
}

Shape ChannelScale::build(std::span<const Shape> in, std::mt19937_64&) {
  expect_inputs(in, 2, "ChannelScale");
  if (in[1].h != 1 || in[1].w != 1 || in[1].c != in[0].c) {
    throw ModelError("ChannelScale gate must be (1,1,C), got " + in[1].str());
  }
  return in[0];
}

Tensor ChannelScale::forward(std::span<const Tensor* const> in) const {
  const Tensor& x = *in[0];
  const Tensor& g = *in[1];
  const Shape s = x.shape();
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    const double* gate = g.data() + g.offset(n, 0, 0, 0);
    const double* xi = x.data() + x.offset(n, 0, 0, 0);
    double* o = out.data() + out.offset(n, 0, 0, 0);
    for (int p = 0; p < s.h * s.w; ++p, xi += s.c, o += s.c) {
      for (int c = 0; c < s.c; ++c) o[c] = xi[c] * gate[c];
    }
  }
  return out;
}

std::vector<Tensor> ChannelScale::backward(std::span<const Tensor* const> in, const Tensor&,
                                           const Tensor& dout, std::span<Tensor>) const {
  const Tensor& x = *in[0];
  const Tensor& g = *in[1];
  const Shape s = x.shape();
  Tensor dx(s);
  Tensor dg(g.shape());
  for (int n = 0; n < s.n; ++n) {
    const double* gate = g.data() + g.offset(n, 0, 0, 0);
    double* dgate = dg.data() + dg.offset(n, 0, 0, 0);
    const double* xi = x.data() + x.offset(n, 0, 0, 0);
    const double* d = dout.data() + dout.offset(n, 0, 0, 0);
    double* o = dx.data() + dx.offset(n, 0, 0, 0);
    for (int p = 0; p < s.h * s.w; ++p, xi += s.c, d += s.c, o += s.c) {
      for (int c = 0; c < s.c; ++c) {
        o[c] = d[c] * gate[c];
        dgate[c] += d[c] * xi[c];
      }
    }
  }
  std::vector<Tensor> grads;
  grads.push_back(std::move(dx));
  grads.push_back(std::move(dg));
  return grads;
}

Shape Concat::build(std::span<const Shape> in, std::mt19937_64&) {
  if (in.empty()) throw ModelError("Concat needs inputs");
  Shape out = in[0];
  out.c = 0;
  for (const auto& s : in) {
    if (s.h != in[0].h || s.w != in[0].w) {
      throw ModelError("Concat spatial mismatch: " + in[0].str() + " vs " + s.str());
    }
    out.c += s.c;
  }
  return out;
}

Tensor Concat::forward(std::span<const Tensor* const> in) const {
  Shape s = in[0]->shape();
  s.c = 0;
  for (const auto* t : in) s.c += t->shape().c;
  Tensor out(s);
  const std::size_t pixels = static_cast<std::size_t>(s.n) * s.h * s.w;
  int offset = 0;
  for (const auto* t : in) {
    const int c = t->shape().c;
    for (std::size_t p = 0; p < pixels; ++p) {
      std::memcpy(out.data() + p * s.c + offset, t->data() + p * c,
                  sizeof(double) * static_cast<std::size_t>(c));
    }
    offset += c;
  }
  return out;
}

std::vector<Tensor> Concat::backward(std::span<const Tensor* const> in, const Tensor&,
                                     const Tensor& dout, std::span<Tensor>) const {
  const Shape s = dout.shape();
  const std::size_t pixels = static_cast<std::size_t>(s.n) * s.h * s.w;
  std::vector<Tensor> grads;
  int offset = 0;
  for (const auto* t : in) {
    const int c = t->shape().c;
    Tensor g(t->shape());
    for (std::size_t p = 0; p < pixels; ++p) {
      std::memcpy(g.data() + p * c, dout.data() + p * s.c + offset,
                  sizeof(double) * static_cast<std::size_t>(c));
    }
    offset += c;
    grads.push_back(std::move(g));
  }
  return grads;
}

// --------------------------------------------------------------- Network

Network::Network(int height, int width, int channels, std::uint64_t init_seed)
    : rng_(init_seed) {
  if (height < 1 || width < 1 || channels < 1) {
    throw ModelError("network input must have positive extent");
  }
  nodes_.push_back({nullptr, {}});
  shapes_.push_back({1, height, width, channels});
}

Network::Network(const Network& other)
    : shapes_(other.shapes_), output_(other.output_), rng_(other.rng_) {
  nodes_.reserve(other.nodes_.size());
  for (const auto& node : other.nodes_) {
    nodes_.push_back({node.layer ? node.layer->clone() : nullptr, node.inputs});
  }
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

int Network::add(std::unique_ptr<Layer> layer, std::vector<int> inputs) {
  const int id = static_cast<int>(nodes_.size());
  if (inputs.empty()) throw ModelError("layer needs at least one input");
  std::vector<Shape> in;
  for (int i : inputs) {
    if (i < 0 || i >= id) throw ModelError("layer input refers to a later node");
    in.push_back(shapes_[static_cast<std::size_t>(i)]);
  }
  Shape out = layer->build(in, rng_);
  out.n = 1;
  nodes_.push_back({std::move(layer), std::move(inputs)});
  shapes_.push_back(out);
  output_ = id;
  return id;
}

void Network::check_input(const Tensor& x) const {
  const Shape s = x.shape();
  const Shape want = shapes_[0];
  if (s.n < 1 || s.h != want.h || s.w != want.w || s.c != want.c) {
    throw ModelError("input shape " + s.str() + " does not match network input (N," +
                     std::to_string(want.h) + "," + std::to_string(want.w) + "," +
                     std::to_string(want.c) + ")");
  }
}

Tensor Network::forward(const Tensor& x) const {
  check_input(x);
  const std::size_t count = nodes_.size();
  std::vector<int> uses(count, 0);
  for (const auto& node : nodes_) {
    for (int i : node.inputs) ++uses[static_cast<std::size_t>(i)];
  }
  ++uses[static_cast<std::size_t>(output_)];
  std::vector<Tensor> acts(count);
  auto value = [&](int i) -> const Tensor* {
    return i == 0 ? &x : &acts[static_cast<std::size_t>(i)];
  };
  std::vector<const Tensor*> in;
  for (std::size_t id = 1; id < count; ++id) {
    const auto& node = nodes_[id];
    if (uses[id] == 0) continue;
    in.clear();
    for (int i : node.inputs) in.push_back(value(i));
    acts[id] = node.layer->forward(in);
    for (int i : node.inputs) {
      if (--uses[static_cast<std::size_t>(i)] == 0 && i != 0) {
        acts[static_cast<std::size_t>(i)] = Tensor();
      }
    }
  }
  if (output_ == 0) return x;
  return std::move(acts[static_cast<std::size_t>(output_)]);
}

Tensor Network::forward(const Tensor& x, Trace& trace) const {
  check_input(x);
  trace.activations.assign(nodes_.size(), Tensor());
  trace.activations[0] = x;
  std::vector<const Tensor*> in;
  for (std::size_t id = 1; id < nodes_.size(); ++id) {
    in.clear();
    for (int i : nodes_[id].inputs) in.push_back(&trace.activations[static_cast<std::size_t>(i)]);
    trace.activations[id] = nodes_[id].layer->forward(in);
  }
  return trace.activations[static_cast<std::size_t>(output_)];
}

Tensor Network::backward(const Trace& trace, const Tensor& dout,
                         std::vector<Tensor>& param_grads) const {
  if (trace.activations.size() != nodes_.size()) {
    throw ModelError("trace does not belong to this network");
  }
  std::vector<std::size_t> offsets(nodes_.size(), 0);
  std::size_t total = 0;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    offsets[id] = total;
    if (nodes_[id].layer) total += nodes_[id].layer->params().size();
  }
  if (param_grads.size() != total) throw ModelError("gradient buffer size mismatch");

  std::vector<Tensor> grads(nodes_.size());
  grads[static_cast<std::size_t>(output_)] = dout;
  std::vector<const Tensor*> in;
  for (std::size_t id = nodes_.size() - 1; id >= 1; --id) {
    if (grads[id].empty()) continue;
    const auto& node = nodes_[id];
    in.clear();
    for (int i : node.inputs) in.push_back(&trace.activations[static_cast<std::size_t>(i)]);
    auto input_grads = node.layer->backward(
        in, trace.activations[id], grads[id],
        std::span(param_grads).subspan(offsets[id], node.layer->params().size()));
    for (std::size_t j = 0; j < node.inputs.size(); ++j) {
      auto& target = grads[static_cast<std::size_t>(node.inputs[j])];
      if (target.empty()) {
        target = std::move(input_grads[j]);
      } else {
        target.add(input_grads[j]);
      }
    }
    grads[id] = Tensor();
  }
  return std::move(grads[0]);
}

std::vector<Param*> Network::parameters() {
  std::vector<Param*> out;
  for (auto& node : nodes_) {
    if (!node.layer) continue;
    for (auto& p : node.layer->params()) out.push_back(&p);
  }
  return out;
}

std::vector<const Param*> Network::parameters() const {
  std::vector<const Param*> out;
  for (const auto& node : nodes_) {
    if (!node.layer) continue;
    for (const auto& p : node.layer->params()) out.push_back(&p);
  }
  return out;
}

std::vector<Tensor> Network::zero_gradients() const {
  std::vector<Tensor> out;
  for (const auto* p : parameters()) out.emplace_back(p->value.shape());
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

std::size_t Network::count_layers(const std::string& kind) const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [&](const Node& n) {
    return n.layer && n.layer->kind() == kind;
  }));
}

}  // namespace veriframe::nn
