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

// Feature extractors. The three ImageNet backbones follow the layer layout
// of the common Keras application definitions (same blocks, widths, padding
// and normalisation placement), so parameter counts match those models
// without the classification top.

#include <array>

#include "veriframe/error.hpp"
#include "veriframe/model.hpp"

namespace veriframe {

namespace {

using nn::ActivationKind;
using nn::Padding;

const std::array<BackboneSpec, 4> kRegistry{{
    {Backbone::kResNet50, "resnet50", 224, 50, false},
    {Backbone::kEfficientNetB0, "efficientnet_b0", 224, std::nullopt, false},
    {Backbone::kInceptionResNetV2, "inception_resnet_v2", 299, 164, false},
    {Backbone::kTinyTest, "tiny_test", 64, 3, false},
}};

class Builder {
 public:
  explicit Builder(nn::Network& net) : net_(net) {}

  int conv(int x, int filters, int kh, int kw, int stride, Padding padding, bool bias) {
    return net_.add<nn::Conv2D>({x}, filters, kh, kw, stride, padding, bias);
  }
  int bn(int x, double eps, bool scale = true) {
    return net_.add<nn::BatchNorm>({x}, eps, scale, true);
  }
  int act(int x, ActivationKind kind) { return net_.add<nn::Activation>({x}, kind); }
  int relu(int x) { return act(x, ActivationKind::kRelu); }
  int pad(int x, int top, int bottom, int left, int right) {
    return net_.add<nn::ZeroPad2D>({x}, top, bottom, left, right);
  }
  int max_pool(int x, int k, int stride, Padding padding) {
    return net_.add<nn::MaxPool2D>({x}, k, stride, padding);
  }
  int avg_pool(int x, int k, int stride, Padding padding) {
    return net_.add<nn::AvgPool2D>({x}, k, stride, padding);
  }
  int gap(int x) { return net_.add<nn::GlobalAvgPool>({x}); }
  int add(std::vector<int> xs) { return net_.add<nn::Add>(std::move(xs)); }
  int concat(std::vector<int> xs) { return net_.add<nn::Concat>(std::move(xs)); }
  int channels(int x) const { return net_.node_shape(x).c; }
  int height(int x) const { return net_.node_shape(x).h; }
  nn::Network& net() { return net_; }

 private:
  nn::Network& net_;
};

// ------------------------------------------------------------ ResNet50

int resnet_block(Builder& b, int x, int filters, int stride, bool conv_shortcut) {
  constexpr double kEps = 1.001e-5;
  int shortcut = x;
  if (conv_shortcut) {
    shortcut = b.conv(x, 4 * filters, 1, 1, stride, Padding::kValid, true);
    shortcut = b.bn(shortcut, kEps);
  }
  int y = b.conv(x, filters, 1, 1, stride, Padding::kValid, true);
  y = b.relu(b.bn(y, kEps));
  y = b.conv(y, filters, 3, 3, 1, Padding::kSame, true);
  y = b.relu(b.bn(y, kEps));
  y = b.conv(y, 4 * filters, 1, 1, 1, Padding::kValid, true);
  y = b.bn(y, kEps);
  // Residual branch starts at zero so the untrained stack is well scaled.
  static_cast<nn::BatchNorm*>(b.net().layer(y))->zero_gamma();
  return b.relu(b.add({shortcut, y}));
}

void build_resnet50(Builder& b) {
  int x = b.pad(0, 3, 3, 3, 3);
  x = b.conv(x, 64, 7, 7, 2, Padding::kValid, true);
  x = b.relu(b.bn(x, 1.001e-5));
  x = b.pad(x, 1, 1, 1, 1);
  x = b.max_pool(x, 3, 2, Padding::kValid);
  const std::array<std::pair<int, int>, 4> stages{{{64, 3}, {128, 4}, {256, 6}, {512, 3}}};
  for (std::size_t s = 0; s < stages.size(); ++s) {
    auto [filters, blocks] = stages[s];
    x = resnet_block(b, x, filters, s == 0 ? 1 : 2, true);
    for (int i = 1; i < blocks; ++i) x = resnet_block(b, x, filters, 1, false);
  }
  b.gap(x);
}

// ------------------------------------------------------- EfficientNetB0

struct MbConvArgs {
  int kernel;
  int repeats;
  int filters_in;
  int filters_out;
  int expand_ratio;
  int stride;
};

// Asymmetric padding that reproduces "same" output for stride-2 valid convs.
std::array<int, 4> correct_pad(int size, int kernel) {
  const int adjust = 1 - size % 2;
  const int correct = kernel / 2;
  return {correct - adjust, correct, correct - adjust, correct};
}

int mbconv(Builder& b, int inputs, const MbConvArgs& a, int filters_in, int stride) {
  constexpr double kEps = 1e-3;
  constexpr double kSeRatio = 0.25;
  const auto swish = ActivationKind::kSwish;
  const int filters = filters_in * a.expand_ratio;
  int x = inputs;
  if (a.expand_ratio != 1) {
    x = b.conv(x, filters, 1, 1, 1, Padding::kSame, false);
    x = b.act(b.bn(x, kEps), swish);
  }
  if (stride == 2) {
    auto p = correct_pad(b.height(x), a.kernel);
    x = b.pad(x, p[0], p[1], p[2], p[3]);
    x = b.net().add<nn::DepthwiseConv2D>({x}, a.kernel, 2, Padding::kValid, false);
  } else {
    x = b.net().add<nn::DepthwiseConv2D>({x}, a.kernel, 1, Padding::kSame, false);
  }
  x = b.act(b.bn(x, kEps), swish);

  const int filters_se = std::max(1, static_cast<int>(filters_in * kSeRatio));
  int se = b.gap(x);
  se = b.conv(se, filters_se, 1, 1, 1, Padding::kSame, true);
  se = b.act(se, swish);
  se = b.conv(se, filters, 1, 1, 1, Padding::kSame, true);
  se = b.act(se, ActivationKind::kSigmoid);
  x = b.net().add<nn::ChannelScale>({x, se});

  x = b.conv(x, a.filters_out, 1, 1, 1, Padding::kSame, false);
  x = b.bn(x, kEps);
  if (stride == 1 && filters_in == a.filters_out) x = b.add({x, inputs});
  return x;
}

void build_efficientnet_b0(Builder& b) {
  const auto swish = ActivationKind::kSwish;
  auto p = correct_pad(b.height(0), 3);
  int x = b.pad(0, p[0], p[1], p[2], p[3]);
  x = b.conv(x, 32, 3, 3, 2, Padding::kValid, false);
  x = b.act(b.bn(x, 1e-3), swish);
  const std::array<MbConvArgs, 7> blocks{{
      {3, 1, 32, 16, 1, 1},
      {3, 2, 16, 24, 6, 2},
      {5, 2, 24, 40, 6, 2},
      {3, 3, 40, 80, 6, 2},
      {5, 3, 80, 112, 6, 1},
      {5, 4, 112, 192, 6, 2},
      {3, 1, 192, 320, 6, 1},
  }};
  for (const auto& args : blocks) {
    for (int i = 0; i < args.repeats; ++i) {
      x = mbconv(b, x, args, i == 0 ? args.filters_in : args.filters_out,
                 i == 0 ? args.stride : 1);
    }
  }
  x = b.conv(x, 1280, 1, 1, 1, Padding::kSame, false);
  x = b.act(b.bn(x, 1e-3), swish);
  b.gap(x);
}

// --------------------------------------------------- InceptionResNetV2

int conv_bn(Builder& b, int x, int filters, int kh, int kw, int stride = 1,
            Padding padding = Padding::kSame, bool relu = true) {
  x = b.conv(x, filters, kh, kw, stride, padding, false);
  x = b.bn(x, 1e-3, /*scale=*/false);
  return relu ? b.relu(x) : x;
}

int inception_block(Builder& b, int x, double scale, char type, bool relu = true) {
  std::vector<int> branches;
  if (type == 'a') {  // 35x35
    branches.push_back(conv_bn(b, x, 32, 1, 1));
    int b1 = conv_bn(b, x, 32, 1, 1);
    branches.push_back(conv_bn(b, b1, 32, 3, 3));
    int b2 = conv_bn(b, x, 32, 1, 1);
    b2 = conv_bn(b, b2, 48, 3, 3);
    branches.push_back(conv_bn(b, b2, 64, 3, 3));
  } else if (type == 'b') {  // 17x17
    branches.push_back(conv_bn(b, x, 192, 1, 1));
    int b1 = conv_bn(b, x, 128, 1, 1);
    b1 = conv_bn(b, b1, 160, 1, 7);
    branches.push_back(conv_bn(b, b1, 192, 7, 1));
  } else {  // 8x8
    branches.push_back(conv_bn(b, x, 192, 1, 1));
    int b1 = conv_bn(b, x, 192, 1, 1);
    b1 = conv_bn(b, b1, 224, 1, 3);
    branches.push_back(conv_bn(b, b1, 256, 3, 1));
  }
  int mixed = b.concat(branches);
  int up = b.conv(mixed, b.channels(x), 1, 1, 1, Padding::kSame, true);
  int y = b.net().add<nn::ScaledResidual>({x, up}, scale);
  return relu ? b.relu(y) : y;
}

void build_inception_resnet_v2(Builder& b) {
  int x = conv_bn(b, 0, 32, 3, 3, 2, Padding::kValid);
  x = conv_bn(b, x, 32, 3, 3, 1, Padding::kValid);
  x = conv_bn(b, x, 64, 3, 3);
  x = b.max_pool(x, 3, 2, Padding::kValid);
  x = conv_bn(b, x, 80, 1, 1, 1, Padding::kValid);
  x = conv_bn(b, x, 192, 3, 3, 1, Padding::kValid);
  x = b.max_pool(x, 3, 2, Padding::kValid);

  {  // mixed 5b
    int b0 = conv_bn(b, x, 96, 1, 1);
    int b1 = conv_bn(b, x, 48, 1, 1);
    b1 = conv_bn(b, b1, 64, 5, 5);
    int b2 = conv_bn(b, x, 64, 1, 1);
    b2 = conv_bn(b, b2, 96, 3, 3);
    b2 = conv_bn(b, b2, 96, 3, 3);
    int bp = b.avg_pool(x, 3, 1, Padding::kSame);
    bp = conv_bn(b, bp, 64, 1, 1);
    x = b.concat({b0, b1, b2, bp});
  }
  for (int i = 0; i < 10; ++i) x = inception_block(b, x, 0.17, 'a');
  {  // mixed 6a
    int b0 = conv_bn(b, x, 384, 3, 3, 2, Padding::kValid);
    int b1 = conv_bn(b, x, 256, 1, 1);
    b1 = conv_bn(b, b1, 256, 3, 3);
    b1 = conv_bn(b, b1, 384, 3, 3, 2, Padding::kValid);
    int bp = b.max_pool(x, 3, 2, Padding::kValid);
    x = b.concat({b0, b1, bp});
  }
  for (int i = 0; i < 20; ++i) x = inception_block(b, x, 0.1, 'b');
  {  // mixed 7a
    int b0 = conv_bn(b, x, 256, 1, 1);
    b0 = conv_bn(b, b0, 384, 3, 3, 2, Padding::kValid);
    int b1 = conv_bn(b, x, 256, 1, 1);
    b1 = conv_bn(b, b1, 288, 3, 3, 2, Padding::kValid);
    int b2 = conv_bn(b, x, 256, 1, 1);
    b2 = conv_bn(b, b2, 288, 3, 3);
    b2 = conv_bn(b, b2, 320, 3, 3, 2, Padding::kValid);
    int bp = b.max_pool(x, 3, 2, Padding::kValid);
    x = b.concat({b0, b1, b2, bp});
  }
  for (int i = 0; i < 9; ++i) x = inception_block(b, x, 0.2, 'c');
  x = inception_block(b, x, 1.0, 'c', /*relu=*/false);
  x = conv_bn(b, x, 1536, 1, 1);
  b.gap(x);
}

// ------------------------------------------------------------- tiny_test

void build_tiny_test(Builder& b) {
  int x = b.relu(b.conv(0, 8, 3, 3, 2, Padding::kSame, true));
  x = b.relu(b.conv(x, 16, 3, 3, 2, Padding::kSame, true));
  x = b.relu(b.conv(x, 16, 3, 3, 2, Padding::kSame, true));
  b.gap(x);
}

}  // namespace

BackboneSpec backbone_spec(std::string_view name) {
  for (const auto& spec : kRegistry) {
    if (spec.name == name) return spec;
  }
  throw ModelError("unknown backbone '" + std::string(name) + "'");
}

std::vector<std::string> registered_backbones() {
  std::vector<std::string> names;
  for (const auto& spec : kRegistry) names.push_back(spec.name);
  return names;
}

nn::Network build_backbone(const BackboneSpec& spec, std::uint64_t seed) {
  const BackboneSpec registered = backbone_spec(spec.name);
  if (registered.input_size != spec.input_size) {
    throw ModelError("backbone '" + spec.name + "' takes " +
                     std::to_string(registered.input_size) + " px input");
  }
  nn::Network net(spec.input_size, spec.input_size, 3, seed);
  Builder b(net);
  switch (registered.id) {
    case Backbone::kResNet50:
      build_resnet50(b);
      break;
    case Backbone::kEfficientNetB0:
      build_efficientnet_b0(b);
      break;
    case Backbone::kInceptionResNetV2:
      build_inception_resnet_v2(b);
      break;
    case Backbone::kTinyTest:
      build_tiny_test(b);
      break;
  }
  return net;
}

}  // namespace veriframe
