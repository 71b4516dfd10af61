/*
 * Copyright 2026 The artscore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "artscore/backbone.hpp"

#include <cmath>
#include <random>

#include "artscore/errors.hpp"

namespace artscore {

std::vector<const ParamTensor*> Backbone::parameters() const {
  auto mut = const_cast<Backbone*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

FeatureMap Backbone::forward_train(const FeatureMap&, std::unique_ptr<BackboneCache>&) const {
  throw ConfigError("backbone '" + id() + "' does not support training");
}

void Backbone::backward(const BackboneCache&, const FeatureMap&, std::vector<std::vector<float>>&) const {
  throw ConfigError("backbone '" + id() + "' does not support training");
}

FeatureMap Backbone::normalize(const FeatureMap& input) const {
  if (input.channels != 3) throw DomainError("backbone input must have 3 channels");
  const auto& n = normalization();
  FeatureMap out = input;
  const std::size_t plane = input.plane();
  for (int c = 0; c < 3; ++c) {
    float* p = out.values.data() + static_cast<std::size_t>(c) * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - n.mean[c]) / n.stddev[c];
  }
  return out;
}

namespace {

void fill_uniform(ParamTensor& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (float& v : t.values) v = static_cast<float>(dist(rng));
}

FeatureMap pool_to(const FeatureMap& in, int out_h, int out_w) {
  if (in.height == out_h && in.width == out_w) return in;
  FeatureMap out(in.channels, out_h, out_w);
  kernels::adaptive_avg_pool2d<float>(in.channels, in.height, in.width, out_h, out_w, in.span(), out.span());
  return out;
}

FeatureMap run_conv(const kernels::ConvShape& base, const ParamTensor& w, const ParamTensor& b,
                    const FeatureMap& in) {
  kernels::ConvShape s = base;
  s.in_height = in.height;
  s.in_width = in.width;
  if (in.channels != s.in_channels || !s.valid()) throw DomainError("convolution shape mismatch");
  FeatureMap out(s.out_channels, s.out_height(), s.out_width());
  kernels::conv2d<float>(s, in.span(), w.span(), b.span(), out.span());
  return out;
}

void relu_inplace(FeatureMap& f) {
  for (float& v : f.values) v = std::max(v, 0.0f);
}

void swish_inplace(std::span<float> v) {
  for (float& x : v) x = x / (1.0f + std::exp(-x));
}

}  // namespace

// ---------------------------------------------------------------------------
// ToyBackbone

struct ToyCache final : BackboneCache {
  FeatureMap pooled_input, z1, a1, z2;
};

ToyBackbone::ToyBackbone(ToyBackboneConfig config, std::uint64_t seed) : config_(config) {
  if (config.channels < 1 || config.hidden < 1 || config.input_pool < 2 * kFeatureGrid) {
    throw ConfigError("invalid toy backbone configuration");
  }
  conv1_w_ = ParamTensor("conv1.weight", {config.hidden, 3, 3, 3});
  conv1_b_ = ParamTensor("conv1.bias", {config.hidden});
  conv2_w_ = ParamTensor("conv2.weight", {config.channels, config.hidden, 3, 3});
  conv2_b_ = ParamTensor("conv2.bias", {config.channels});
  std::mt19937_64 rng(seed);
  norm_.mean = {0.485f, 0.456f, 0.406f};
  norm_.stddev = {0.229f, 0.224f, 0.225f};
  // He-uniform weights, zero biases.
  fill_uniform(conv1_w_, std::sqrt(6.0 / 27.0), rng);
  fill_uniform(conv2_w_, std::sqrt(6.0 / (9.0 * config.hidden)), rng);
}

nlohmann::ordered_json ToyBackbone::config_json() const {
  return {{"channels", config_.channels}, {"hidden", config_.hidden}, {"input_pool", config_.input_pool}};
}

std::vector<ParamTensor*> ToyBackbone::parameters() { return {&conv1_w_, &conv1_b_, &conv2_w_, &conv2_b_}; }

kernels::ConvShape ToyBackbone::conv1_shape() const {
  return {3, config_.input_pool, config_.input_pool, config_.hidden, 3, 1, 1, 1};
}

kernels::ConvShape ToyBackbone::conv2_shape() const {
  return {config_.hidden, config_.input_pool, config_.input_pool, config_.channels, 3, 2, 1, 1};
}

FeatureMap ToyBackbone::prepare(const FeatureMap& input) const {
  return pool_to(normalize(input), config_.input_pool, config_.input_pool);
}

FeatureMap ToyBackbone::forward(const FeatureMap& input) const {
  std::unique_ptr<BackboneCache> cache;
  return forward_train(prepare(input), cache);
}

FeatureMap ToyBackbone::forward_train(const FeatureMap& prepared, std::unique_ptr<BackboneCache>& cache_out) const {
  if (prepared.channels != 3 || prepared.height != config_.input_pool || prepared.width != config_.input_pool) {
    throw DomainError("toy backbone expects a prepared 3 x " + std::to_string(config_.input_pool) + " x " +
                      std::to_string(config_.input_pool) + " input");
  }
  auto cache = std::make_unique<ToyCache>();
  cache->pooled_input = prepared;
  cache->z1 = run_conv(conv1_shape(), conv1_w_, conv1_b_, cache->pooled_input);
  cache->a1 = cache->z1;
  relu_inplace(cache->a1);
  cache->z2 = run_conv(conv2_shape(), conv2_w_, conv2_b_, cache->a1);
  FeatureMap a2 = cache->z2;
  relu_inplace(a2);
  FeatureMap out = pool_to(a2, kFeatureGrid, kFeatureGrid);
  cache_out = std::move(cache);
  return out;
}

void ToyBackbone::backward(const BackboneCache& base, const FeatureMap& grad_output,
                           std::vector<std::vector<float>>& grads) const {
  const auto& cache = dynamic_cast<const ToyCache&>(base);
  if (grads.size() != 4) throw DomainError("toy backbone expects 4 gradient buffers");

  const FeatureMap& z2 = cache.z2;
  FeatureMap g2(z2.channels, z2.height, z2.width);
  if (z2.height == kFeatureGrid && z2.width == kFeatureGrid) {
    g2 = grad_output;
  } else {
    kernels::adaptive_avg_pool2d_backward<float>(z2.channels, z2.height, z2.width, kFeatureGrid, kFeatureGrid,
                                                 grad_output.span(), g2.span());
  }
  for (std::size_t i = 0; i < g2.size(); ++i)
    if (z2.values[i] <= 0.0f) g2.values[i] = 0.0f;

  kernels::ConvShape s2 = conv2_shape();
  FeatureMap ga1(cache.a1.channels, cache.a1.height, cache.a1.width);
  std::vector<float> dw2(conv2_w_.size()), db2(conv2_b_.size());
  kernels::conv2d_backward<float>(s2, cache.a1.span(), conv2_w_.span(), g2.span(), ga1.span(), dw2, db2);
  for (std::size_t i = 0; i < ga1.size(); ++i)
    if (cache.z1.values[i] <= 0.0f) ga1.values[i] = 0.0f;

  kernels::ConvShape s1 = conv1_shape();
  std::vector<float> dw1(conv1_w_.size()), db1(conv1_b_.size());
  kernels::conv2d_backward<float>(s1, cache.pooled_input.span(), conv1_w_.span(), ga1.span(), {}, dw1, db1);

  auto accumulate = [](std::vector<float>& dst, const std::vector<float>& src) {
    if (dst.size() != src.size()) dst.assign(src.size(), 0.0f);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
  };
  accumulate(grads[0], dw1);
  accumulate(grads[1], db1);
  accumulate(grads[2], dw2);
  accumulate(grads[3], db2);
}

// ---------------------------------------------------------------------------
// EfficientNet-B4

namespace {

struct StageSpec {
  int expand, kernel, stride, in, out, repeats;
};

// Base (B0) stage table; B4 uses width 1.4 and depth 1.8.
constexpr StageSpec kB0Stages[] = {
    {1, 3, 1, 32, 16, 1},   {6, 3, 2, 16, 24, 2},  {6, 5, 2, 24, 40, 2},  {6, 3, 2, 40, 80, 3},
    {6, 5, 1, 80, 112, 3},  {6, 5, 2, 112, 192, 4}, {6, 3, 1, 192, 320, 1},
};
constexpr double kWidth = 1.4;
constexpr double kDepth = 1.8;

int round_filters(int filters) {
  const double scaled = filters * kWidth;
  int rounded = std::max(8, static_cast<int>(scaled + 4) / 8 * 8);
  if (rounded < 0.9 * scaled) rounded += 8;
  return rounded;
}

int round_repeats(int repeats) { return static_cast<int>(std::ceil(kDepth * repeats)); }

EfficientNetB4::Conv make_conv(const std::string& name, int in, int out, int k, int stride, int groups,
                               double gain, std::mt19937_64& rng) {
  EfficientNetB4::Conv conv;
  conv.shape = {in, 0, 0, out, k, stride, k / 2, groups};
  conv.weight = ParamTensor(name + ".weight", {out, in / groups, k, k});
  conv.bias = ParamTensor(name + ".bias", {out});
  const double fan_in = static_cast<double>(in / groups) * k * k;
  fill_uniform(conv.weight, gain * std::sqrt(3.0 / fan_in), rng);
  return conv;
}

}  // namespace

EfficientNetB4::EfficientNetB4(std::uint64_t seed, int stem_pool) : stem_pool_(stem_pool) {
  if (stem_pool < 16) throw ConfigError("stem pool size too small");
  norm_.mean = {0.485f, 0.456f, 0.406f};
  norm_.stddev = {0.229f, 0.224f, 0.225f};
  std::mt19937_64 rng(seed);
  stem_ = make_conv("stem", 3, round_filters(32), 3, 2, 1, 1.0, rng);
  int idx = 0;
  for (const auto& st : kB0Stages) {
    const int in = round_filters(st.in), out = round_filters(st.out);
    for (int r = 0; r < round_repeats(st.repeats); ++r) {
      Block b;
      b.in_channels = r == 0 ? in : out;
      b.out_channels = out;
      b.expand = st.expand;
      b.kernel = st.kernel;
      b.stride = r == 0 ? st.stride : 1;
      b.has_expand = st.expand != 1;
      const int mid = b.in_channels * st.expand;
      const int squeezed = std::max(1, static_cast<int>(b.in_channels * 0.25));
      const std::string p = "blocks." + std::to_string(idx);
      if (b.has_expand) b.expand_conv = make_conv(p + ".expand", b.in_channels, mid, 1, 1, 1, 1.0, rng);
      b.depthwise = make_conv(p + ".depthwise", mid, mid, b.kernel, b.stride, mid, 1.0, rng);
      b.se_reduce = make_conv(p + ".se_reduce", mid, squeezed, 1, 1, 1, 1.0, rng);
      b.se_expand = make_conv(p + ".se_expand", squeezed, mid, 1, 1, 1, 1.0, rng);
      b.project = make_conv(p + ".project", mid, out, 1, 1, 1, 0.5, rng);
      blocks_.push_back(std::move(b));
      ++idx;
    }
  }
  head_ = make_conv("head", round_filters(320), round_filters(1280), 1, 1, 1, 1.0, rng);
}

nlohmann::ordered_json EfficientNetB4::config_json() const {
  return {{"width", kWidth}, {"depth", kDepth}, {"stem_pool", stem_pool_}, {"blocks", blocks_.size()}};
}

std::vector<ParamTensor*> EfficientNetB4::parameters() {
  std::vector<ParamTensor*> out{&stem_.weight, &stem_.bias};
  for (auto& b : blocks_) {
    if (b.has_expand) {
      out.push_back(&b.expand_conv.weight);
      out.push_back(&b.expand_conv.bias);
    }
    for (Conv* c : {&b.depthwise, &b.se_reduce, &b.se_expand, &b.project}) {
      out.push_back(&c->weight);
      out.push_back(&c->bias);
    }
  }
  out.push_back(&head_.weight);
  out.push_back(&head_.bias);
  return out;
}

FeatureMap EfficientNetB4::forward(const FeatureMap& input) const {
  FeatureMap x = run_conv(stem_.shape, stem_.weight, stem_.bias, normalize(input));
  swish_inplace(x.span());
  x = pool_to(x, stem_pool_, stem_pool_);

  for (const auto& b : blocks_) {
    FeatureMap h = b.has_expand ? run_conv(b.expand_conv.shape, b.expand_conv.weight, b.expand_conv.bias, x) : x;
    if (b.has_expand) swish_inplace(h.span());
    h = run_conv(b.depthwise.shape, b.depthwise.weight, b.depthwise.bias, h);
    swish_inplace(h.span());

    // Squeeze-and-excitation on the pooled channel vector.
    const auto pooled = global_average_pool(h);
    const int mid = h.channels, squeezed = b.se_reduce.shape.out_channels;
    std::vector<float> r(static_cast<std::size_t>(squeezed)), e(static_cast<std::size_t>(mid));
    kernels::dense<float>(1, mid, squeezed, pooled, b.se_reduce.weight.span(), b.se_reduce.bias.span(), r);
    swish_inplace(r);
    kernels::dense<float>(1, squeezed, mid, r, b.se_expand.weight.span(), b.se_expand.bias.span(), e);
    const std::size_t plane = h.plane();
    for (int c = 0; c < mid; ++c) {
      const float gate = 1.0f / (1.0f + std::exp(-e[static_cast<std::size_t>(c)]));
      float* p = h.values.data() + static_cast<std::size_t>(c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] *= gate;
    }

    h = run_conv(b.project.shape, b.project.weight, b.project.bias, h);
    if (b.stride == 1 && b.in_channels == b.out_channels) {
      for (std::size_t i = 0; i < h.size(); ++i) h.values[i] += x.values[i];
    }
    x = std::move(h);
  }

  x = run_conv(head_.shape, head_.weight, head_.bias, x);
  swish_inplace(x.span());
  return pool_to(x, kFeatureGrid, kFeatureGrid);
}

std::unique_ptr<Backbone> make_backbone(const std::string& id, const nlohmann::json& config, std::uint64_t seed) {
  if (id == "toy") {
    ToyBackboneConfig c;
    c.channels = config.value("channels", c.channels);
    c.hidden = config.value("hidden", c.hidden);
    c.input_pool = config.value("input_pool", c.input_pool);
    return std::make_unique<ToyBackbone>(c, seed);
  }
  if (id == "efficientnet_b4") {
    return std::make_unique<EfficientNetB4>(seed, config.value("stem_pool", 190));
  }
  throw ConfigError("unknown backbone '" + id + "'");
}

}  // namespace artscore
