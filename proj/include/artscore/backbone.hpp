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

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artscore/kernels.hpp"
#include "artscore/tensor.hpp"

namespace artscore {

inline constexpr int kFeatureGrid = 11;  // every backbone emits C x 11 x 11

// Per-channel input normalization applied by a backbone before its first layer.
struct Normalization {
  std::vector<float> mean{0.0f, 0.0f, 0.0f};
  std::vector<float> stddev{1.0f, 1.0f, 1.0f};
  bool operator==(const Normalization&) const = default;
};

// Opaque activations saved by a training forward pass.
struct BackboneCache {
  virtual ~BackboneCache() = default;
};

// Feature extractor contract: 3 x S x S preprocessed image in, C x 11 x 11 out.
class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual std::string id() const = 0;
  virtual int out_channels() const = 0;
  virtual const Normalization& normalization() const = 0;
  // Architecture hyperparameters, recorded in checkpoint manifests.
  virtual nlohmann::ordered_json config_json() const = 0;

  virtual std::vector<ParamTensor*> parameters() = 0;
  std::vector<const ParamTensor*> parameters() const;

  virtual FeatureMap forward(const FeatureMap& input) const = 0;

  virtual bool supports_training() const { return false; }
  // Parameter-free prefix of the network (normalization, input pooling).
  // Trainers cache its output across epochs.
  virtual FeatureMap prepare(const FeatureMap& input) const { return normalize(input); }
  // Training forward pass starting from prepare()'s output.
  virtual FeatureMap forward_train(const FeatureMap& prepared, std::unique_ptr<BackboneCache>& cache) const;
  // Accumulates parameter gradients into `grads` (same order as parameters()).
  virtual void backward(const BackboneCache& cache, const FeatureMap& grad_output,
                        std::vector<std::vector<float>>& grads) const;

  virtual std::unique_ptr<Backbone> clone() const = 0;

  bool frozen() const { return frozen_; }
  void set_frozen(bool f) { frozen_ = f; }

 protected:
  FeatureMap normalize(const FeatureMap& input) const;

 private:
  bool frozen_ = true;
};

struct ToyBackboneConfig {
  int channels = 16;
  int hidden = 8;
  int input_pool = 88;  // input is average-pooled to this size first
};

// Small trainable convolution stack: pool -> conv3x3/ReLU -> conv3x3 s2/ReLU ->
// adaptive pool to 11 x 11.
class ToyBackbone final : public Backbone {
 public:
  explicit ToyBackbone(ToyBackboneConfig config = {}, std::uint64_t seed = 0);

  std::string id() const override { return "toy"; }
  int out_channels() const override { return config_.channels; }
  const Normalization& normalization() const override { return norm_; }
  nlohmann::ordered_json config_json() const override;
  std::vector<ParamTensor*> parameters() override;
  FeatureMap forward(const FeatureMap& input) const override;
  bool supports_training() const override { return true; }
  FeatureMap prepare(const FeatureMap& input) const override;
  FeatureMap forward_train(const FeatureMap& prepared, std::unique_ptr<BackboneCache>& cache) const override;
  void backward(const BackboneCache& cache, const FeatureMap& grad_output,
                std::vector<std::vector<float>>& grads) const override;
  std::unique_ptr<Backbone> clone() const override { return std::make_unique<ToyBackbone>(*this); }

 private:
  kernels::ConvShape conv1_shape() const;
  kernels::ConvShape conv2_shape() const;

  ToyBackboneConfig config_;
  Normalization norm_;
  ParamTensor conv1_w_, conv1_b_, conv2_w_, conv2_b_;
};

// EfficientNet-B4 feature extractor, inference only. Batch norms are stored
// folded into the preceding convolution's weight and bias. The stem output is
// adaptively pooled to 48 x 190 x 190 before the MBConv stages and the final
// 1792-channel map to 11 x 11.
class EfficientNetB4 final : public Backbone {
 public:
  explicit EfficientNetB4(std::uint64_t seed = 0, int stem_pool = 190);

  std::string id() const override { return "efficientnet_b4"; }
  int out_channels() const override { return 1792; }
  const Normalization& normalization() const override { return norm_; }
  nlohmann::ordered_json config_json() const override;
  std::vector<ParamTensor*> parameters() override;
  FeatureMap forward(const FeatureMap& input) const override;
  std::unique_ptr<Backbone> clone() const override { return std::make_unique<EfficientNetB4>(*this); }

  struct Conv {
    kernels::ConvShape shape;  // spatial dims filled at run time
    ParamTensor weight, bias;
  };
  struct Block {
    int in_channels = 0, out_channels = 0, expand = 1, kernel = 3, stride = 1;
    bool has_expand = false;
    Conv expand_conv, depthwise, se_reduce, se_expand, project;
  };

  std::size_t num_blocks() const { return blocks_.size(); }

 private:
  int stem_pool_;
  Normalization norm_;
  Conv stem_, head_;
  std::vector<Block> blocks_;
};

// Builds a backbone from its manifest id and config (see config_json()).
std::unique_ptr<Backbone> make_backbone(const std::string& id, const nlohmann::json& config, std::uint64_t seed = 0);

}  // namespace artscore
