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

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "artscore/backbone.hpp"
#include "artscore/branch_head.hpp"
#include "artscore/image.hpp"
#include "artscore/taxonomy.hpp"

namespace artscore {

struct ModelConfig {
  std::string backbone = "toy";
  ToyBackboneConfig toy;
  int hidden1 = 512;
  int hidden2 = 64;
  EcaConfig eca;
  PreprocessConfig preprocess;
  std::uint64_t seed = 0;
};

// Backbone plus eleven scoring branches (total + one per attribute).
class BranchedModel {
 public:
  BranchedModel(std::unique_ptr<Backbone> backbone, int hidden1, int hidden2, const EcaConfig& eca,
                std::uint64_t seed = 0);
  BranchedModel(const BranchedModel& other);
  BranchedModel& operator=(const BranchedModel& other);
  BranchedModel(BranchedModel&&) noexcept = default;
  BranchedModel& operator=(BranchedModel&&) noexcept = default;

  Backbone& backbone() { return *backbone_; }
  const Backbone& backbone() const { return *backbone_; }
  int channels() const { return backbone_->out_channels(); }

  BranchHead<float>& head(std::size_t branch) { return heads_.at(branch); }
  const BranchHead<float>& head(std::size_t branch) const { return heads_.at(branch); }
  std::array<BranchHead<float>, kNumBranches>& heads() { return heads_; }
  const std::array<BranchHead<float>, kNumBranches>& heads() const { return heads_; }

  PreprocessConfig& preprocess_config() { return preprocess_; }
  const PreprocessConfig& preprocess_config() const { return preprocess_; }

  FeatureMap features(const RasterImage& image) const;
  // Runs the backbone once, then the total head and exactly the heads of the
  // category's applicable attributes.
  ScoreVector forward(const RasterImage& image, int category_index) const;
  ScoreVector forward_features(const FeatureMap& features, int category_index) const;

  // Every parameter value, backbone first then heads in branch order.
  std::vector<std::vector<float>> parameter_snapshot() const;

 private:
  void check_contract() const;

  std::unique_ptr<Backbone> backbone_;
  std::array<BranchHead<float>, kNumBranches> heads_;
  PreprocessConfig preprocess_;
};

BranchedModel build_model(const ModelConfig& config);

inline ScoreVector model_forward(const BranchedModel& model, const RasterImage& image, int category_index) {
  return model.forward(image, category_index);
}

// Checkpoint directory: manifest.json plus one little-endian float32 blob per
// component (backbone.bin, head_<branch>.bin).
void save_checkpoint(const BranchedModel& model, const std::filesystem::path& dir);
BranchedModel load_checkpoint(const std::filesystem::path& dir);

struct PretrainedLoadOptions {
  bool strict = true;
  bool include_total_head = true;
  bool include_attribute_heads = false;
};

struct LoadReport {
  std::vector<std::string> loaded;
  std::vector<std::string> warnings;  // missing tensors left at initialization
};

// Replaces the backbone (and optionally head) parameters with those stored in
// a checkpoint. Shape mismatches throw ValidationError naming every offending
// tensor; missing tensors throw in strict mode and are reported otherwise.
LoadReport load_pretrained(BranchedModel& model, const std::filesystem::path& dir,
                           const PretrainedLoadOptions& options = {});

}  // namespace artscore
