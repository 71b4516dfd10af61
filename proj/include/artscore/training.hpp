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
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artscore/model.hpp"

namespace artscore {

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.98;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 1e-4;
  int plateau_patience = 2;
  double lr_factor = 0.5;
  double improvement_threshold = 1e-6;
  double min_lr = 1e-7;
  int max_epochs = 50;
  std::uint64_t seed = 0;
  // Lets the backbone receive updates (only backbones that support training).
  bool train_backbone = false;

  void validate() const;
};

double regression_loss(std::span<const double> predicted, std::span<const double> target);

// Multiplies the learning rate by `factor` each time `patience` consecutive
// epochs fail to improve the best loss by at least `threshold`. The counter
// restarts after every reduction.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, double factor, int patience, double threshold = 1e-6);

  // Returns true when this step reduced the learning rate.
  bool step(double loss);
  double lr() const { return lr_; }
  double best() const { return best_; }
  int epochs_since_improvement() const { return bad_epochs_; }
  int reductions() const { return reductions_; }

 private:
  double lr_;
  double factor_;
  int patience_;
  double threshold_;
  double best_;
  int bad_epochs_ = 0;
  int reductions_ = 0;
};

// Adam with decoupled weight decay over a fixed list of float tensors.
class AdamW {
 public:
  AdamW(std::vector<std::span<float>> params, double beta1, double beta2, double epsilon, double weight_decay);

  void step(const std::vector<std::span<const float>>& grads, double lr);
  long steps() const { return t_; }

 private:
  std::vector<std::span<float>> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_, weight_decay_;
  long t_ = 0;
};

// Loads the raster for an image id.
using ImageProvider = std::function<RasterImage(const std::string& image_id)>;

struct Example {
  std::string image_id;
  int category_index = 0;
  ScoreVector target;  // normalized
};

struct TrainingData {
  std::vector<Example> train;
  std::vector<Example> validation;
  ImageProvider images;
};

struct EpochRecord {
  int stage = 0;
  std::string branch;
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;  // empty when the masked validation subset is empty
  double lr = 0.0;                 // after the end-of-epoch scheduler step
};

nlohmann::ordered_json to_json(const EpochRecord& r);

struct TrainingState {
  std::string current_branch;
  int epoch = 0;
  double lr_current = 0.0;
  double best_val_loss = 0.0;
  int epochs_since_improvement = 0;
  std::array<bool, kNumBranches> completed{};
};

struct StageResult {
  int stage = 0;
  std::size_t branch = 0;
  std::vector<EpochRecord> history;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
};

// Thrown when a loss turns non-finite; carries the state at the failure.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, TrainingState state)
      : NumericError(what), state_(std::move(state)) {}
  const TrainingState& state() const { return state_; }

 private:
  TrainingState state_;
};

// Pooled backbone features per image id, invalidated whenever the backbone
// parameters change.
class FeatureCache {
 public:
  const std::vector<float>& pooled(const BranchedModel& model, const ImageProvider& images,
                                   const std::string& image_id);
  // Output of Backbone::prepare(); parameter-free, so it survives clear().
  const FeatureMap& prepared(const BranchedModel& model, const ImageProvider& images, const std::string& image_id);
  void clear() { pooled_.clear(); }

 private:
  std::map<std::string, std::vector<float>> pooled_;
  std::map<std::string, FeatureMap> prepared_;
};

struct StageOptions {
  int stage = 1;
  std::function<void(const EpochRecord&)> on_epoch;
  FeatureCache* cache = nullptr;
};

// Examples whose category mask includes the branch's attribute (all for total).
std::vector<const Example*> masked_subset(const std::vector<Example>& examples, std::size_t branch);

// Trains one head with every other head frozen. The backbone is updated too
// when cfg.train_backbone is set. `branch` is kTotalBranch or branch_of(a).
StageResult train_branch(BranchedModel& model, std::size_t branch, const TrainingData& data,
                         const TrainConfig& cfg, const StageOptions& options = {});

StageResult train_total_branch(BranchedModel& model, const TrainingData& data, const TrainConfig& cfg,
                               const StageOptions& options = {});
StageResult train_attribute_branch(BranchedModel& model, Attribute attribute, const TrainingData& data,
                                   const TrainConfig& cfg, const StageOptions& options = {});

struct ProtocolOptions {
  std::vector<Attribute> attribute_order{kAllAttributes.begin(), kAllAttributes.end()};
  // When set: per-stage checkpoints, protocol_log.jsonl and protocol_state.json
  // are written here, and completed stages are skipped on rerun.
  std::optional<std::filesystem::path> output_dir;
  std::function<void(const StageResult&)> on_stage_complete;
};

struct ProtocolResult {
  std::vector<StageResult> stages;    // stages run by this call
  std::vector<int> skipped_stages;    // stages restored from a previous run
};

std::string stage_dir_name(int stage, std::size_t branch);

// Total head first, then each attribute head in the configured order, each
// stage starting from the model accumulated so far.
ProtocolResult run_full_protocol(BranchedModel& model, const TrainingData& data, const TrainConfig& cfg,
                                 const ProtocolOptions& options = {});

}  // namespace artscore
