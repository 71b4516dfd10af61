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

#include "artscore/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "artscore/errors.hpp"

namespace artscore {

using nlohmann::json;
using nlohmann::ordered_json;

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (batch_size < 1) problems.push_back("batch_size must be positive");
  if (!(learning_rate > 0)) problems.push_back("learning_rate must be positive");
  if (!(adam_beta1 > 0 && adam_beta1 < 1)) problems.push_back("adam_beta1 must lie in (0,1)");
  if (!(adam_beta2 > 0 && adam_beta2 < 1)) problems.push_back("adam_beta2 must lie in (0,1)");
  if (!(adam_epsilon > 0)) problems.push_back("adam_epsilon must be positive");
  if (weight_decay < 0) problems.push_back("weight_decay must be non-negative");
  if (plateau_patience < 1) problems.push_back("plateau_patience must be positive");
  if (!(lr_factor > 0 && lr_factor < 1)) problems.push_back("lr_factor must lie in (0,1)");
  if (max_epochs < 1) problems.push_back("max_epochs must be positive");
  if (!problems.empty()) throw ValidationError("invalid training configuration", std::move(problems));
}

double regression_loss(std::span<const double> predicted, std::span<const double> target) {
  if (predicted.empty()) throw DomainError("regression loss of an empty batch");
  if (predicted.size() != target.size()) throw DomainError("prediction/target length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predicted.size());
}

PlateauScheduler::PlateauScheduler(double initial_lr, double factor, int patience, double threshold)
    : lr_(initial_lr),
      factor_(factor),
      patience_(patience),
      threshold_(threshold),
      best_(std::numeric_limits<double>::infinity()) {}

bool PlateauScheduler::step(double loss) {
  if (loss <= best_ - threshold_) {
    best_ = loss;
    bad_epochs_ = 0;
    return false;
  }
  if (++bad_epochs_ >= patience_) {
    lr_ *= factor_;
    bad_epochs_ = 0;
    ++reductions_;
    return true;
  }
  return false;
}

AdamW::AdamW(std::vector<std::span<float>> params, double beta1, double beta2, double epsilon, double weight_decay)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(epsilon), weight_decay_(weight_decay) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void AdamW::step(const std::vector<std::span<const float>>& grads, double lr) {
  if (grads.size() != params_.size()) throw DomainError("optimizer gradient count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto p = params_[k];
    const auto g = grads[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      double value = p[i];
      value -= lr * weight_decay_ * value;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * static_cast<double>(g[i]) * g[i];
      value -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      p[i] = static_cast<float>(value);
    }
  }
}

ordered_json to_json(const EpochRecord& r) {
  ordered_json j;
  j["stage"] = r.stage;
  j["branch"] = r.branch;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["val_loss"] = r.val_loss ? json(*r.val_loss) : json(nullptr);
  j["lr"] = r.lr;
  return j;
}

const std::vector<float>& FeatureCache::pooled(const BranchedModel& model, const ImageProvider& images,
                                               const std::string& image_id) {
  auto it = pooled_.find(image_id);
  if (it != pooled_.end()) return it->second;
  if (!images) throw ConfigError("training data has no image provider");
  auto g = global_average_pool(model.features(images(image_id)));
  return pooled_.emplace(image_id, std::move(g)).first->second;
}

const FeatureMap& FeatureCache::prepared(const BranchedModel& model, const ImageProvider& images,
                                        const std::string& image_id) {
  auto it = prepared_.find(image_id);
  if (it != prepared_.end()) return it->second;
  if (!images) throw ConfigError("training data has no image provider");
  auto x = model.backbone().prepare(preprocess(images(image_id), model.preprocess_config()));
  return prepared_.emplace(image_id, std::move(x)).first->second;
}

std::vector<const Example*> masked_subset(const std::vector<Example>& examples, std::size_t branch) {
  const auto attr = branch_attribute(branch);
  std::vector<const Example*> out;
  for (const auto& e : examples) {
    if (!attr || applicable_attributes(e.category_index).contains(*attr)) out.push_back(&e);
  }
  return out;
}

namespace {

double target_of(const Example& e, std::size_t branch) {
  const auto attr = branch_attribute(branch);
  if (!attr) return e.target.total;
  auto it = e.target.attributes.find(*attr);
  if (it == e.target.attributes.end()) {
    throw DomainError("example " + e.image_id + " has no " + std::string(attribute_key(*attr)) + " target");
  }
  return it->second;
}

std::uint64_t stage_seed(std::uint64_t seed, int stage) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(stage + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::span<float>> head_param_spans(BranchHead<float>& head) {
  std::vector<std::span<float>> out;
  for (auto* t : head.params().tensors()) out.emplace_back(*t);
  return out;
}

// Mean regression loss of one head on a subset, using frozen-backbone features.
double subset_loss(const BranchedModel& model, std::size_t branch, const std::vector<const Example*>& subset,
                   const ImageProvider& images, FeatureCache& cache) {
  const auto& head = model.head(branch);
  const int c_n = head.shape().channels;
  std::vector<float> pooled;
  pooled.reserve(subset.size() * static_cast<std::size_t>(c_n));
  std::vector<double> targets;
  for (const Example* e : subset) {
    const auto& g = cache.pooled(model, images, e->image_id);
    pooled.insert(pooled.end(), g.begin(), g.end());
    targets.push_back(target_of(*e, branch));
  }
  const auto fwd = head.forward_pooled(pooled, static_cast<int>(subset.size()));
  std::vector<double> preds(fwd.score.begin(), fwd.score.end());
  return regression_loss(preds, targets);
}

}  // namespace

StageResult train_branch(BranchedModel& model, std::size_t branch, const TrainingData& data, const TrainConfig& cfg,
                         const StageOptions& options) {
  cfg.validate();
  if (branch >= kNumBranches) throw DomainError("unknown branch " + std::to_string(branch));
  const std::string name = branch_name(branch);

  const auto train = masked_subset(data.train, branch);
  const auto val = masked_subset(data.validation, branch);
  if (data.train.empty()) throw DomainError("empty train set");
  if (train.empty()) throw DomainError("empty masked subset for " + name);

  Backbone& backbone = model.backbone();
  if (cfg.train_backbone && !backbone.supports_training()) {
    throw ConfigError("backbone '" + backbone.id() + "' does not support fine-tuning");
  }
  for (std::size_t b = 0; b < kNumBranches; ++b) model.head(b).set_frozen(b != branch);
  backbone.set_frozen(!cfg.train_backbone);

  BranchHead<float>& head = model.head(branch);
  std::vector<std::span<float>> params = head_param_spans(head);
  std::vector<ParamTensor*> bb_params;
  if (!backbone.frozen()) {
    bb_params = backbone.parameters();
    for (ParamTensor* p : bb_params) params.emplace_back(p->values);
  }
  AdamW optimizer(params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon, cfg.weight_decay);
  PlateauScheduler scheduler(cfg.learning_rate, cfg.lr_factor, cfg.plateau_patience, cfg.improvement_threshold);

  FeatureCache local_cache;
  FeatureCache& cache = options.cache ? *options.cache : local_cache;
  if (!backbone.frozen()) cache.clear();

  std::mt19937_64 rng(stage_seed(cfg.seed, options.stage));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const int c_n = head.shape().channels;

  StageResult result;
  result.stage = options.stage;
  result.branch = branch;
  result.train_samples = train.size();
  result.validation_samples = val.size();

  TrainingState state;
  state.current_branch = name;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    state.epoch = epoch;
    state.lr_current = scheduler.lr();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const int batch = static_cast<int>(end - start);
      std::vector<float> pooled;
      pooled.reserve(static_cast<std::size_t>(batch) * c_n);
      std::vector<double> targets;
      std::vector<std::unique_ptr<BackboneCache>> bb_caches;
      std::vector<std::pair<int, int>> spatial;

      for (std::size_t i = start; i < end; ++i) {
        const Example& e = *train[order[i]];
        targets.push_back(target_of(e, branch));
        if (backbone.frozen()) {
          const auto& g = cache.pooled(model, data.images, e.image_id);
          pooled.insert(pooled.end(), g.begin(), g.end());
        } else {
          std::unique_ptr<BackboneCache> bc;
          FeatureMap f = backbone.forward_train(cache.prepared(model, data.images, e.image_id), bc);
          const auto g = global_average_pool(f);
          pooled.insert(pooled.end(), g.begin(), g.end());
          bb_caches.push_back(std::move(bc));
          spatial.emplace_back(f.height, f.width);
        }
      }

      const auto fwd = head.forward_pooled(pooled, batch);
      std::vector<double> preds(fwd.score.begin(), fwd.score.end());
      const double loss = regression_loss(preds, targets);
      if (!std::isfinite(loss)) {
        state.best_val_loss = scheduler.best();
        state.epochs_since_improvement = scheduler.epochs_since_improvement();
        throw TrainingAborted("non-finite training loss in branch " + name + " at epoch " + std::to_string(epoch),
                              state);
      }
      loss_sum += loss * batch;

      std::vector<float> grad_score(static_cast<std::size_t>(batch));
      for (int n = 0; n < batch; ++n)
        grad_score[static_cast<std::size_t>(n)] = static_cast<float>(2.0 * (preds[n] - targets[n]) / batch);

      std::vector<float> grad_pooled;
      if (!backbone.frozen()) grad_pooled.assign(pooled.size(), 0.0f);
      HeadParams<float> grads = head.backward(fwd, grad_score, grad_pooled);

      std::vector<std::span<const float>> grad_spans;
      for (const auto* t : grads.tensors()) grad_spans.emplace_back(*t);
      std::vector<std::vector<float>> bb_grads;
      if (!backbone.frozen()) {
        bb_grads.resize(bb_params.size());
        for (std::size_t p = 0; p < bb_params.size(); ++p) bb_grads[p].assign(bb_params[p]->size(), 0.0f);
        for (int n = 0; n < batch; ++n) {
          const auto [h, w] = spatial[static_cast<std::size_t>(n)];
          FeatureMap gf(c_n, h, w);
          const float inv = 1.0f / static_cast<float>(h * w);
          for (int c = 0; c < c_n; ++c) {
            const float v = grad_pooled[static_cast<std::size_t>(n) * c_n + c] * inv;
            std::fill(gf.values.begin() + static_cast<std::ptrdiff_t>(c) * h * w,
                      gf.values.begin() + static_cast<std::ptrdiff_t>(c + 1) * h * w, v);
          }
          backbone.backward(*bb_caches[static_cast<std::size_t>(n)], gf, bb_grads);
        }
        for (const auto& g : bb_grads) grad_spans.emplace_back(g);
      }
      optimizer.step(grad_spans, scheduler.lr());
      if (!backbone.frozen()) cache.clear();
    }

    EpochRecord rec;
    rec.stage = options.stage;
    rec.branch = name;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    if (!val.empty()) rec.val_loss = subset_loss(model, branch, val, data.images, cache);
    const double monitored = rec.val_loss.value_or(rec.train_loss);
    if (!std::isfinite(monitored)) {
      throw TrainingAborted("non-finite validation loss in branch " + name, state);
    }
    scheduler.step(monitored);
    rec.lr = scheduler.lr();
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
    if (scheduler.lr() < cfg.min_lr) break;
  }
  return result;
}

StageResult train_total_branch(BranchedModel& model, const TrainingData& data, const TrainConfig& cfg,
                               const StageOptions& options) {
  return train_branch(model, kTotalBranch, data, cfg, options);
}

StageResult train_attribute_branch(BranchedModel& model, Attribute attribute, const TrainingData& data,
                                   const TrainConfig& cfg, const StageOptions& options) {
  return train_branch(model, branch_of(attribute), data, cfg, options);
}

// ---------------------------------------------------------------------------
// Protocol

std::string stage_dir_name(int stage, std::size_t branch) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "stage_%02d_", stage);
  return buf + branch_name(branch);
}

namespace {

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

std::vector<int> read_completed(const std::filesystem::path& state_file) {
  std::ifstream in(state_file);
  if (!in) return {};
  try {
    return json::parse(in).at("completed_stages").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw IoError("malformed protocol state " + state_file.string() + ": " + e.what());
  }
}

}  // namespace

ProtocolResult run_full_protocol(BranchedModel& model, const TrainingData& data, const TrainConfig& cfg,
                                 const ProtocolOptions& options) {
  cfg.validate();
  std::vector<std::size_t> branches{kTotalBranch};
  for (Attribute a : options.attribute_order) branches.push_back(branch_of(a));
  {
    std::vector<std::size_t> sorted = branches;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConfigError("attribute order lists a branch twice");
    }
  }

  ProtocolResult result;
  std::vector<int> completed;
  std::filesystem::path log_path, state_path;
  if (options.output_dir) {
    std::filesystem::create_directories(*options.output_dir);
    log_path = *options.output_dir / "protocol_log.jsonl";
    state_path = *options.output_dir / "protocol_state.json";
    completed = read_completed(state_path);
    if (!completed.empty()) {
      // Continue from the last finished stage; drop log lines of the stage
      // that did not finish.
      const int last = *std::max_element(completed.begin(), completed.end());
      model = load_checkpoint(*options.output_dir / stage_dir_name(last, branches.at(static_cast<std::size_t>(last - 1))));
      std::ifstream in(log_path);
      std::string kept, line;
      while (std::getline(in, line)) {
        if (!line.empty() && json::parse(line).at("stage").get<int>() <= last) kept += line + '\n';
      }
      write_text_atomic(log_path, kept);
    } else {
      save_checkpoint(model, *options.output_dir / "stage_00_initial");
      write_text_atomic(log_path, "");
    }
  }

  FeatureCache cache;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const int stage = static_cast<int>(i) + 1;
    if (std::find(completed.begin(), completed.end(), stage) != completed.end()) {
      result.skipped_stages.push_back(stage);
      continue;
    }
    StageOptions stage_opts;
    stage_opts.stage = stage;
    stage_opts.cache = &cache;
    std::ofstream log;
    if (options.output_dir) {
      log.open(log_path, std::ios::app);
      stage_opts.on_epoch = [&log](const EpochRecord& r) { log << to_json(r).dump() << '\n' << std::flush; };
    }
    StageResult sr = train_branch(model, branches[i], data, cfg, stage_opts);
    if (options.output_dir) {
      log.close();
      save_checkpoint(model, *options.output_dir / stage_dir_name(stage, branches[i]));
      completed.push_back(stage);
      ordered_json st;
      st["completed_stages"] = completed;
      auto order = ordered_json::array();
      for (Attribute a : options.attribute_order) order.push_back(attribute_key(a));
      st["attribute_order"] = std::move(order);
      write_text_atomic(state_path, st.dump(2) + "\n");
    }
    result.stages.push_back(sr);
    if (options.on_stage_complete) options.on_stage_complete(result.stages.back());
  }
  if (options.output_dir) save_checkpoint(model, *options.output_dir / "final");
  return result;
}

}  // namespace artscore
