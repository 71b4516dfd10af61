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

#include "artscore/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "artscore/errors.hpp"

namespace artscore {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::array<BranchHead<float>, kNumBranches> make_heads(int channels, int hidden1, int hidden2, const EcaConfig& eca,
                                                       std::uint64_t seed) {
  const HeadShape shape{channels, hidden1, hidden2, eca_kernel_size(channels, eca)};
  std::array<BranchHead<float>, kNumBranches> heads;
  for (std::size_t b = 0; b < kNumBranches; ++b) {
    heads[b] = BranchHead<float>(branch_name(b), shape);
    std::mt19937_64 rng(seed * 1000003ULL + 17ULL * (b + 1));
    heads[b].initialize(rng);
  }
  return heads;
}

}  // namespace

BranchedModel::BranchedModel(std::unique_ptr<Backbone> backbone, int hidden1, int hidden2, const EcaConfig& eca,
                             std::uint64_t seed)
    : backbone_(std::move(backbone)) {
  if (!backbone_) throw ConfigError("model requires a backbone");
  heads_ = make_heads(backbone_->out_channels(), hidden1, hidden2, eca, seed);
  check_contract();
}

BranchedModel::BranchedModel(const BranchedModel& other)
    : backbone_(other.backbone_->clone()), heads_(other.heads_), preprocess_(other.preprocess_) {}

BranchedModel& BranchedModel::operator=(const BranchedModel& other) {
  if (this != &other) {
    backbone_ = other.backbone_->clone();
    heads_ = other.heads_;
    preprocess_ = other.preprocess_;
  }
  return *this;
}

void BranchedModel::check_contract() const {
  for (const auto& h : heads_) {
    if (h.shape().channels != backbone_->out_channels()) {
      throw ConfigError("head " + h.branch() + " expects " + std::to_string(h.shape().channels) +
                        " channels but backbone emits " + std::to_string(backbone_->out_channels()));
    }
  }
}

FeatureMap BranchedModel::features(const RasterImage& image) const {
  FeatureMap f = backbone_->forward(preprocess(image, preprocess_));
  if (f.channels != channels() || f.height != kFeatureGrid || f.width != kFeatureGrid) {
    throw ConfigError("backbone '" + backbone_->id() + "' violated the C x 11 x 11 output contract");
  }
  return f;
}

ScoreVector BranchedModel::forward_features(const FeatureMap& f, int category_index) const {
  const AttributeSet applicable = applicable_attributes(category_index);
  const auto pooled = global_average_pool(f);
  auto run = [&](std::size_t branch) {
    return static_cast<double>(heads_[branch].forward_pooled(pooled, 1).score[0]);
  };
  ScoreVector out;
  out.total = run(kTotalBranch);
  for (Attribute a : applicable.to_vector()) out.attributes[a] = run(branch_of(a));
  return out;
}

ScoreVector BranchedModel::forward(const RasterImage& image, int category_index) const {
  applicable_attributes(category_index);  // validates before the expensive part
  return forward_features(features(image), category_index);
}

std::vector<std::vector<float>> BranchedModel::parameter_snapshot() const {
  std::vector<std::vector<float>> out;
  for (const ParamTensor* p : backbone_->parameters()) out.push_back(p->values);
  for (const auto& h : heads_)
    for (const auto* t : h.params().tensors()) out.push_back(*t);
  return out;
}

BranchedModel build_model(const ModelConfig& config) {
  json bb_config = json::object();
  if (config.backbone == "toy") {
    bb_config = {{"channels", config.toy.channels}, {"hidden", config.toy.hidden},
                 {"input_pool", config.toy.input_pool}};
  }
  BranchedModel model(make_backbone(config.backbone, bb_config, config.seed), config.hidden1, config.hidden2,
                      config.eca, config.seed);
  model.preprocess_config() = config.preprocess;
  return model;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

struct TensorRef {
  std::string name;
  std::vector<int> shape;
  std::size_t count() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
};

std::vector<std::vector<int>> head_shapes(const HeadShape& s) {
  return {{s.kernel}, {s.hidden1, s.channels}, {s.hidden1}, {s.hidden2, s.hidden1}, {s.hidden2}, {1, s.hidden2}, {1}};
}

ordered_json tensor_list(const std::vector<TensorRef>& refs) {
  auto arr = ordered_json::array();
  for (const auto& r : refs) arr.push_back({{"name", r.name}, {"shape", r.shape}});
  return arr;
}

void write_blob(const std::filesystem::path& path, const std::vector<std::span<const float>>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  std::vector<char> buf;
  for (const auto& t : tensors) {
    buf.resize(t.size() * 4);
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto bits = std::bit_cast<std::uint32_t>(t[i]);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      std::memcpy(buf.data() + 4 * i, &bits, 4);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<float> read_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) throw ValidationError("corrupt blob " + path.string(), {"size not a multiple of 4"});
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

std::vector<TensorRef> parse_tensor_list(const json& arr) {
  std::vector<TensorRef> out;
  for (const auto& t : arr) out.push_back({t.at("name").get<std::string>(), t.at("shape").get<std::vector<int>>()});
  return out;
}

// Tensor name -> values, checked against the blob size.
std::map<std::string, std::pair<std::vector<int>, std::vector<float>>> read_component(
    const std::filesystem::path& dir, const json& component) {
  const auto refs = parse_tensor_list(component.at("tensors"));
  const auto blob = read_blob(dir / component.at("blob").get<std::string>());
  std::size_t expected = 0;
  for (const auto& r : refs) expected += r.count();
  if (expected != blob.size()) {
    throw ValidationError("blob " + component.at("blob").get<std::string>() + " has " + std::to_string(blob.size()) +
                              " floats, manifest lists " + std::to_string(expected),
                          {"size mismatch"});
  }
  std::map<std::string, std::pair<std::vector<int>, std::vector<float>>> out;
  std::size_t off = 0;
  for (const auto& r : refs) {
    out[r.name] = {r.shape, std::vector<float>(blob.begin() + static_cast<std::ptrdiff_t>(off),
                                               blob.begin() + static_cast<std::ptrdiff_t>(off + r.count()))};
    off += r.count();
  }
  return out;
}

json read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("no manifest.json in " + dir.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed manifest in " + dir.string() + ": " + e.what());
  }
  if (m.value("format", "") != "artscore-checkpoint") throw IoError("not a checkpoint: " + dir.string());
  return m;
}

std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace

void save_checkpoint(const BranchedModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Backbone& bb = model.backbone();

  ordered_json manifest;
  manifest["format"] = "artscore-checkpoint";
  manifest["version"] = 1;

  std::vector<TensorRef> bb_refs;
  std::vector<std::span<const float>> bb_data;
  for (const ParamTensor* p : bb.parameters()) {
    bb_refs.push_back({p->name, p->shape});
    bb_data.push_back(p->span());
  }
  ordered_json bbj;
  bbj["id"] = bb.id();
  bbj["channels"] = bb.out_channels();
  bbj["config"] = bb.config_json();
  bbj["frozen"] = bb.frozen();
  bbj["blob"] = "backbone.bin";
  bbj["tensors"] = tensor_list(bb_refs);
  manifest["backbone"] = std::move(bbj);
  manifest["normalization"] = {{"mean", bb.normalization().mean}, {"std", bb.normalization().stddev}};
  manifest["preprocess"] = {{"target_size", model.preprocess_config().target_size}};
  write_blob(dir / "backbone.bin", bb_data);

  auto heads = ordered_json::array();
  const auto names = HeadParams<float>::tensor_names();
  for (std::size_t b = 0; b < kNumBranches; ++b) {
    const auto& h = model.head(b);
    const auto shapes = head_shapes(h.shape());
    std::vector<TensorRef> refs;
    std::vector<std::span<const float>> data;
    const auto tensors = h.params().tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      refs.push_back({names[i], shapes[i]});
      data.emplace_back(*tensors[i]);
    }
    const std::string blob = "head_" + branch_name(b) + ".bin";
    ordered_json hj;
    hj["branch"] = branch_name(b);
    hj["channels"] = h.shape().channels;
    hj["hidden"] = {h.shape().hidden1, h.shape().hidden2};
    hj["kernel_size"] = h.shape().kernel;
    hj["frozen"] = h.frozen();
    hj["blob"] = blob;
    hj["tensors"] = tensor_list(refs);
    heads.push_back(std::move(hj));
    write_blob(dir / blob, data);
  }
  manifest["heads"] = std::move(heads);

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

namespace {

void assign_tensor(ParamTensor& dst, const std::pair<std::vector<int>, std::vector<float>>& src,
                   std::vector<std::string>& errors, const std::string& where) {
  if (src.first != dst.shape) {
    errors.push_back(where + dst.name + ": expected shape " + shape_str(dst.shape) + ", checkpoint has " +
                     shape_str(src.first));
    return;
  }
  dst.values = src.second;
}

void load_head(BranchHead<float>& head, const std::map<std::string, std::pair<std::vector<int>, std::vector<float>>>& tensors,
               bool strict, LoadReport& report, std::vector<std::string>& errors) {
  const auto names = HeadParams<float>::tensor_names();
  const auto shapes = head_shapes(head.shape());
  auto dst = head.params().tensors();
  const std::string where = "head_" + head.branch() + ".";
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto it = tensors.find(names[i]);
    if (it == tensors.end()) {
      (strict ? errors : report.warnings).push_back(where + names[i] + " missing from checkpoint");
      continue;
    }
    if (it->second.first != shapes[i]) {
      errors.push_back(where + names[i] + ": expected shape " + shape_str(shapes[i]) + ", checkpoint has " +
                       shape_str(it->second.first));
      continue;
    }
    *dst[i] = it->second.second;
    report.loaded.push_back(where + names[i]);
  }
}

}  // namespace

BranchedModel load_checkpoint(const std::filesystem::path& dir) {
  const json m = read_manifest(dir);
  const json& bbj = m.at("backbone");
  auto backbone = make_backbone(bbj.at("id").get<std::string>(), bbj.value("config", json::object()));
  backbone->set_frozen(bbj.value("frozen", true));

  const json& heads = m.at("heads");
  if (!heads.is_array() || heads.size() != kNumBranches) {
    throw ValidationError("checkpoint must list exactly 11 heads", {"head count"});
  }
  const auto& h0 = heads.at(0);
  EcaConfig eca;
  eca.kernel_override = h0.at("kernel_size").get<int>();
  BranchedModel model(std::move(backbone), h0.at("hidden").at(0).get<int>(), h0.at("hidden").at(1).get<int>(), eca);
  if (m.contains("preprocess")) model.preprocess_config().target_size = m["preprocess"].value("target_size", 800);

  std::vector<std::string> errors;
  const auto bb_tensors = read_component(dir, bbj);
  for (ParamTensor* p : model.backbone().parameters()) {
    auto it = bb_tensors.find(p->name);
    if (it == bb_tensors.end()) {
      errors.push_back("backbone." + p->name + " missing from checkpoint");
    } else {
      assign_tensor(*p, it->second, errors, "backbone.");
    }
  }
  LoadReport report;
  for (const auto& hj : heads) {
    const std::size_t b = parse_branch(hj.at("branch").get<std::string>());
    auto& head = model.head(b);
    const HeadShape shape{hj.at("channels").get<int>(), hj.at("hidden").at(0).get<int>(),
                          hj.at("hidden").at(1).get<int>(), hj.at("kernel_size").get<int>()};
    if (!(shape == head.shape())) head = BranchHead<float>(branch_name(b), shape);
    load_head(head, read_component(dir, hj), true, report, errors);
    head.set_frozen(hj.value("frozen", false));
  }
  if (!errors.empty()) throw ValidationError("checkpoint " + dir.string() + " is inconsistent", std::move(errors));
  return model;
}

LoadReport load_pretrained(BranchedModel& model, const std::filesystem::path& dir,
                           const PretrainedLoadOptions& options) {
  const json m = read_manifest(dir);
  const json& bbj = m.at("backbone");
  std::vector<std::string> errors;
  LoadReport report;

  const auto id = bbj.at("id").get<std::string>();
  const int channels = bbj.at("channels").get<int>();
  if (id != model.backbone().id()) {
    errors.push_back("backbone id: model has '" + model.backbone().id() + "', checkpoint has '" + id + "'");
  }
  if (channels != model.channels()) {
    errors.push_back("backbone channels: model has " + std::to_string(model.channels()) + ", checkpoint has " +
                     std::to_string(channels));
  }

  // Stage into a copy so a failed load leaves the model untouched.
  BranchedModel staged = model;
  const auto bb_tensors = read_component(dir, bbj);
  for (ParamTensor* p : staged.backbone().parameters()) {
    auto it = bb_tensors.find(p->name);
    if (it == bb_tensors.end()) {
      (options.strict ? errors : report.warnings).push_back("backbone." + p->name + " missing from checkpoint");
      continue;
    }
    const std::size_t before = errors.size();
    assign_tensor(*p, it->second, errors, "backbone.");
    if (errors.size() == before) report.loaded.push_back("backbone." + p->name);
  }

  const json heads = m.value("heads", json::array());
  std::map<std::string, const json*> heads_by_branch;
  for (const auto& hj : heads) heads_by_branch[hj.at("branch").get<std::string>()] = &hj;
  for (std::size_t b = 0; b < kNumBranches; ++b) {
    const bool wanted = b == kTotalBranch ? options.include_total_head : options.include_attribute_heads;
    if (!wanted) continue;
    auto it = heads_by_branch.find(branch_name(b));
    if (it == heads_by_branch.end()) {
      (options.strict ? errors : report.warnings).push_back("head_" + branch_name(b) + " missing from checkpoint");
      continue;
    }
    load_head(staged.head(b), read_component(dir, *it->second), options.strict, report, errors);
  }

  if (!errors.empty()) throw ValidationError("incompatible checkpoint " + dir.string(), std::move(errors));
  model = std::move(staged);
  return report;
}

}  // namespace artscore
