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

#include "artscore/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>

#include "artscore/errors.hpp"

namespace artscore {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

enum class ValueType { kInt, kUint, kDouble, kBool, kString, kOptionalInt, kAttributeList };

struct KeySpec {
  const char* name;
  ValueType type;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

int as_int(const json& v, std::string_view key) {
  if (!v.is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
  return v.get<int>();
}

double as_double(const json& v, std::string_view key) {
  if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
  return v.get<double>();
}

bool as_bool(const json& v, std::string_view key) {
  if (!v.is_boolean()) throw ConfigError(std::string(key) + " must be true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, std::string_view key) {
  if (!v.is_string()) throw ConfigError(std::string(key) + " must be a string");
  return v.get<std::string>();
}

#define INT_KEY(name, field) \
  KeySpec{name, ValueType::kInt, [](RunConfig& c, const json& v) { c.field = as_int(v, name); }, \
          [](const RunConfig& c) { return json(c.field); }}
#define DOUBLE_KEY(name, field) \
  KeySpec{name, ValueType::kDouble, [](RunConfig& c, const json& v) { c.field = as_double(v, name); }, \
          [](const RunConfig& c) { return json(c.field); }}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      INT_KEY("batch_size", train.batch_size),
      DOUBLE_KEY("learning_rate", train.learning_rate),
      DOUBLE_KEY("adam_beta1", train.adam_beta1),
      DOUBLE_KEY("adam_beta2", train.adam_beta2),
      DOUBLE_KEY("adam_epsilon", train.adam_epsilon),
      DOUBLE_KEY("weight_decay", train.weight_decay),
      INT_KEY("plateau_patience", train.plateau_patience),
      DOUBLE_KEY("lr_factor", train.lr_factor),
      DOUBLE_KEY("improvement_threshold", train.improvement_threshold),
      DOUBLE_KEY("min_lr", train.min_lr),
      INT_KEY("max_epochs", train.max_epochs),
      KeySpec{"seed", ValueType::kUint,
              [](RunConfig& c, const json& v) {
                if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
                  throw ConfigError("seed must be a non-negative integer");
                }
                c.train.seed = v.get<std::uint64_t>();
                c.model.seed = c.train.seed;
              },
              [](const RunConfig& c) { return json(c.train.seed); }},
      KeySpec{"train_backbone", ValueType::kBool,
              [](RunConfig& c, const json& v) { c.train.train_backbone = as_bool(v, "train_backbone"); },
              [](const RunConfig& c) { return json(c.train.train_backbone); }},
      KeySpec{"backbone", ValueType::kString,
              [](RunConfig& c, const json& v) { c.model.backbone = as_string(v, "backbone"); },
              [](const RunConfig& c) { return json(c.model.backbone); }},
      INT_KEY("toy_channels", model.toy.channels),
      INT_KEY("toy_hidden", model.toy.hidden),
      INT_KEY("toy_input_pool", model.toy.input_pool),
      INT_KEY("head_hidden1", model.hidden1),
      INT_KEY("head_hidden2", model.hidden2),
      INT_KEY("eca_gamma", model.eca.gamma),
      INT_KEY("eca_b", model.eca.b),
      KeySpec{"eca_rounding", ValueType::kString,
              [](RunConfig& c, const json& v) {
                const auto s = as_string(v, "eca_rounding");
                if (s == "ceil_odd") {
                  c.model.eca.rounding = OddRounding::kCeilOdd;
                } else if (s == "nearest_odd") {
                  c.model.eca.rounding = OddRounding::kNearestOdd;
                } else {
                  throw ConfigError("eca_rounding must be ceil_odd or nearest_odd, got '" + s + "'");
                }
              },
              [](const RunConfig& c) {
                return json(c.model.eca.rounding == OddRounding::kCeilOdd ? "ceil_odd" : "nearest_odd");
              }},
      KeySpec{"eca_kernel_override", ValueType::kOptionalInt,
              [](RunConfig& c, const json& v) {
                if (v.is_null()) {
                  c.model.eca.kernel_override.reset();
                } else {
                  c.model.eca.kernel_override = as_int(v, "eca_kernel_override");
                }
              },
              [](const RunConfig& c) {
                return c.model.eca.kernel_override ? json(*c.model.eca.kernel_override) : json(nullptr);
              }},
      KeySpec{"channel_policy", ValueType::kString,
              [](RunConfig& c, const json& v) {
                const auto s = as_string(v, "channel_policy");
                if (s == "convert") {
                  c.model.preprocess.channel_policy = ChannelPolicy::kConvert;
                } else if (s == "reject") {
                  c.model.preprocess.channel_policy = ChannelPolicy::kReject;
                } else {
                  throw ConfigError("channel_policy must be convert or reject, got '" + s + "'");
                }
              },
              [](const RunConfig& c) {
                return json(c.model.preprocess.channel_policy == ChannelPolicy::kConvert ? "convert" : "reject");
              }},
      DOUBLE_KEY("split_ratio", split_ratio),
      KeySpec{"min_annotators", ValueType::kUint,
              [](RunConfig& c, const json& v) {
                const int n = as_int(v, "min_annotators");
                if (n < 1) throw ConfigError("min_annotators must be >= 1");
                c.aggregation.min_annotators = static_cast<std::size_t>(n);
              },
              [](const RunConfig& c) { return json(c.aggregation.min_annotators); }},
      DOUBLE_KEY("trim_fraction", aggregation.trim_fraction),
      DOUBLE_KEY("histogram_bin_width", histogram_bin_width),
      INT_KEY("threads", threads),
      KeySpec{"attribute_order", ValueType::kAttributeList,
              [](RunConfig& c, const json& v) {
                std::vector<Attribute> order;
                if (v.is_string()) {
                  // comma-separated form used by --set
                  std::string s = v.get<std::string>();
                  std::size_t pos = 0;
                  while (pos <= s.size()) {
                    const auto comma = s.find(',', pos);
                    const auto item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
                    if (!item.empty()) order.push_back(attribute_from_key(item));
                    if (comma == std::string::npos) break;
                    pos = comma + 1;
                  }
                } else if (v.is_array()) {
                  for (const auto& item : v) order.push_back(attribute_from_key(as_string(item, "attribute_order")));
                } else {
                  throw ConfigError("attribute_order must be a list of attribute keys");
                }
                std::vector<Attribute> sorted = order;
                std::sort(sorted.begin(), sorted.end());
                if (sorted != std::vector<Attribute>(kAllAttributes.begin(), kAllAttributes.end())) {
                  throw ConfigError("attribute_order must list each of the 10 attributes exactly once");
                }
                c.attribute_order = std::move(order);
              },
              [](const RunConfig& c) {
                json arr = json::array();
                for (Attribute a : c.attribute_order) arr.push_back(attribute_key(a));
                return arr;
              }},
      KeySpec{"image_root", ValueType::kString,
              [](RunConfig& c, const json& v) { c.image_root = as_string(v, "image_root"); },
              [](const RunConfig& c) { return json(c.image_root); }},
  };
  return table;
}

#undef INT_KEY
#undef DOUBLE_KEY

const KeySpec& lookup(std::string_view key) {
  for (const auto& spec : key_table())
    if (spec.name == key) return spec;
  std::string msg = "unknown config key '" + std::string(key) + "'";
  const auto hint = suggest(key, RunConfig::keys());
  if (!hint.empty()) msg += " (did you mean '" + hint + "'?)";
  throw ConfigError(msg);
}

}  // namespace

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& spec : key_table()) out.emplace_back(spec.name);
  return out;
}

void RunConfig::set(std::string_view key, const json& value) {
  try {
    lookup(key).set(*this, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

void RunConfig::set_from_string(std::string_view key, std::string_view value) {
  const KeySpec& spec = lookup(key);
  const std::string text(value);
  json v;
  switch (spec.type) {
    case ValueType::kString:
    case ValueType::kAttributeList:
      v = text;
      break;
    case ValueType::kBool:
      if (text == "true" || text == "1") {
        v = true;
      } else if (text == "false" || text == "0") {
        v = false;
      } else {
        throw ConfigError(std::string(key) + " must be true or false, got '" + text + "'");
      }
      break;
    case ValueType::kOptionalInt:
      if (text.empty() || text == "null" || text == "none") {
        v = nullptr;
        break;
      }
      [[fallthrough]];
    case ValueType::kInt:
    case ValueType::kUint:
    case ValueType::kDouble:
      try {
        v = json::parse(text);
      } catch (const json::exception&) {
        throw ConfigError(std::string(key) + ": cannot parse '" + text + "' as a number");
      }
      if (!v.is_number()) throw ConfigError(std::string(key) + ": cannot parse '" + text + "' as a number");
      break;
  }
  set(key, v);
}

void RunConfig::merge(const json& object) {
  if (!object.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : object.items()) set(key, value);
}

void RunConfig::validate() const {
  train.validate();
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must be in (0, 1)");
  if (!(aggregation.trim_fraction >= 0.0 && aggregation.trim_fraction < 0.5)) {
    throw ConfigError("trim_fraction must be in [0, 0.5)");
  }
  if (!(histogram_bin_width > 0.0)) throw ConfigError("histogram_bin_width must be positive");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (model.hidden1 < 1 || model.hidden2 < 1) throw ConfigError("head widths must be positive");
  if (model.toy.channels < 1 || model.toy.hidden < 1 || model.toy.input_pool < 11) {
    throw ConfigError("toy backbone sizes out of range");
  }
  if (model.eca.gamma < 1) throw ConfigError("eca_gamma must be >= 1");
  if (model.eca.kernel_override && (*model.eca.kernel_override < 1 || *model.eca.kernel_override % 2 == 0)) {
    throw ConfigError("eca_kernel_override must be a positive odd integer");
  }
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  for (const auto& spec : key_table()) j[spec.name] = spec.get(*this);
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig cfg;
  cfg.merge(j);
  return cfg;
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key=value, got '" + std::string(assignment) + "'");
  }
  cfg.set_from_string(assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string suggest(std::string_view key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::max<std::size_t>(3, key.size() / 3) + 1;
  for (const auto& c : candidates) {
    const auto d = edit_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace artscore
