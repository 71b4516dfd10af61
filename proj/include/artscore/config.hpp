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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "artscore/dataset.hpp"
#include "artscore/model.hpp"
#include "artscore/training.hpp"

namespace artscore {

// Every tunable of a run. Built from defaults, then a JSON config file, then
// key=value overrides, then explicit command-line flags; the effective result
// is echoed into logs and saved next to outputs.
struct RunConfig {
  TrainConfig train;
  ModelConfig model;
  double split_ratio = 0.9;
  AggregationOptions aggregation;
  double histogram_bin_width = 10.0;
  int threads = 0;  // 0 keeps the OpenMP default
  std::vector<Attribute> attribute_order{kAllAttributes.begin(), kAllAttributes.end()};
  std::string image_root;  // relative file_path values resolve against this

  // Throws ConfigError for unknown keys (with a closest-key suggestion) and
  // for values of the wrong type.
  void set(std::string_view key, const nlohmann::json& value);
  // Parses `value` according to the key's type.
  void set_from_string(std::string_view key, std::string_view value);
  // Applies every member of a JSON object.
  void merge(const nlohmann::json& object);
  void validate() const;

  nlohmann::ordered_json to_json() const;
  static std::vector<std::string> keys();
};

RunConfig load_run_config(const std::filesystem::path& path);
// "key=value" -> applied to cfg.
void apply_override(RunConfig& cfg, std::string_view assignment);

std::size_t edit_distance(std::string_view a, std::string_view b);
// Closest candidate within a small edit distance, or empty.
std::string suggest(std::string_view key, const std::vector<std::string>& candidates);

}  // namespace artscore
