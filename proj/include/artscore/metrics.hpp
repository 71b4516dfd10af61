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
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "artscore/dataset.hpp"
#include "artscore/model.hpp"
#include "artscore/training.hpp"

namespace artscore {

double mse(std::span<const double> pred, std::span<const double> target);
double mae(std::span<const double> pred, std::span<const double> target);

// Fractional ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks. Throws DomainError "undefined
// correlation" when either input is constant, and for fewer than 2 values.
double srocc(std::span<const double> pred, std::span<const double> target);

enum class RowStatus { kOk, kInsufficientData, kUndefinedCorrelation };

struct MetricsRow {
  std::size_t branch = 0;
  RowStatus status = RowStatus::kOk;
  std::optional<double> mse, mae, srocc;
  std::size_t n_samples = 0;
};

struct MetricsReport {
  std::array<MetricsRow, kNumBranches> rows{};
  std::string model_id;
  std::string dataset_id;
  std::string split;
};

// Ground truth and predictions keyed by image id. Attribute rows only use
// images whose category includes the attribute.
MetricsReport evaluate_predictions(const std::map<std::string, ScoreVector>& predictions,
                                   const std::map<std::string, ScoreVector>& truth,
                                   const std::map<std::string, int>& categories);

MetricsReport evaluate(const BranchedModel& model, const std::vector<Example>& examples, const ImageProvider& images);

// Ground truth comes from aggregating the store; ids select the split.
MetricsReport evaluate(const BranchedModel& model, const DatasetStore& store, const std::vector<std::string>& ids,
                       const ImageProvider& images, const AggregationOptions& aggregation = {});

void write_report_csv(const MetricsReport& report, std::ostream& out);
void write_report_table(const MetricsReport& report, std::ostream& out);

}  // namespace artscore
