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

#include "artscore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "artscore/errors.hpp"

namespace artscore {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> target) {
  if (pred.empty()) throw DomainError("metric of an empty input");
  if (pred.size() != target.size()) throw DomainError("prediction/target length mismatch");
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred, target);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - target[i]) * (pred[i] - target[i]);
  return sum / static_cast<double>(pred.size());
}

double mae(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred, target);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - target[i]);
  return sum / static_cast<double>(pred.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && values[idx[j]] == values[idx[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean((i+1)..j)
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

double srocc(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred, target);
  if (pred.size() < 2) throw DomainError("undefined correlation (fewer than 2 samples)");
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(target);
  const double n = static_cast<double>(rp.size());
  // Mean of 1..n is (n+1)/2 regardless of ties.
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rp.size(); ++i) {
    const double dx = rp[i] - mean, dy = rt[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("undefined correlation (constant input)");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

MetricsReport evaluate_predictions(const std::map<std::string, ScoreVector>& predictions,
                                   const std::map<std::string, ScoreVector>& truth,
                                   const std::map<std::string, int>& categories) {
  std::array<std::vector<double>, kNumBranches> preds, targets;
  for (const auto& [id, t] : truth) {
    auto p = predictions.find(id);
    if (p == predictions.end()) throw DomainError("no prediction for " + id);
    const int cat = categories.at(id);
    preds[kTotalBranch].push_back(p->second.total);
    targets[kTotalBranch].push_back(t.total);
    for (Attribute a : applicable_attributes(cat).to_vector()) {
      preds[branch_of(a)].push_back(p->second.attributes.at(a));
      targets[branch_of(a)].push_back(t.attributes.at(a));
    }
  }

  MetricsReport report;
  for (std::size_t b = 0; b < kNumBranches; ++b) {
    MetricsRow& row = report.rows[b];
    row.branch = b;
    row.n_samples = preds[b].size();
    if (row.n_samples < 2) {
      row.status = RowStatus::kInsufficientData;
      continue;
    }
    row.mse = mse(preds[b], targets[b]);
    row.mae = mae(preds[b], targets[b]);
    try {
      row.srocc = srocc(preds[b], targets[b]);
    } catch (const DomainError&) {
      row.status = RowStatus::kUndefinedCorrelation;
    }
  }
  return report;
}

MetricsReport evaluate(const BranchedModel& model, const std::vector<Example>& examples,
                       const ImageProvider& images) {
  std::map<std::string, ScoreVector> preds, truth;
  std::map<std::string, int> cats;
  FeatureCache cache;
  for (const auto& e : examples) {
    const auto& g = cache.pooled(model, images, e.image_id);
    FeatureMap pooled_map(model.channels(), 1, 1);
    pooled_map.values = g;
    preds[e.image_id] = model.forward_features(pooled_map, e.category_index);
    truth[e.image_id] = e.target;
    cats[e.image_id] = e.category_index;
  }
  return evaluate_predictions(preds, truth, cats);
}

MetricsReport evaluate(const BranchedModel& model, const DatasetStore& store, const std::vector<std::string>& ids,
                       const ImageProvider& images, const AggregationOptions& aggregation) {
  std::vector<Example> examples;
  for (const auto& id : ids) {
    examples.push_back({id, store.image(id).category_index, aggregate(store, id, aggregation)});
  }
  return evaluate(model, examples, images);
}

namespace {

std::string status_text(RowStatus s) {
  switch (s) {
    case RowStatus::kOk: return "ok";
    case RowStatus::kInsufficientData: return "insufficient data";
    case RowStatus::kUndefinedCorrelation: return "undefined correlation";
  }
  return "?";
}

std::string fmt(const std::optional<double>& v, int precision = 4) {
  if (!v) return "";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << *v;
  return os.str();
}

std::string row_label(std::size_t branch) {
  if (branch == kTotalBranch) return "Total Aesthetic Score";
  return std::string(attribute_info(*branch_attribute(branch)).display_name);
}

}  // namespace

void write_report_csv(const MetricsReport& report, std::ostream& out) {
  out << "branch,mse,mae,srocc,n\n";
  for (const auto& row : report.rows) {
    out << branch_name(row.branch) << ',' << fmt(row.mse, 6) << ',' << fmt(row.mae, 6) << ',';
    if (row.srocc) {
      out << fmt(row.srocc, 6);
    } else if (row.status != RowStatus::kOk) {
      out << status_text(row.status);
    }
    out << ',' << row.n_samples << '\n';
  }
}

void write_report_table(const MetricsReport& report, std::ostream& out) {
  if (!report.model_id.empty()) out << "model: " << report.model_id << '\n';
  if (!report.dataset_id.empty()) out << "dataset: " << report.dataset_id << '\n';
  if (!report.split.empty()) out << "split: " << report.split << '\n';
  // The arrows are 3 bytes wide but one column; widen by 2 bytes to align.
  out << std::left << std::setw(26) << "Branch" << std::right << std::setw(12) << "MSE↓" << std::setw(12)
      << "MAE↓" << std::setw(12) << "SROCC↑" << std::setw(8) << "N" << '\n';
  for (const auto& row : report.rows) {
    out << std::left << std::setw(26) << row_label(row.branch) << std::right;
    if (row.status == RowStatus::kInsufficientData) {
      out << "  insufficient data" << std::setw(8) << row.n_samples << '\n';
      continue;
    }
    out << std::setw(10) << fmt(row.mse) << std::setw(10) << fmt(row.mae) << std::setw(10)
        << (row.srocc ? fmt(row.srocc) : std::string("undef")) << std::setw(8) << row.n_samples << '\n';
  }
}

}  // namespace artscore
