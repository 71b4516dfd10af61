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
#include <bitset>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace artscore {

// Ten aesthetic attributes in their canonical listing order. The numeric
// values are stable and double as indices into per-attribute arrays.
enum class Attribute : std::size_t {
  kThemeAndLogic = 0,
  kCreativity,
  kLayoutAndComposition,
  kSpaceAndPerspective,
  kSenseOfOrder,
  kLightAndShadow,
  kColor,
  kDetailsAndTexture,
  kOverall,
  kMood,
};

inline constexpr std::size_t kNumAttributes = 10;
inline constexpr std::size_t kNumCategories = 24;

extern const std::array<Attribute, kNumAttributes> kAllAttributes;

struct AttributeInfo {
  Attribute id;
  std::string_view key;           // stable identifier, e.g. "theme_and_logic"
  std::string_view display_name;  // e.g. "Theme and logic"
  std::string_view rubric;
};

const AttributeInfo& attribute_info(Attribute a);
std::string_view attribute_key(Attribute a);
std::optional<Attribute> parse_attribute(std::string_view key);
// Throws DomainError on unknown keys.
Attribute attribute_from_key(std::string_view key);

enum class PaintingType { kOil, kSketching, kChinese };
enum class Style { kSymbolism, kClassicism, kRomanticism, kMeticulous, kFreehand };
enum class Subject { kLandscape, kStillLife, kPortraiture, kMountainsAndWater, kFloralAndAvian };

std::string_view to_string(PaintingType t);
std::string_view to_string(Style s);
std::string_view to_string(Subject s);

struct ArtisticCategory {
  int index = 0;  // 1..24
  PaintingType painting_type{};
  Style style{};
  Subject subject{};
};

// A set of attributes, indexed by Attribute's underlying value.
class AttributeSet {
 public:
  AttributeSet() = default;
  AttributeSet(std::initializer_list<Attribute> attrs) {
    for (Attribute a : attrs) insert(a);
  }

  static AttributeSet all() { return AttributeSet(std::bitset<kNumAttributes>().set()); }

  void insert(Attribute a) { bits_.set(static_cast<std::size_t>(a)); }
  void erase(Attribute a) { bits_.reset(static_cast<std::size_t>(a)); }
  bool contains(Attribute a) const { return bits_.test(static_cast<std::size_t>(a)); }
  std::size_t size() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }

  AttributeSet complement() const { return AttributeSet(~bits_); }
  AttributeSet operator|(const AttributeSet& o) const { return AttributeSet(bits_ | o.bits_); }
  AttributeSet operator&(const AttributeSet& o) const { return AttributeSet(bits_ & o.bits_); }
  bool operator==(const AttributeSet& o) const = default;

  // Members in canonical order.
  std::vector<Attribute> to_vector() const;

 private:
  explicit AttributeSet(std::bitset<kNumAttributes> bits) : bits_(bits) {}
  std::bitset<kNumAttributes> bits_;
};

struct AttributeMask {
  int category_index = 0;
  AttributeSet applicable;
  AttributeSet ignored;
};

// Total score plus applicable attribute scores. The same type carries raw
// annotator scores (0..100) and normalized scores (0..1); which one is meant
// is a property of the context.
struct ScoreVector {
  double total = 0.0;
  std::map<Attribute, double> attributes;

  bool operator==(const ScoreVector&) const = default;
};

struct ScoreRange {
  double lo = 0.0;
  double hi = 100.0;

  static constexpr ScoreRange raw() { return {0.0, 100.0}; }
  static constexpr ScoreRange normalized() { return {0.0, 1.0}; }
};

inline constexpr double kRawScoreScale = 100.0;

struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// The 24 categories in index order; entry i has index i+1.
const std::array<ArtisticCategory, kNumCategories>& all_categories();

// Throws DomainError when index is outside 1..24.
const ArtisticCategory& category(int index);
bool is_valid_category(int index);

const std::vector<AttributeMask>& canonical_mask_table();
AttributeSet applicable_attributes(int category_index);
inline AttributeSet applicable_attributes(const ArtisticCategory& c) {
  return applicable_attributes(c.index);
}

ValidationResult validate_score_vector(int category_index, const ScoreVector& scores,
                                       ScoreRange range = ScoreRange::raw());

// Annotation count an attribute receives when every record for a category
// carries exactly the applicable attributes. Pass std::nullopt for the total
// score, which every record carries.
std::size_t expected_annotation_count(std::optional<Attribute> attribute,
                                      const std::map<int, std::size_t>& per_category_totals);

// Machine-readable mask table (taxonomy.json).
nlohmann::ordered_json taxonomy_json();

// Branches of the scoring model: index 0 is the total score, 1 + attribute
// index for the ten attribute branches.
inline constexpr std::size_t kNumBranches = 1 + kNumAttributes;
inline constexpr std::size_t kTotalBranch = 0;

inline constexpr std::size_t branch_of(Attribute a) { return 1 + static_cast<std::size_t>(a); }
std::optional<Attribute> branch_attribute(std::size_t branch);
std::string branch_name(std::size_t branch);
// Accepts "total" or an attribute key.
std::size_t parse_branch(std::string_view name);

}  // namespace artscore
