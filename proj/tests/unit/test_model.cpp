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

#include <doctest.h>

#include <fstream>

#include "artscore/model.hpp"
#include "support/fixtures.hpp"

using namespace artscore;
using artscore::testing::TempDir;

namespace {

ModelConfig small_config(std::uint64_t seed = 0) {
  ModelConfig c;
  c.hidden1 = 16;
  c.hidden2 = 8;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("forward emits exactly the applicable attributes") {
  const auto model = build_model(small_config());
  const auto img = artscore::testing::synthetic_painting(3, 40, 70);
  for (int cat : {1, 12, 20, 24}) {
    const auto s = model.forward(img, cat);
    CAPTURE(cat);
    CHECK(s.attributes.size() == applicable_attributes(cat).size());
    CHECK(validate_score_vector(cat, s, ScoreRange::normalized()).ok());
  }
  CHECK(model.forward(img, 12).attributes.size() == 5);
  CHECK(model.forward(img, 20).attributes.size() == 9);
  CHECK_THROWS_AS(model.forward(img, 0), DomainError);
}

TEST_CASE("feature contract and preprocess input") {
  const auto model = build_model(small_config());
  const auto f = model.features(artscore::testing::gray_image(30, 50, 128));
  CHECK(f.channels == 16);
  CHECK(f.height == 11);
  CHECK(f.width == 11);
  CHECK(f.all_finite());
}

TEST_CASE("seeded construction is deterministic") {
  const auto a = build_model(small_config(5));
  const auto b = build_model(small_config(5));
  const auto c = build_model(small_config(6));
  CHECK(a.parameter_snapshot() == b.parameter_snapshot());
  CHECK(a.parameter_snapshot() != c.parameter_snapshot());
}

TEST_CASE("checkpoint round trip is exact") {
  TempDir dir("ckpt");
  auto model = build_model(small_config(2));
  model.head(3).set_frozen(true);
  save_checkpoint(model, dir.path());
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "backbone.bin"));
  const auto back = load_checkpoint(dir.path());
  CHECK(back.parameter_snapshot() == model.parameter_snapshot());
  CHECK(back.head(3).frozen());
  const auto img = artscore::testing::synthetic_painting(4, 33, 21);
  CHECK(back.forward(img, 7) == model.forward(img, 7));

  // Saving again produces identical bytes.
  TempDir dir2("ckpt2");
  save_checkpoint(back, dir2.path());
  for (const auto& entry : std::filesystem::directory_iterator(dir.path())) {
    std::ifstream a(entry.path(), std::ios::binary), b(dir2 / entry.path().filename().string(), std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
  }
}

TEST_CASE("checkpoint errors") {
  TempDir dir("bad");
  CHECK_THROWS_AS(load_checkpoint(dir.path()), IoError);

  auto model = build_model(small_config());
  save_checkpoint(model, dir.path());
  std::filesystem::resize_file(dir / "head_total.bin", 12);
  CHECK_THROWS_AS(load_checkpoint(dir.path()), ValidationError);
}

TEST_CASE("pretrained load checks channels and reports missing heads") {
  TempDir dir("pre");
  auto source = build_model(small_config(9));
  save_checkpoint(source, dir.path());

  auto wide_cfg = small_config();
  wide_cfg.toy.channels = 24;
  auto wide = build_model(wide_cfg);
  const auto before = wide.parameter_snapshot();
  try {
    load_pretrained(wide, dir.path());
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    bool names_channels = false;
    for (const auto& v : e.violations()) names_channels |= v.find("channels") != std::string::npos;
    CHECK(names_channels);
  }
  CHECK(wide.parameter_snapshot() == before);

  auto target = build_model(small_config(1));
  const auto report = load_pretrained(target, dir.path());
  CHECK(target.backbone().parameters()[0]->values == source.backbone().parameters()[0]->values);
  CHECK(target.head(kTotalBranch).params() == source.head(kTotalBranch).params());
  CHECK_FALSE(target.head(1).params() == source.head(1).params());
  CHECK_FALSE(report.loaded.empty());

  std::filesystem::remove(dir / "head_mood.bin");
  std::ifstream in(dir / "manifest.json");
  auto m = nlohmann::json::parse(in);
  in.close();
  auto& heads = m["heads"];
  for (auto it = heads.begin(); it != heads.end(); ++it) {
    if ((*it)["branch"] == "mood") {
      heads.erase(it);
      break;
    }
  }
  std::ofstream(dir / "manifest.json") << m.dump();
  PretrainedLoadOptions lenient;
  lenient.strict = false;
  lenient.include_attribute_heads = true;
  auto t2 = build_model(small_config(1));
  const auto r2 = load_pretrained(t2, dir.path(), lenient);
  REQUIRE(r2.warnings.size() == 1);
  CHECK(r2.warnings[0].find("mood") != std::string::npos);
  PretrainedLoadOptions strict;
  strict.include_attribute_heads = true;
  CHECK_THROWS_AS(load_pretrained(t2, dir.path(), strict), ValidationError);
}
