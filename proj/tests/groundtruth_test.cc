// Copyright 2026 The nbhd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nbhd/groundtruth.h"

#include "doctest.h"
#include "nbhd/errors.h"
#include "nbhd/util.h"
#include "test_support.h"

namespace nbhd {
namespace {

using testing::TempDir;

std::string Shape(const std::string& label, const std::string& points,
                  const std::string& type = "polygon") {
  return R"({"label":")" + label + R"(","points":)" + points +
         R"(,"shape_type":")" + type + R"("})";
}

std::string Doc(const std::vector<std::string>& shapes,
                const std::string& image = "img_1.png") {
  std::string s = R"({"imagePath":")" + image +
                  R"(","imageWidth":100,"imageHeight":80,"shapes":[)";
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (i) s += ",";
    s += shapes[i];
  }
  return s + "]}";
}

const LabelAliases kAliases = LabelAliases::Defaults();

TEST_CASE("square sidewalk polygon becomes one box") {
  LabelmeFile f = ParseLabelme(
      Doc({Shape("sidewalk", "[[10,20],[30,20],[30,40],[10,40]]")}), kAliases);
  CHECK(f.image_id == "img_1");
  CHECK(f.image_width == 100);
  REQUIRE(f.annotations.size() == 1);
  CHECK(f.annotations[0].indicator == Indicator::kSidewalk);
  CHECK(f.annotations[0].bbox == BBox{10, 20, 30, 40});
  CHECK(f.rejects.empty());
}

TEST_CASE("unknown label is rejected, not fatal") {
  LabelmeFile f = ParseLabelme(
      Doc({Shape("tree", "[[0,0],[5,0],[5,5]]")}), kAliases);
  CHECK(f.annotations.empty());
  REQUIRE(f.rejects.size() == 1);
  CHECK(f.rejects[0] == "tree");
}

TEST_CASE("aliases resolve case-insensitively") {
  CHECK(kAliases.Resolve("Street Light") == Indicator::kStreetlight);
  CHECK(kAliases.Resolve("MULTILANE ROAD") == Indicator::kMultilaneRoad);
  CHECK(kAliases.Resolve("PL") == Indicator::kPowerline);
  CHECK(!kAliases.Resolve("tree"));
  LabelAliases custom = LabelAliases::FromJson(R"({"lamp post":"SL"})");
  CHECK(custom.Resolve("Lamp Post") == Indicator::kStreetlight);
  CHECK(custom.Resolve("sidewalk") == Indicator::kSidewalk);
  CHECK_THROWS_AS(LabelAliases::FromJson(R"({"x":"ZZ"})"), ParseError);
}

TEST_CASE("rectangles, degenerate shapes and malformed input") {
  LabelmeFile f = ParseLabelme(
      Doc({Shape("apartment", "[[50,10],[20,60]]", "rectangle")}), kAliases);
  REQUIRE(f.annotations.size() == 1);
  CHECK(f.annotations[0].polygon.size() == 4);
  CHECK(f.annotations[0].bbox == BBox{20, 10, 50, 60});

  CHECK_THROWS_AS(ParseLabelme(Doc({Shape("SL", "[[1,1],[2,2]]")}), kAliases),
                  EmptyPolygon);
  CHECK_THROWS_AS(
      ParseLabelme(Doc({Shape("SL", "[[1,1],[2,2],[3,3]]")}), kAliases),
      EmptyPolygon);
  CHECK_THROWS_AS(ParseLabelme("{not json", kAliases), ParseError);
  CHECK_THROWS_AS(ParseLabelme(R"({"imagePath":"x.png"})", kAliases),
                  ParseError);
}

TEST_CASE("envelope clamps to the image") {
  std::vector<Point2> poly{{-5, 10}, {120, 10}, {50, 90}};
  CHECK(Envelope(poly, 100, 80) == BBox{0, 10, 100, 80});
  CHECK(Envelope(poly) == BBox{-5, 10, 120, 90});
}

TEST_CASE("presence vectors") {
  LabelmeFile f = ParseLabelme(
      Doc({Shape("SW", "[[0,0],[5,0],[5,5]]"), Shape("SL", "[[0,0],[5,0],[5,5]]"),
           Shape("power line", "[[0,0],[9,0],[9,1]]"),
           Shape("power line", "[[0,2],[9,2],[9,3]]")}),
      kAliases);
  PresenceMap p = ToPresence(f.annotations, {"img_1", "img_2"});
  REQUIRE(p.size() == 2);
  const IndicatorVector& v = p["img_1"];
  CHECK(v[Indicator::kSidewalk]);
  CHECK(v[Indicator::kStreetlight]);
  CHECK(v[Indicator::kPowerline]);  // two boxes, still one presence bit
  CHECK_FALSE(v[Indicator::kApartment]);
  CHECK_FALSE(v[Indicator::kSingleLaneRoad]);
  CHECK_FALSE(v[Indicator::kMultilaneRoad]);
  CHECK(p["img_2"] == IndicatorVector{});

  PresenceMap only2 = ToPresence(f.annotations, {"img_2"});
  CHECK(only2.size() == 1);
  CHECK(only2["img_2"] == IndicatorVector{});
}

TEST_CASE("serialize and reparse") {
  LabelmeFile f = ParseLabelme(
      Doc({Shape("MR", "[[1,2],[30,2],[30,20],[1,20]]"),
           Shape("AP", "[[40,40],[60,40],[50,70]]")}),
      kAliases);
  LabelmeFile back = ParseLabelme(SerializeLabelme(f), kAliases);
  CHECK(back.image_id == f.image_id);
  CHECK(back.annotations == f.annotations);
}

TEST_CASE("fixture corpus totals and CSV round trips") {
  GroundTruthCorpus corpus =
      IngestDirectory(testing::FixtureDir() / "e2e" / "labelme", kAliases);
  REQUIRE(corpus.files.size() == 20);
  CHECK(corpus.files[0].image_id == "scene_00");
  CHECK(corpus.reject_count == 0);
  auto annotations = AllAnnotations(corpus);
  int sum = 0;
  for (int t : corpus.annotation_totals) sum += t;
  CHECK(sum == int(annotations.size()));

  std::set<std::string> manifest = ParseManifest(
      ReadFile(testing::FixtureDir() / "e2e" / "manifest.txt"));
  PresenceMap presence = ToPresence(annotations, manifest);
  CHECK(PresenceToCsv(presence) ==
        ReadFile(testing::FixtureDir() / "e2e" / "ground_truth.csv"));
  CHECK(PresenceFromCsv(PresenceToCsv(presence)) == presence);
  for (Indicator i : kCanonicalOrder) {
    int positives = 0;
    for (const auto& [id, v] : presence) positives += v[i];
    CHECK(positives == corpus.annotation_totals[Index(i)]);
  }
  CHECK(BoxesFromCsv(BoxesToCsv(annotations)).size() == annotations.size());
}

TEST_CASE("manifest and CSV errors") {
  CHECK(ParseManifest("a\n\n b \r\n# comment\n") == std::set<std::string>{"a", "b"});
  CHECK_THROWS_AS(PresenceFromCsv("image_id,SL\nx,1\n"), ParseError);
  CHECK_THROWS_AS(PresenceFromCsv("image_id,SL,SW,SR,MR,PL,AP\nx,1,0,0,0,0,2\n"),
                  ParseError);
  TempDir dir;
  CHECK_THROWS_AS(IngestDirectory(dir / "nope", kAliases), IoError);
  CHECK(IngestDirectory(dir.path(), kAliases).files.empty());
}

}  // namespace
}  // namespace nbhd
