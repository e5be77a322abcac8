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

#include "nbhd/answer_parser.h"

#include <random>

#include "doctest.h"
#include "nbhd/errors.h"

namespace nbhd {
namespace {

IndicatorVector Expected() {
  return IndicatorVector::FromPromptOrder({true, false, false, true, false, true});
}

TEST_CASE("format row parses in prompt order") {
  IndicatorVector v = ParseParallel("Yes, No, No, Yes, No, Yes", ParseMode::kStrict);
  CHECK(v[Indicator::kMultilaneRoad]);
  CHECK_FALSE(v[Indicator::kSingleLaneRoad]);
  CHECK_FALSE(v[Indicator::kSidewalk]);
  CHECK(v[Indicator::kStreetlight]);
  CHECK_FALSE(v[Indicator::kPowerline]);
  CHECK(v[Indicator::kApartment]);
  CHECK(ParseParallel("Yes,No,No,Yes,No,Yes", ParseMode::kStrict) == v);
  CHECK(ParseParallel("  Yes ,No,  No,Yes,No,Yes\n", ParseMode::kStrict) == v);
}

TEST_CASE("case and punctuation: lenient accepts, strict rejects") {
  CHECK(ParseParallel("yes,no,no,yes,no,yes.", ParseMode::kLenient) == Expected());
  CHECK_THROWS_AS(ParseParallel("yes,no,no,yes,no,yes.", ParseMode::kStrict),
                  AmbiguousToken);
  CHECK(ParseParallel("Answer: YES; no; No; yes. No! Yes", ParseMode::kLenient) ==
        Expected());
}

TEST_CASE("wrong slot counts") {
  try {
    ParseParallel("Yes, No, No", ParseMode::kStrict);
    FAIL("expected CountMismatch");
  } catch (const CountMismatch& e) {
    CHECK(e.found() == 3);
  }
  try {
    ParseParallel("Yes, No, No", ParseMode::kLenient);
    FAIL("expected CountMismatch");
  } catch (const CountMismatch& e) {
    CHECK(e.found() == 3);
  }
  CHECK_THROWS_AS(ParseParallel("Yes, No, No, Yes, No, Yes, No", ParseMode::kLenient),
                  CountMismatch);
  CHECK_THROWS_AS(ParseParallel("   ", ParseMode::kLenient), EmptyResponse);
  CHECK_THROWS_AS(ParseParallel("", ParseMode::kStrict), EmptyResponse);
}

TEST_CASE("strict rejects anything but the two words") {
  CHECK_THROWS_AS(ParseParallel("Yes, No, No, Yes, No, Maybe", ParseMode::kStrict),
                  AmbiguousToken);
  CHECK_THROWS_AS(ParseParallel("Yes, No, No, Yes, No, ", ParseMode::kStrict),
                  AmbiguousToken);
  // Words that merely contain yes/no are not answers.
  CHECK_THROWS_AS(ParseParallel("Yesterday, Nope, No, Yes, No, Yes",
                                ParseMode::kLenient),
                  CountMismatch);
}

TEST_CASE("single answers") {
  CHECK_FALSE(ParseSingle("No", ParseMode::kStrict));
  CHECK(ParseSingle("Yes", ParseMode::kStrict));
  CHECK(ParseSingle("Yes.", ParseMode::kLenient));
  CHECK_THROWS_AS(ParseSingle("Yes.", ParseMode::kStrict), AmbiguousToken);
  CHECK_THROWS_AS(ParseSingle("Yes and also no", ParseMode::kLenient),
                  AmbiguousToken);
  CHECK_THROWS_AS(ParseSingle("I cannot tell", ParseMode::kLenient),
                  AmbiguousToken);
  CHECK(ParseSingle("Yes, yes.", ParseMode::kLenient));
  CHECK_THROWS_AS(ParseSingle("", ParseMode::kLenient), EmptyResponse);
}

TEST_CASE("language-specific tokens") {
  AnswerTokens es{{"sí", "si"}, {}};
  CHECK(ParseParallel("Sí, no, no, sí, no, sí", ParseMode::kLenient, es) ==
        Expected());
  CHECK(ParseSingle("SÍ", ParseMode::kLenient, es) == true);
  CHECK_THROWS(ParseParallel("Sí, no, no, sí, no, sí", ParseMode::kLenient));
}

TEST_CASE("round trip over all 64 vectors") {
  for (unsigned bits = 0; bits < 64; ++bits) {
    IndicatorVector v = IndicatorVector::FromBits(bits);
    std::string text = FormatParallelAnswer(v);
    CHECK(ParseParallel(text, ParseMode::kStrict) == v);
    CHECK(ParseParallel(text, ParseMode::kLenient) == v);
  }
  CHECK(FormatParallelAnswer(Expected()) == "Yes, No, No, Yes, No, Yes");
}

TEST_CASE("strict acceptance implies the same lenient result") {
  // Sample the six-slot space with noisy separators and casing.
  const char* words[] = {"Yes", "No", "yes", "NO", "Yes.", "", "maybe"};
  const char* seps[] = {",", ", ", " , ", ";", ",\n"};
  std::mt19937_64 rng(5);
  int accepted = 0;
  for (int i = 0; i < 20000; ++i) {
    std::string s;
    for (int k = 0; k < 6; ++k) {
      if (k) s += seps[rng() % 5];
      s += words[rng() % 3 ? rng() % 2 : rng() % 7];
    }
    std::optional<IndicatorVector> strict;
    try {
      strict = ParseParallel(s, ParseMode::kStrict);
    } catch (const Error&) {
    }
    if (!strict) continue;
    ++accepted;
    CHECK(ParseParallel(s, ParseMode::kLenient) == *strict);
  }
  CHECK(accepted > 100);
}

TEST_CASE("64 KiB of random bytes never crashes") {
  std::mt19937_64 rng(64);
  std::string blob(64 * 1024, '\0');
  for (char& c : blob) c = char(rng() & 0xff);
  for (ParseMode m : {ParseMode::kStrict, ParseMode::kLenient}) {
    try {
      ParseParallel(blob, m);
    } catch (const Error&) {
    }
    try {
      ParseSingle(blob, m);
    } catch (const Error&) {
    }
  }
}

TEST_CASE("outcome wrapper records defects") {
  ParseOutcome ok = TryParseParallel("Yes, No, No, Yes, No, Yes", ParseMode::kLenient);
  REQUIRE(ok.vector);
  CHECK(ok.defects.empty());
  ParseOutcome loose = TryParseParallel("yes no no yes no yes", ParseMode::kLenient);
  REQUIRE(loose.vector);
  CHECK_FALSE(loose.defects.empty());
  ParseOutcome bad = TryParseParallel("Yes", ParseMode::kStrict);
  CHECK_FALSE(bad.vector);
  CHECK_FALSE(bad.defects.empty());
  CHECK(ParseParseMode("strict") == ParseMode::kStrict);
  CHECK_THROWS_AS(ParseParseMode("loose"), ConfigError);
}

}  // namespace
}  // namespace nbhd
