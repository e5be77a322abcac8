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

#ifndef NBHD_ANSWER_PARSER_H_
#define NBHD_ANSWER_PARSER_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nbhd/indicator.h"

namespace nbhd {

enum class ParseMode { kStrict, kLenient };

std::string_view ToString(ParseMode mode);
ParseMode ParseParseMode(std::string_view s);

// Additional lowercase answer words for lenient parsing (e.g. "sí").
// "yes" and "no" are always recognized.
struct AnswerTokens {
  std::vector<std::string> yes;
  std::vector<std::string> no;
};

// Six positional answers in MR, SR, SW, SL, PL, AP order.
//
// Strict: exactly six comma-separated tokens, each "Yes" or "No" (surrounding
// whitespace allowed). Lenient: every word bounded by non-letters that is a
// yes/no token counts, case-insensitively; prose around them is ignored but
// there must be exactly six.
//
// Throws EmptyResponse, CountMismatch or AmbiguousToken.
IndicatorVector ParseParallel(std::string_view raw, ParseMode mode,
                              const AnswerTokens& extra = {});

// One yes/no answer. Strict accepts exactly "Yes" or "No"; lenient accepts
// prose as long as only one polarity appears. Throws AmbiguousToken when both
// or neither appear.
bool ParseSingle(std::string_view raw, ParseMode mode,
                 const AnswerTokens& extra = {});

// Canonical "Yes, No, No, Yes, No, Yes" form in prompt order.
std::string FormatParallelAnswer(const IndicatorVector& v);

struct ParseOutcome {
  std::optional<IndicatorVector> vector;
  ParseMode mode = ParseMode::kLenient;
  // Tolerated deviations (lenient) or the failure reason.
  std::vector<std::string> defects;
};

ParseOutcome TryParseParallel(std::string_view raw, ParseMode mode,
                              const AnswerTokens& extra = {});

}  // namespace nbhd

#endif  // NBHD_ANSWER_PARSER_H_
