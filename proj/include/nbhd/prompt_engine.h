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

#ifndef NBHD_PROMPT_ENGINE_H_
#define NBHD_PROMPT_ENGINE_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nbhd/indicator.h"

namespace nbhd {

// Question texts and glue for one prompt language. Serialized as
// {language, conjunction, preamble, questions: {MR, SR, SW, SL, PL, AP},
//  yes_tokens?, no_tokens?}.
struct LanguagePack {
  std::string language;
  std::string conjunction;  // placed before every question but the first
  std::string preamble;     // answer-format line, parallel mode only
  std::map<Indicator, std::string> questions;
  // Extra affirmative/negative answer words accepted by the lenient parser.
  std::vector<std::string> yes_tokens;
  std::vector<std::string> no_tokens;
};

// Built-in packs: "en", "es", and empty "zh-Hans"/"bn" slots. An empty tag
// selects English. Unknown tags throw MissingTemplate.
LanguagePack BuiltinPack(std::string_view language);
std::vector<std::string> BuiltinLanguages();

LanguagePack ParseLanguagePack(std::string_view json_text);
LanguagePack ReadLanguagePack(const std::filesystem::path& path);
std::string LanguagePackToJson(const LanguagePack& pack);

enum class PromptMode { kParallel, kSequential };

std::string_view ToString(PromptMode mode);
PromptMode ParsePromptMode(std::string_view s);

struct PromptRequest {
  std::string text;
  int expected_answers = 1;
  std::vector<Indicator> indicators;  // answer slots, in order
};

struct PromptPlan {
  PromptMode mode = PromptMode::kParallel;
  std::vector<PromptRequest> requests;
};

// Questions for kPromptOrder, throwing MissingTemplate for any empty slot.
std::vector<std::string> OrderedQuestions(const LanguagePack& pack);

// A question as it reads after the conjunction: first ASCII letter lowered.
std::string ContinuationForm(std::string_view question);

// q1 + "\n" + conj + " " + q2' + ... where q' is the continuation form;
// plain newlines when the conjunction is empty.
std::string JoinQuestions(const LanguagePack& pack,
                          const std::vector<std::string>& questions);

// One request: preamble, newline, the joined questions; expects 6 answers.
PromptPlan BuildParallel(const LanguagePack& pack);
// Six requests, one question each, expecting one answer each.
PromptPlan BuildSequential(const LanguagePack& pack);
PromptPlan BuildPlan(const LanguagePack& pack, PromptMode mode);

}  // namespace nbhd

#endif  // NBHD_PROMPT_ENGINE_H_
