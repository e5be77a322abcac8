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

#include "nbhd/prompt_engine.h"

#include "json.hpp"
#include "nbhd/errors.h"
#include "nbhd/util.h"

namespace nbhd {

using nlohmann::json;

namespace {

LanguagePack EnglishPack() {
  LanguagePack p;
  p.language = "en";
  p.conjunction = "And";
  p.preamble = "Respond in this format: Yes, No, No, Yes, No, Yes:";
  p.questions = {
      {Indicator::kMultilaneRoad,
       "Is the road shown in the image a multi-lane road (more than one lane "
       "per direction)? Respond only with `Yes' or `No'."},
      {Indicator::kSingleLaneRoad,
       "Is the road in the image a single-lane road (one lane per "
       "direction)? Respond only with `Yes' or `No'."},
      {Indicator::kSidewalk,
       "Is there a sidewalk visible in the image? Respond only with `Yes' or "
       "`No'."},
      {Indicator::kStreetlight,
       "Is there a streetlight visible in the image? Respond only with `Yes' "
       "or `No'."},
      {Indicator::kPowerline,
       "Is there a power line visible in the image? Please respond with "
       "`Yes' or `No'."},
      {Indicator::kApartment,
       "Is there an apartment visible in the image? Respond only with `Yes' "
       "or `No'."},
  };
  return p;
}

LanguagePack SpanishPack() {
  LanguagePack p;
  p.language = "es";
  p.conjunction = "";
  p.preamble =
      "Por favor, responda exactamente en este formato y ningún otro: sí, no, "
      "no, sí, no, no.";
  p.questions = {
      {Indicator::kMultilaneRoad,
       "¿La carretera que se muestra en la imagen tiene varios carriles (más "
       "de un carril por sentido)? Responda solo con `Sí' o `No'."},
      {Indicator::kSingleLaneRoad,
       "¿La carretera que se muestra en la imagen tiene un solo carril (un "
       "carril por sentido)? Responda solo con `Sí' o `No'."},
      {Indicator::kSidewalk,
       "¿Se ve una acera en la imagen? Responda solo con `Sí' o `No'."},
      {Indicator::kStreetlight,
       "¿Se ve un alumbrado público en la imagen? Responda solo con `Sí' o "
       "`No'."},
      {Indicator::kPowerline,
       "¿Se ve un cable eléctrico en la imagen? Responda solo con `Sí' o "
       "`No'."},
      {Indicator::kApartment,
       "¿Se ve un apartamento en la imagen? Responda solo con `Sí' o `No'."},
  };
  p.yes_tokens = {"sí", "si"};
  p.no_tokens = {"no"};
  return p;
}

// Slots only: the texts must be supplied through a pack file.
LanguagePack EmptyPack(std::string language) {
  LanguagePack p;
  p.language = std::move(language);
  return p;
}

}  // namespace

LanguagePack BuiltinPack(std::string_view language) {
  if (language.empty() || language == "en") return EnglishPack();
  if (language == "es") return SpanishPack();
  if (language == "zh-Hans" || language == "bn") {
    return EmptyPack(std::string(language));
  }
  throw MissingTemplate("no built-in language pack for '" +
                        std::string(language) + "'");
}

std::vector<std::string> BuiltinLanguages() {
  return {"en", "es", "zh-Hans", "bn"};
}

LanguagePack ParseLanguagePack(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid language pack: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("language pack must be an object");
  LanguagePack p;
  try {
    p.language = j.value("language", "");
    p.conjunction = j.value("conjunction", "");
    p.preamble = j.value("preamble", "");
    if (j.contains("questions")) {
      for (const auto& [code, text] : j["questions"].items()) {
        auto ind = FromCode(code);
        if (!ind) throw ParseError("unknown question key '" + code + "'");
        // An empty slot stays unfilled.
        if (auto t = text.get<std::string>(); !t.empty()) p.questions[*ind] = t;
      }
    }
    p.yes_tokens = j.value("yes_tokens", std::vector<std::string>{});
    p.no_tokens = j.value("no_tokens", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed language pack: ") + e.what());
  }
  return p;
}

LanguagePack ReadLanguagePack(const std::filesystem::path& path) {
  return ParseLanguagePack(ReadFile(path));
}

std::string LanguagePackToJson(const LanguagePack& pack) {
  json questions = json::object();
  for (Indicator i : kPromptOrder) {
    auto it = pack.questions.find(i);
    questions[std::string(Code(i))] =
        it == pack.questions.end() ? "" : it->second;
  }
  json j{{"language", pack.language},
         {"conjunction", pack.conjunction},
         {"preamble", pack.preamble},
         {"questions", questions},
         {"yes_tokens", pack.yes_tokens},
         {"no_tokens", pack.no_tokens}};
  return j.dump(2) + "\n";
}

std::string_view ToString(PromptMode mode) {
  return mode == PromptMode::kParallel ? "parallel" : "sequential";
}

PromptMode ParsePromptMode(std::string_view s) {
  if (s == "parallel") return PromptMode::kParallel;
  if (s == "sequential") return PromptMode::kSequential;
  throw ConfigError("unknown prompt mode '" + std::string(s) + "'");
}

std::vector<std::string> OrderedQuestions(const LanguagePack& pack) {
  std::vector<std::string> out;
  for (Indicator i : kPromptOrder) {
    auto it = pack.questions.find(i);
    if (it == pack.questions.end() || Trim(it->second).empty()) {
      throw MissingTemplate("language '" + pack.language + "' has no " +
                            std::string(Code(i)) + " question");
    }
    out.push_back(it->second);
  }
  return out;
}

std::string ContinuationForm(std::string_view question) {
  std::string out(question);
  if (!out.empty() && out[0] >= 'A' && out[0] <= 'Z') out[0] += 'a' - 'A';
  return out;
}

std::string JoinQuestions(const LanguagePack& pack,
                          const std::vector<std::string>& questions) {
  std::string body;
  for (std::size_t k = 0; k < questions.size(); ++k) {
    if (k == 0) {
      body += questions[k];
    } else if (pack.conjunction.empty()) {
      body += "\n" + questions[k];
    } else {
      body += "\n" + pack.conjunction + " " + ContinuationForm(questions[k]);
    }
  }
  return body;
}

PromptPlan BuildParallel(const LanguagePack& pack) {
  std::vector<std::string> questions = OrderedQuestions(pack);
  if (Trim(pack.preamble).empty()) {
    throw MissingTemplate("language '" + pack.language +
                          "' has no format preamble");
  }
  PromptRequest req;
  req.text = pack.preamble + "\n" + JoinQuestions(pack, questions);
  req.expected_answers = static_cast<int>(kNumIndicators);
  req.indicators.assign(kPromptOrder.begin(), kPromptOrder.end());
  return PromptPlan{PromptMode::kParallel, {std::move(req)}};
}

PromptPlan BuildSequential(const LanguagePack& pack) {
  std::vector<std::string> questions = OrderedQuestions(pack);
  PromptPlan plan{PromptMode::kSequential, {}};
  for (std::size_t k = 0; k < kNumIndicators; ++k) {
    plan.requests.push_back(
        PromptRequest{std::move(questions[k]), 1, {kPromptOrder[k]}});
  }
  return plan;
}

PromptPlan BuildPlan(const LanguagePack& pack, PromptMode mode) {
  return mode == PromptMode::kParallel ? BuildParallel(pack)
                                       : BuildSequential(pack);
}

}  // namespace nbhd
