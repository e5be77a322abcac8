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

#include <algorithm>
#include <array>

#include "nbhd/errors.h"
#include "nbhd/util.h"

namespace nbhd {

namespace {

// Bytes >= 0x80 belong to multibyte UTF-8 letters (á, í, CJK, Bengali).
bool IsLetterByte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

// ASCII lowercase plus the Latin-1 supplement capitals (U+00C0..U+00DE).
std::string FoldCase(std::string_view word) {
  std::string out(word);
  for (std::size_t i = 0; i < out.size(); ++i) {
    unsigned char c = out[i];
    if (c >= 'A' && c <= 'Z') {
      out[i] = static_cast<char>(c + 32);
    } else if (c == 0xC3 && i + 1 < out.size()) {
      unsigned char n = out[i + 1];
      if (n >= 0x80 && n <= 0x9E && n != 0x97) {
        out[i + 1] = static_cast<char>(n + 0x20);
      }
      ++i;
    }
  }
  return out;
}

std::vector<std::string_view> Words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !IsLetterByte(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && IsLetterByte(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

struct Polarity {
  std::vector<bool> values;
  std::vector<std::string> tokens;
};

Polarity LenientTokens(std::string_view raw, const AnswerTokens& extra) {
  auto matches = [](const std::vector<std::string>& set,
                    const std::string& w) {
    return std::find(set.begin(), set.end(), w) != set.end();
  };
  Polarity p;
  for (std::string_view word : Words(raw)) {
    std::string w = FoldCase(word);
    if (w == "yes" || matches(extra.yes, w)) {
      p.values.push_back(true);
      p.tokens.emplace_back(word);
    } else if (w == "no" || matches(extra.no, w)) {
      p.values.push_back(false);
      p.tokens.emplace_back(word);
    }
  }
  return p;
}

bool StrictToken(const std::string& token) {
  if (token == "Yes") return true;
  if (token == "No") return false;
  throw AmbiguousToken(token);
}

}  // namespace

std::string_view ToString(ParseMode mode) {
  return mode == ParseMode::kStrict ? "strict" : "lenient";
}

ParseMode ParseParseMode(std::string_view s) {
  if (s == "strict") return ParseMode::kStrict;
  if (s == "lenient") return ParseMode::kLenient;
  throw ConfigError("unknown parse mode '" + std::string(s) + "'");
}

IndicatorVector ParseParallel(std::string_view raw, ParseMode mode,
                              const AnswerTokens& extra) {
  if (Trim(raw).empty()) throw EmptyResponse("empty model response");
  std::array<bool, kNumIndicators> values{};
  if (mode == ParseMode::kStrict) {
    std::vector<std::string> parts = Split(raw, ',');
    if (parts.size() != kNumIndicators) {
      throw CountMismatch(static_cast<int>(parts.size()));
    }
    for (std::size_t k = 0; k < kNumIndicators; ++k) {
      values[k] = StrictToken(Trim(parts[k]));
    }
  } else {
    Polarity p = LenientTokens(raw, extra);
    if (p.values.size() != kNumIndicators) {
      throw CountMismatch(static_cast<int>(p.values.size()));
    }
    std::copy(p.values.begin(), p.values.end(), values.begin());
  }
  return IndicatorVector::FromPromptOrder(values);
}

bool ParseSingle(std::string_view raw, ParseMode mode,
                 const AnswerTokens& extra) {
  if (Trim(raw).empty()) throw EmptyResponse("empty model response");
  if (mode == ParseMode::kStrict) return StrictToken(Trim(raw));
  Polarity p = LenientTokens(raw, extra);
  bool any_yes = std::find(p.values.begin(), p.values.end(), true) != p.values.end();
  bool any_no = std::find(p.values.begin(), p.values.end(), false) != p.values.end();
  if (any_yes == any_no) throw AmbiguousToken(Trim(raw).substr(0, 80));
  return any_yes;
}

std::string FormatParallelAnswer(const IndicatorVector& v) {
  std::string out;
  for (bool b : v.InPromptOrder()) {
    if (!out.empty()) out += ", ";
    out += b ? "Yes" : "No";
  }
  return out;
}

ParseOutcome TryParseParallel(std::string_view raw, ParseMode mode,
                              const AnswerTokens& extra) {
  ParseOutcome outcome;
  outcome.mode = mode;
  try {
    outcome.vector = ParseParallel(raw, mode, extra);
  } catch (const Error& e) {
    outcome.defects.push_back(e.what());
    return outcome;
  }
  if (mode == ParseMode::kLenient) {
    // Report what strict parsing would have rejected.
    try {
      ParseParallel(raw, ParseMode::kStrict);
    } catch (const Error& e) {
      outcome.defects.push_back(std::string("not strict: ") + e.what());
    }
  }
  return outcome;
}

}  // namespace nbhd
