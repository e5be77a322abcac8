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

#include "nbhd/ensemble.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "nbhd/errors.h"
#include "nbhd/util.h"

namespace nbhd {

std::string_view ToString(TieRule rule) {
  switch (rule) {
    case TieRule::kAbstain: return "abstain";
    case TieRule::kNegative: return "negative";
    case TieRule::kPositive: return "positive";
  }
  return "negative";
}

TieRule ParseTieRule(std::string_view s) {
  if (s == "abstain") return TieRule::kAbstain;
  if (s == "negative") return TieRule::kNegative;
  if (s == "positive") return TieRule::kPositive;
  throw ConfigError("unknown tie rule '" + std::string(s) + "'");
}

EnsembleVerdict Vote(std::span<const ModelVerdict> verdicts,
                     TieRule tie_rule) {
  if (verdicts.size() < 2) {
    throw InsufficientVoters("voting needs at least 2 verdicts, got " +
                             std::to_string(verdicts.size()));
  }
  EnsembleVerdict out;
  out.image_id = verdicts.front().image_id;
  for (const ModelVerdict& v : verdicts) {
    if (v.image_id != out.image_id) {
      throw MixedImages("verdicts for '" + out.image_id + "' and '" +
                        v.image_id + "' cannot be voted together");
    }
    for (Indicator i : kCanonicalOrder) {
      VoteCount& c = out.votes[Index(i)];
      ++c.total;
      if (v.vector[i]) ++c.yes;
    }
  }
  for (Indicator i : kCanonicalOrder) {
    const VoteCount& c = out.votes[Index(i)];
    bool present;
    if (2 * c.yes > c.total) {
      present = true;
    } else if (2 * c.yes < c.total) {
      present = false;
    } else {
      present = tie_rule == TieRule::kPositive;
      out.abstained[Index(i)] = tie_rule == TieRule::kAbstain;
    }
    out.vector.Set(i, present);
  }
  return out;
}

std::vector<std::string> VoterPreset(std::string_view name) {
  if (name == "top3") return {"gemini-1.5-pro", "claude-3.7", "grok-2"};
  if (name == "all4") {
    return {"chatgpt-4o-mini", "gemini-1.5-pro", "claude-3.7", "grok-2"};
  }
  throw ConfigError("unknown voter preset '" + std::string(name) + "'");
}

EnsembleRun VoteAll(std::span<const ModelVerdict> verdicts,
                    const std::vector<std::string>& voters,
                    TieRule tie_rule) {
  std::set<std::string> allowed(voters.begin(), voters.end());
  std::map<std::string, std::vector<ModelVerdict>> by_image;
  for (const ModelVerdict& v : verdicts) {
    if (allowed.empty() || allowed.contains(v.provider_id)) {
      by_image[v.image_id].push_back(v);
    }
  }
  EnsembleRun run;
  for (auto& [id, group] : by_image) {
    // Deterministic voter order keeps outputs byte-stable.
    std::sort(group.begin(), group.end(),
              [](const ModelVerdict& a, const ModelVerdict& b) {
                return a.provider_id < b.provider_id;
              });
    if (group.size() < 2) {
      run.skipped_images.push_back(id);
      continue;
    }
    run.verdicts.emplace(id, Vote(group, tie_rule));
  }
  return run;
}

double MajorityAccuracy(double p, int n) {
  double sum = 0.0;
  for (int k = n / 2 + 1; k <= n; ++k) {
    double binom = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                            std::lgamma(n - k + 1.0));
    sum += binom * std::pow(p, k) * std::pow(1.0 - p, n - k);
  }
  return sum;
}

double SimulateEnsemble(double p, int n, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution truth_draw(0.5);
  std::bernoulli_distribution correct_draw(std::clamp(p, 0.0, 1.0));
  int correct = 0;
  std::vector<ModelVerdict> voters(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    voters[v].image_id = "trial";
    voters[v].provider_id = "voter" + std::to_string(v);
  }
  for (int t = 0; t < trials; ++t) {
    bool truth = truth_draw(rng);
    for (ModelVerdict& v : voters) {
      IndicatorVector vec;
      for (Indicator i : kCanonicalOrder) {
        vec.Set(i, correct_draw(rng) ? truth : !truth);
      }
      v.vector = vec;
    }
    EnsembleVerdict e = Vote(voters, TieRule::kNegative);
    if (e.vector[Indicator::kStreetlight] == truth) ++correct;
  }
  return trials > 0 ? double(correct) / trials : 0.0;
}

namespace {

CsvRow VerdictHeader() {
  CsvRow h{"image_id", "provider"};
  for (Indicator i : kPromptOrder) h.emplace_back(Code(i));
  return h;
}

CsvRow VerdictRow(const std::string& image, const std::string& provider,
                  const IndicatorVector& v) {
  CsvRow row{image, provider};
  for (bool b : v.InPromptOrder()) row.push_back(b ? "1" : "0");
  return row;
}

}  // namespace

std::string VerdictsToCsv(std::span<const ModelVerdict> verdicts) {
  std::string out = CsvLine(VerdictHeader());
  for (const ModelVerdict& v : verdicts) {
    out += CsvLine(VerdictRow(v.image_id, v.provider_id, v.vector));
  }
  return out;
}

std::vector<ModelVerdict> VerdictsFromCsv(std::string_view text) {
  auto rows = ParseCsv(text);
  if (rows.empty()) throw ParseError("verdict CSV is empty");
  const CsvRow& h = rows.front();
  std::size_t c_id = ColumnIndex(h, "image_id");
  std::size_t c_prov = ColumnIndex(h, "provider");
  std::array<std::size_t, kNumIndicators> cols{};
  for (Indicator i : kCanonicalOrder) cols[Index(i)] = ColumnIndex(h, Code(i));
  std::vector<ModelVerdict> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.size() != h.size()) {
      throw ParseError("verdict CSV row " + std::to_string(r) +
                       " has the wrong column count");
    }
    ModelVerdict v;
    v.image_id = row[c_id];
    v.provider_id = row[c_prov];
    for (Indicator i : kCanonicalOrder) {
      const std::string& cell = row[cols[Index(i)]];
      if (cell != "0" && cell != "1") {
        throw ParseError("verdict cell must be 0 or 1, got '" + cell + "'");
      }
      v.vector.Set(i, cell == "1");
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::string EnsembleToCsv(const EnsembleRun& run, std::string_view label) {
  CsvRow h = VerdictHeader();
  for (Indicator i : kPromptOrder) h.push_back(std::string(Code(i)) + "_votes");
  std::string out = CsvLine(h);
  for (const auto& [id, e] : run.verdicts) {
    CsvRow row = VerdictRow(id, std::string(label), e.vector);
    for (Indicator i : kPromptOrder) {
      const VoteCount& c = e.votes[Index(i)];
      row.push_back(std::to_string(c.yes) + "/" + std::to_string(c.total) +
                    (e.abstained[Index(i)] ? "?" : ""));
    }
    out += CsvLine(row);
  }
  return out;
}

PresenceMap VerdictsFor(std::span<const ModelVerdict> verdicts,
                        std::string_view provider) {
  PresenceMap out;
  for (const ModelVerdict& v : verdicts) {
    if (v.provider_id == provider) out[v.image_id] = v.vector;
  }
  return out;
}

PresenceMap EnsemblePresence(const EnsembleRun& run) {
  PresenceMap out;
  for (const auto& [id, e] : run.verdicts) out[id] = e.vector;
  return out;
}

}  // namespace nbhd
