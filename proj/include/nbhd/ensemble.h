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

#ifndef NBHD_ENSEMBLE_H_
#define NBHD_ENSEMBLE_H_

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbhd/groundtruth.h"
#include "nbhd/indicator.h"

namespace nbhd {

struct ModelVerdict {
  std::string image_id;
  std::string provider_id;
  IndicatorVector vector;
  std::string run_id;
};

struct VoteCount {
  int yes = 0;
  int total = 0;
  bool operator==(const VoteCount&) const = default;
};

enum class TieRule { kAbstain, kNegative, kPositive };

std::string_view ToString(TieRule rule);
TieRule ParseTieRule(std::string_view s);

struct EnsembleVerdict {
  std::string image_id;
  IndicatorVector vector;
  std::array<VoteCount, kNumIndicators> votes{};  // canonical order
  // Indicators left undecided by a tie under TieRule::kAbstain (reported
  // as absent in `vector`).
  std::array<bool, kNumIndicators> abstained{};
};

// Per indicator: present iff yes > total / 2; exact ties follow `tie_rule`.
// Throws InsufficientVoters (< 2) or MixedImages.
EnsembleVerdict Vote(std::span<const ModelVerdict> verdicts,
                     TieRule tie_rule = TieRule::kNegative);

// Named voter sets. "top3" is the Gemini / Claude / Grok trio.
std::vector<std::string> VoterPreset(std::string_view name);

struct EnsembleRun {
  std::map<std::string, EnsembleVerdict> verdicts;
  std::vector<std::string> skipped_images;  // fewer than two voters present
};

// Groups verdicts by image and votes among `voters` (all providers if empty).
EnsembleRun VoteAll(std::span<const ModelVerdict> verdicts,
                    const std::vector<std::string>& voters,
                    TieRule tie_rule = TieRule::kNegative);

// Exact probability that a strict majority of n independent voters with
// accuracy p is correct.
double MajorityAccuracy(double p, int n);

// Monte Carlo check of the voting rule: each trial draws n independent
// verdicts that are correct with probability p and votes them.
double SimulateEnsemble(double p, int n, int trials, std::uint64_t seed = 0);

// image_id,provider,MR,SR,SW,SL,PL,AP
std::string VerdictsToCsv(std::span<const ModelVerdict> verdicts);
std::vector<ModelVerdict> VerdictsFromCsv(std::string_view text);
std::string EnsembleToCsv(const EnsembleRun& run,
                          std::string_view label = "ensemble");

// Collects one provider's verdicts as a presence map.
PresenceMap VerdictsFor(std::span<const ModelVerdict> verdicts,
                        std::string_view provider);
PresenceMap EnsemblePresence(const EnsembleRun& run);

}  // namespace nbhd

#endif  // NBHD_ENSEMBLE_H_
