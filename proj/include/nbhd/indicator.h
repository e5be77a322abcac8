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

#ifndef NBHD_INDICATOR_H_
#define NBHD_INDICATOR_H_

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace nbhd {

// The six neighborhood indicators, in canonical (reporting) order.
enum class Indicator : int {
  kStreetlight = 0,  // SL
  kSidewalk,         // SW
  kSingleLaneRoad,   // SR
  kMultilaneRoad,    // MR
  kPowerline,        // PL
  kApartment,        // AP
};

inline constexpr std::size_t kNumIndicators = 6;

inline constexpr std::array<Indicator, kNumIndicators> kCanonicalOrder = {
    Indicator::kStreetlight,    Indicator::kSidewalk,
    Indicator::kSingleLaneRoad, Indicator::kMultilaneRoad,
    Indicator::kPowerline,      Indicator::kApartment,
};

// Question / answer-slot order used by prompts and positional answers.
inline constexpr std::array<Indicator, kNumIndicators> kPromptOrder = {
    Indicator::kMultilaneRoad, Indicator::kSingleLaneRoad,
    Indicator::kSidewalk,      Indicator::kStreetlight,
    Indicator::kPowerline,     Indicator::kApartment,
};

constexpr std::size_t Index(Indicator i) { return static_cast<std::size_t>(i); }

// Two-letter code: "SL", "SW", ...
std::string_view Code(Indicator i);
// Human-readable row label: "Streetlight", "Single-lane road", ...
std::string_view DisplayName(Indicator i);
std::optional<Indicator> FromCode(std::string_view code);

// Presence of each indicator. All six slots always exist.
class IndicatorVector {
 public:
  IndicatorVector() = default;
  explicit IndicatorVector(std::array<bool, kNumIndicators> canonical)
      : presence_(canonical) {}

  // Builds from values listed in kPromptOrder (MR, SR, SW, SL, PL, AP).
  static IndicatorVector FromPromptOrder(
      const std::array<bool, kNumIndicators>& values);
  // Bit i of `bits` is the value of kPromptOrder[i]; used to enumerate all 64.
  static IndicatorVector FromBits(unsigned bits);

  bool operator[](Indicator i) const { return presence_[Index(i)]; }
  void Set(Indicator i, bool value) { presence_[Index(i)] = value; }

  std::array<bool, kNumIndicators> InPromptOrder() const;
  const std::array<bool, kNumIndicators>& canonical() const {
    return presence_;
  }

  bool operator==(const IndicatorVector&) const = default;

 private:
  std::array<bool, kNumIndicators> presence_{};
};

}  // namespace nbhd

#endif  // NBHD_INDICATOR_H_
