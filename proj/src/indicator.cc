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

#include "nbhd/indicator.h"

namespace nbhd {

std::string_view Code(Indicator i) {
  static constexpr std::array<std::string_view, kNumIndicators> kCodes = {
      "SL", "SW", "SR", "MR", "PL", "AP"};
  return kCodes[Index(i)];
}

std::string_view DisplayName(Indicator i) {
  static constexpr std::array<std::string_view, kNumIndicators> kNames = {
      "Streetlight",    "Sidewalk",  "Single-lane road",
      "Multilane road", "Powerline", "Apartment"};
  return kNames[Index(i)];
}

std::optional<Indicator> FromCode(std::string_view code) {
  for (Indicator i : kCanonicalOrder) {
    if (Code(i) == code) return i;
  }
  return std::nullopt;
}

IndicatorVector IndicatorVector::FromPromptOrder(
    const std::array<bool, kNumIndicators>& values) {
  IndicatorVector v;
  for (std::size_t k = 0; k < kNumIndicators; ++k) {
    v.Set(kPromptOrder[k], values[k]);
  }
  return v;
}

IndicatorVector IndicatorVector::FromBits(unsigned bits) {
  std::array<bool, kNumIndicators> values{};
  for (std::size_t k = 0; k < kNumIndicators; ++k) {
    values[k] = (bits >> k) & 1u;
  }
  return FromPromptOrder(values);
}

std::array<bool, kNumIndicators> IndicatorVector::InPromptOrder() const {
  std::array<bool, kNumIndicators> out{};
  for (std::size_t k = 0; k < kNumIndicators; ++k) {
    out[k] = (*this)[kPromptOrder[k]];
  }
  return out;
}

}  // namespace nbhd
