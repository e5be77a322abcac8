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

#ifndef NBHD_REFERENCE_RATES_H_
#define NBHD_REFERENCE_RATES_H_

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "nbhd/indicator.h"

namespace nbhd {

// Published per-class precision / recall / F1 / accuracy of the four chat
// models on the six-indicator presence task, with their printed Average row.
struct PublishedRow {
  Indicator indicator = Indicator::kStreetlight;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

struct PublishedTable {
  std::string model;  // "chatgpt-4o-mini", "gemini-1.5-pro", ...
  std::array<PublishedRow, kNumIndicators> rows;  // canonical order
  PublishedRow average;
};

const std::vector<PublishedTable>& PublishedModelTables();
// Throws std::out_of_range for unknown models.
const PublishedTable& PublishedTableFor(std::string_view model);

// True-positive rate, true-negative rate and prevalence implied by a
// (precision, recall, accuracy) triple.
struct ClassRates {
  double tpr = 1.0;
  double tnr = 1.0;
  double prevalence = 0.5;
};

ClassRates RatesFromPublished(double precision, double recall,
                              double accuracy);

}  // namespace nbhd

#endif  // NBHD_REFERENCE_RATES_H_
