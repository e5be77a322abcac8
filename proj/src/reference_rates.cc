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

#include "nbhd/reference_rates.h"

#include <algorithm>
#include <stdexcept>

namespace nbhd {

namespace {

using I = Indicator;

PublishedTable Make(std::string model,
                    std::array<std::array<double, 4>, kNumIndicators> rows,
                    std::array<double, 4> avg) {
  PublishedTable t;
  t.model = std::move(model);
  for (Indicator i : kCanonicalOrder) {
    const auto& r = rows[Index(i)];
    t.rows[Index(i)] = {i, r[0], r[1], r[2], r[3]};
  }
  t.average = {I::kStreetlight, avg[0], avg[1], avg[2], avg[3]};
  return t;
}

}  // namespace

const std::vector<PublishedTable>& PublishedModelTables() {
  // Rows: SL, SW, SR, MR, PL, AP; columns: P, R, F1, Acc.
  static const std::vector<PublishedTable> kTables = {
      Make("chatgpt-4o-mini",
           {{{0.61, 0.84, 0.70, 0.85},
             {0.80, 0.82, 0.81, 0.82},
             {0.49, 0.98, 0.66, 0.67},
             {0.97, 0.87, 0.92, 0.94},
             {0.75, 0.94, 0.83, 0.91},
             {0.32, 1.00, 0.48, 0.84}}},
           {0.66, 0.91, 0.73, 0.84}),
      Make("gemini-1.5-pro",
           {{{0.76, 0.96, 0.85, 0.92},
             {0.96, 0.59, 0.73, 0.81},
             {0.55, 0.89, 0.68, 0.73},
             {0.89, 0.98, 0.93, 0.94},
             {0.91, 0.96, 0.93, 0.97},
             {0.57, 1.00, 0.73, 0.94}}},
           {0.77, 0.90, 0.81, 0.88}),
      Make("grok-2",
           {{{0.76, 0.91, 0.83, 0.91},
             {0.83, 0.92, 0.88, 0.87},
             {0.41, 0.99, 0.58, 0.55},
             {0.98, 0.56, 0.72, 0.82},
             {0.82, 1.00, 0.90, 0.94},
             {0.69, 1.00, 0.82, 0.96}}},
           {0.75, 0.90, 0.79, 0.84}),
      Make("claude-3.7",
           {{{0.83, 0.76, 0.79, 0.91},
             {0.76, 0.80, 0.78, 0.80},
             {0.52, 0.99, 0.68, 0.70},
             {0.98, 0.85, 0.91, 0.93},
             {0.69, 0.99, 0.82, 0.89},
             {0.54, 1.00, 0.70, 0.93}}},
           {0.72, 0.90, 0.78, 0.86}),
  };
  return kTables;
}

const PublishedTable& PublishedTableFor(std::string_view model) {
  for (const PublishedTable& t : PublishedModelTables()) {
    if (t.model == model) return t;
  }
  throw std::out_of_range("no published table for model '" +
                          std::string(model) + "'");
}

ClassRates RatesFromPublished(double precision, double recall,
                              double accuracy) {
  // With prevalence q: acc = q*R + (1-q)*TNR and
  // (1-q)*(1-TNR) = q*R*(1-P)/P. Adding the two eliminates TNR.
  ClassRates out;
  out.tpr = recall;
  double denom = 1.0 - recall + recall * (1.0 - precision) / precision;
  double q = denom > 0.0 ? (1.0 - accuracy) / denom : 0.5;
  q = std::clamp(q, 1e-6, 1.0 - 1e-6);
  out.prevalence = q;
  out.tnr = std::clamp((accuracy - q * recall) / (1.0 - q), 0.0, 1.0);
  return out;
}

}  // namespace nbhd
