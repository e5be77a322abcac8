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

#ifndef NBHD_METRICS_H_
#define NBHD_METRICS_H_

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbhd/groundtruth.h"
#include "nbhd/indicator.h"

namespace nbhd {

// ---------------------------------------------------------------------------
// Presence-level classification metrics.
// ---------------------------------------------------------------------------

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

using ConfusionTable = std::array<ConfusionCounts, kNumIndicators>;

// Images lacking a prediction are excluded and listed (kExclude), or the
// whole call fails with ImageSetMismatch (kStrict).
enum class SkipPolicy { kExclude, kStrict };

struct ConfusionResult {
  ConfusionTable counts{};  // canonical indicator order
  std::vector<std::string> missing_predictions;
  std::vector<std::string> unknown_images;  // predicted but not in truth
  std::size_t scored_images = 0;
};

ConfusionResult Confusion(const PresenceMap& predicted,
                          const PresenceMap& truth,
                          SkipPolicy policy = SkipPolicy::kExclude);

struct DerivedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  // Set when the ratio had a zero denominator and was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;  // tp + fp + fn == 0
};

// Throws EmptySet when counts.total() == 0.
DerivedMetrics Derive(const ConfusionCounts& counts);

double F1Score(double precision, double recall);

// Integer counts over `total` images whose precision, recall and accuracy
// each lie within `tolerance` of the given rates. Picks the candidate with
// the smallest squared deviation; nullopt when none exists.
std::optional<ConfusionCounts> CountsConsistentWith(double precision,
                                                    double recall,
                                                    double accuracy,
                                                    long total,
                                                    double tolerance = 0.005);

// ---------------------------------------------------------------------------
// Detection metrics.
// ---------------------------------------------------------------------------

struct DetectionBox {
  std::string image_id;
  Indicator indicator = Indicator::kStreetlight;
  BBox bbox;
  double confidence = 1.0;
};

double Iou(const BBox& a, const BBox& b);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double confidence = 0.0;
};

struct ApResult {
  double ap = 0.0;
  bool undefined = false;  // no truths and no predictions
  int num_truths = 0;
  int num_predictions = 0;
  int true_positives = 0;
  std::vector<PrPoint> curve;  // one point per prediction, descending conf
};

// Single-class AP. Predictions are visited by descending confidence (stable);
// each claims the unmatched same-image truth with the highest IoU >= the
// threshold (ties: lower truth index). AP is the area under the monotone
// precision envelope (all-point interpolation).
ApResult AveragePrecision(std::span<const DetectionBox> predictions,
                          std::span<const DetectionBox> truths,
                          double iou_threshold = 0.5);

// Mean of the defined APs. Throws AllUndefined if none is defined.
double Map50(std::span<const ApResult> per_class);

struct DetectionClassRow {
  ApResult ap50;
  // Operating point with the highest F1 along the PR curve.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct DetectionReport {
  std::array<DetectionClassRow, kNumIndicators> rows{};
  double map50 = 0.0;
};

DetectionReport EvaluateDetections(std::span<const DetectionBox> predictions,
                                   std::span<const DetectionBox> truths,
                                   double iou_threshold = 0.5);

std::vector<DetectionBox> TruthBoxes(std::span<const Annotation> annotations);

// image_id,indicator,xmin,ymin,xmax,ymax,confidence
std::vector<DetectionBox> PredictionsFromCsv(std::string_view text);
std::string PredictionsToCsv(std::span<const DetectionBox> boxes);

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

struct MetricsRow {
  Indicator indicator = Indicator::kStreetlight;
  DerivedMetrics metrics;
  ConfusionCounts counts;
};

struct MetricsReport {
  std::string series;  // provider id, "ensemble", ...
  std::array<MetricsRow, kNumIndicators> rows{};
  // Arithmetic means over indicators whose value is defined.
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double macro_accuracy = 0.0;
};

// Indicators with zero scored images get all-zero, undefined metrics.
MetricsReport BuildReport(std::string series, const ConfusionTable& counts);

// Columns: Label, Precision, Recall, F1, Accuracy (+ Average row).
std::string ReportMarkdown(const MetricsReport& report, int decimals = 2);
// Columns: Label, Precision, Recall, F1, mAP50 (+ Average row).
std::string DetectionMarkdown(const DetectionReport& report, int decimals = 3);

std::string ConfusionCsvHeader();
std::string ConfusionCsvRows(const MetricsReport& report);
std::string MetricsCsvHeader();
std::string MetricsCsvRows(const MetricsReport& report);
std::string DetectionCsv(const DetectionReport& report);

}  // namespace nbhd

#endif  // NBHD_METRICS_H_
