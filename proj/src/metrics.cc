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

#include "nbhd/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "nbhd/errors.h"
#include "nbhd/util.h"

namespace nbhd {

namespace {

double Ratio(long num, long den, bool* undefined) {
  if (den == 0) {
    *undefined = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string Cell(double value, bool undefined, int decimals) {
  return undefined ? "n/a" : FormatFixed(value, decimals);
}

}  // namespace

ConfusionResult Confusion(const PresenceMap& predicted,
                          const PresenceMap& truth, SkipPolicy policy) {
  ConfusionResult out;
  for (const auto& [id, t] : truth) {
    auto it = predicted.find(id);
    if (it == predicted.end()) {
      out.missing_predictions.push_back(id);
      continue;
    }
    ++out.scored_images;
    for (Indicator i : kCanonicalOrder) {
      ConfusionCounts& c = out.counts[Index(i)];
      bool p = it->second[i];
      bool g = t[i];
      if (p && g) ++c.tp;
      else if (p && !g) ++c.fp;
      else if (!p && g) ++c.fn;
      else ++c.tn;
    }
  }
  for (const auto& [id, _] : predicted) {
    if (!truth.contains(id)) out.unknown_images.push_back(id);
  }
  if (policy == SkipPolicy::kStrict &&
      (!out.missing_predictions.empty() || !out.unknown_images.empty())) {
    std::vector<std::string> diff = out.missing_predictions;
    diff.insert(diff.end(), out.unknown_images.begin(),
                out.unknown_images.end());
    std::sort(diff.begin(), diff.end());
    throw ImageSetMismatch(std::move(diff));
  }
  return out;
}

double F1Score(double precision, double recall) {
  return precision + recall > 0.0
             ? 2.0 * precision * recall / (precision + recall)
             : 0.0;
}

DerivedMetrics Derive(const ConfusionCounts& c) {
  if (c.total() <= 0) throw EmptySet("no scored images");
  DerivedMetrics m;
  m.precision = Ratio(c.tp, c.tp + c.fp, &m.precision_undefined);
  m.recall = Ratio(c.tp, c.tp + c.fn, &m.recall_undefined);
  // F1 = 2tp / (2tp + fp + fn) needs only one nonzero term; with tp = 0 it
  // is 0 even when one of P or R had no denominator.
  m.f1_undefined = c.tp + c.fp + c.fn == 0;
  m.f1 = m.f1_undefined ? 0.0 : F1Score(m.precision, m.recall);
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return m;
}

std::optional<ConfusionCounts> CountsConsistentWith(double precision,
                                                    double recall,
                                                    double accuracy,
                                                    long total,
                                                    double tolerance) {
  std::optional<ConfusionCounts> best;
  double best_err = std::numeric_limits<double>::infinity();
  for (long tp = 1; tp <= total; ++tp) {
    // fn such that tp / (tp + fn) is within tolerance of recall.
    long fn0 = std::max(0L, static_cast<long>(
                                double(tp) / (recall + tolerance)) - tp - 1);
    for (long fn = fn0; tp + fn <= total; ++fn) {
      double r = double(tp) / double(tp + fn);
      if (r < recall - tolerance) break;
      if (r > recall + tolerance) continue;
      long fp0 = std::max(0L, static_cast<long>(double(tp) /
                                                (precision + tolerance)) -
                                   tp - 1);
      for (long fp = fp0; tp + fn + fp <= total; ++fp) {
        double p = double(tp) / double(tp + fp);
        if (p < precision - tolerance) break;
        if (p > precision + tolerance) continue;
        long tn = total - tp - fn - fp;
        double a = double(tp + tn) / double(total);
        if (std::abs(a - accuracy) > tolerance) continue;
        double err = (p - precision) * (p - precision) +
                     (r - recall) * (r - recall) +
                     (a - accuracy) * (a - accuracy);
        if (err < best_err) {
          best_err = err;
          best = ConfusionCounts{tp, fp, fn, tn};
        }
      }
    }
  }
  return best;
}

double Iou(const BBox& a, const BBox& b) {
  double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  double inter = iw * ih;
  double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

ApResult AveragePrecision(std::span<const DetectionBox> predictions,
                          std::span<const DetectionBox> truths,
                          double iou_threshold) {
  ApResult out;
  out.num_truths = static_cast<int>(truths.size());
  out.num_predictions = static_cast<int>(predictions.size());
  if (truths.empty()) {
    out.undefined = predictions.empty();
    return out;
  }

  std::map<std::string_view, std::vector<std::size_t>> truths_by_image;
  for (std::size_t t = 0; t < truths.size(); ++t) {
    truths_by_image[truths[t].image_id].push_back(t);
  }

  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return predictions[a].confidence >
                            predictions[b].confidence;
                   });

  std::vector<bool> matched(truths.size(), false);
  long tp = 0, fp = 0;
  out.curve.reserve(order.size());
  for (std::size_t idx : order) {
    const DetectionBox& pred = predictions[idx];
    std::optional<std::size_t> best;
    double best_iou = iou_threshold;
    auto it = truths_by_image.find(pred.image_id);
    if (it != truths_by_image.end()) {
      for (std::size_t t : it->second) {
        if (matched[t]) continue;
        double iou = Iou(pred.bbox, truths[t].bbox);
        if (iou >= iou_threshold && (!best || iou > best_iou)) {
          best = t;
          best_iou = iou;
        }
      }
    }
    if (best) {
      matched[*best] = true;
      ++tp;
    } else {
      ++fp;
    }
    out.curve.push_back({double(tp) / double(truths.size()),
                         double(tp) / double(tp + fp), pred.confidence});
  }
  out.true_positives = static_cast<int>(tp);

  // Area under the precision envelope.
  double envelope = 0.0;
  std::vector<double> env(out.curve.size());
  for (std::size_t i = out.curve.size(); i-- > 0;) {
    envelope = std::max(envelope, out.curve[i].precision);
    env[i] = envelope;
  }
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < out.curve.size(); ++i) {
    out.ap += (out.curve[i].recall - prev_recall) * env[i];
    prev_recall = out.curve[i].recall;
  }
  return out;
}

double Map50(std::span<const ApResult> per_class) {
  double sum = 0.0;
  int n = 0;
  for (const ApResult& r : per_class) {
    if (r.undefined) continue;
    sum += r.ap;
    ++n;
  }
  if (n == 0) throw AllUndefined("no class has a defined AP");
  return sum / n;
}

DetectionReport EvaluateDetections(std::span<const DetectionBox> predictions,
                                   std::span<const DetectionBox> truths,
                                   double iou_threshold) {
  DetectionReport report;
  std::array<ApResult, kNumIndicators> aps{};
  for (Indicator i : kCanonicalOrder) {
    std::vector<DetectionBox> p, t;
    for (const auto& b : predictions) if (b.indicator == i) p.push_back(b);
    for (const auto& b : truths) if (b.indicator == i) t.push_back(b);
    DetectionClassRow& row = report.rows[Index(i)];
    row.ap50 = AveragePrecision(p, t, iou_threshold);
    aps[Index(i)] = row.ap50;
    double best_f1 = -1.0;
    for (const PrPoint& pt : row.ap50.curve) {
      double f1 = F1Score(pt.precision, pt.recall);
      if (f1 > best_f1) {
        best_f1 = f1;
        row.precision = pt.precision;
        row.recall = pt.recall;
        row.f1 = f1;
      }
    }
  }
  report.map50 = Map50(aps);
  return report;
}

std::vector<DetectionBox> TruthBoxes(std::span<const Annotation> annotations) {
  std::vector<DetectionBox> out;
  out.reserve(annotations.size());
  for (const Annotation& a : annotations) {
    out.push_back({a.image_id, a.indicator, a.bbox, 1.0});
  }
  return out;
}

std::vector<DetectionBox> PredictionsFromCsv(std::string_view text) {
  auto rows = ParseCsv(text);
  if (rows.empty()) throw ParseError("prediction CSV is empty");
  const CsvRow& h = rows.front();
  std::size_t c_id = ColumnIndex(h, "image_id");
  std::size_t c_ind = ColumnIndex(h, "indicator");
  std::size_t c_x0 = ColumnIndex(h, "xmin"), c_y0 = ColumnIndex(h, "ymin");
  std::size_t c_x1 = ColumnIndex(h, "xmax"), c_y1 = ColumnIndex(h, "ymax");
  std::size_t c_conf = ColumnIndex(h, "confidence");
  std::vector<DetectionBox> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.size() != h.size()) {
      throw ParseError("prediction CSV row " + std::to_string(r) +
                       " has the wrong column count");
    }
    auto ind = FromCode(row[c_ind]);
    if (!ind) throw ParseError("unknown indicator code '" + row[c_ind] + "'");
    DetectionBox b;
    b.image_id = row[c_id];
    b.indicator = *ind;
    try {
      b.bbox = {std::stod(row[c_x0]), std::stod(row[c_y0]),
                std::stod(row[c_x1]), std::stod(row[c_y1])};
      b.confidence = std::stod(row[c_conf]);
    } catch (const std::logic_error&) {
      throw ParseError("prediction CSV row " + std::to_string(r) +
                       " has a non-numeric field");
    }
    if (!b.bbox.valid()) {
      throw ParseError("prediction CSV row " + std::to_string(r) +
                       " is not a valid box");
    }
    if (!(b.confidence >= 0.0 && b.confidence <= 1.0)) {
      throw ParseError("prediction CSV row " + std::to_string(r) +
                       " has confidence outside [0, 1]");
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::string PredictionsToCsv(std::span<const DetectionBox> boxes) {
  std::string out = CsvLine(
      {"image_id", "indicator", "xmin", "ymin", "xmax", "ymax", "confidence"});
  for (const DetectionBox& b : boxes) {
    out += CsvLine({b.image_id, std::string(Code(b.indicator)),
                    FormatShort(b.bbox.xmin), FormatShort(b.bbox.ymin),
                    FormatShort(b.bbox.xmax), FormatShort(b.bbox.ymax),
                    FormatShort(b.confidence)});
  }
  return out;
}

MetricsReport BuildReport(std::string series, const ConfusionTable& counts) {
  MetricsReport report;
  report.series = std::move(series);
  double sp = 0, sr = 0, sf = 0, sa = 0;
  int np = 0, nr = 0, nf = 0, na = 0;
  for (Indicator i : kCanonicalOrder) {
    MetricsRow& row = report.rows[Index(i)];
    row.indicator = i;
    row.counts = counts[Index(i)];
    if (row.counts.total() == 0) {
      row.metrics.precision_undefined = true;
      row.metrics.recall_undefined = true;
      row.metrics.f1_undefined = true;
      continue;
    }
    row.metrics = Derive(row.counts);
    if (!row.metrics.precision_undefined) { sp += row.metrics.precision; ++np; }
    if (!row.metrics.recall_undefined) { sr += row.metrics.recall; ++nr; }
    if (!row.metrics.f1_undefined) { sf += row.metrics.f1; ++nf; }
    sa += row.metrics.accuracy;
    ++na;
  }
  report.macro_precision = np ? sp / np : 0.0;
  report.macro_recall = nr ? sr / nr : 0.0;
  report.macro_f1 = nf ? sf / nf : 0.0;
  report.macro_accuracy = na ? sa / na : 0.0;
  return report;
}

std::string ReportMarkdown(const MetricsReport& report, int decimals) {
  std::string out = "| Label | Precision | Recall | F1 | Accuracy |\n";
  out += "|---|---|---|---|---|\n";
  for (const MetricsRow& row : report.rows) {
    const DerivedMetrics& m = row.metrics;
    bool empty = row.counts.total() == 0;
    out += "| " + std::string(DisplayName(row.indicator)) + " | " +
           Cell(m.precision, m.precision_undefined, decimals) + " | " +
           Cell(m.recall, m.recall_undefined, decimals) + " | " +
           Cell(m.f1, m.f1_undefined, decimals) + " | " +
           Cell(m.accuracy, empty, decimals) + " |\n";
  }
  out += "| Average | " + FormatFixed(report.macro_precision, decimals) +
         " | " + FormatFixed(report.macro_recall, decimals) + " | " +
         FormatFixed(report.macro_f1, decimals) + " | " +
         FormatFixed(report.macro_accuracy, decimals) + " |\n";
  return out;
}

std::string DetectionMarkdown(const DetectionReport& report, int decimals) {
  std::string out = "| Label | Precision | Recall | F1 | mAP50 |\n";
  out += "|---|---|---|---|---|\n";
  double sp = 0, sr = 0, sf = 0;
  int n = 0;
  for (Indicator i : kCanonicalOrder) {
    const DetectionClassRow& row = report.rows[Index(i)];
    bool undefined = row.ap50.undefined;
    out += "| " + std::string(DisplayName(i)) + " | " +
           Cell(row.precision, undefined, decimals) + " | " +
           Cell(row.recall, undefined, decimals) + " | " +
           Cell(row.f1, undefined, decimals) + " | " +
           Cell(row.ap50.ap, undefined, decimals) + " |\n";
    if (!undefined) {
      sp += row.precision;
      sr += row.recall;
      sf += row.f1;
      ++n;
    }
  }
  out += "| Average | " + FormatFixed(n ? sp / n : 0.0, decimals) + " | " +
         FormatFixed(n ? sr / n : 0.0, decimals) + " | " +
         FormatFixed(n ? sf / n : 0.0, decimals) + " | " +
         FormatFixed(report.map50, decimals) + " |\n";
  return out;
}

std::string ConfusionCsvHeader() {
  return CsvLine({"series", "indicator", "tp", "fp", "fn", "tn"});
}

std::string ConfusionCsvRows(const MetricsReport& report) {
  std::string out;
  for (const MetricsRow& row : report.rows) {
    out += CsvLine({report.series, std::string(Code(row.indicator)),
                    std::to_string(row.counts.tp), std::to_string(row.counts.fp),
                    std::to_string(row.counts.fn),
                    std::to_string(row.counts.tn)});
  }
  return out;
}

std::string MetricsCsvHeader() {
  return CsvLine(
      {"series", "indicator", "precision", "recall", "f1", "accuracy"});
}

std::string MetricsCsvRows(const MetricsReport& report) {
  std::string out;
  for (const MetricsRow& row : report.rows) {
    const DerivedMetrics& m = row.metrics;
    bool empty = row.counts.total() == 0;
    out += CsvLine({report.series, std::string(Code(row.indicator)),
                    Cell(m.precision, m.precision_undefined, 6),
                    Cell(m.recall, m.recall_undefined, 6),
                    Cell(m.f1, m.f1_undefined, 6), Cell(m.accuracy, empty, 6)});
  }
  out += CsvLine({report.series, "AVG", FormatFixed(report.macro_precision, 6),
                  FormatFixed(report.macro_recall, 6),
                  FormatFixed(report.macro_f1, 6),
                  FormatFixed(report.macro_accuracy, 6)});
  return out;
}

std::string DetectionCsv(const DetectionReport& report) {
  std::string out = CsvLine({"indicator", "precision", "recall", "f1", "ap50",
                             "num_truths", "num_predictions"});
  for (Indicator i : kCanonicalOrder) {
    const DetectionClassRow& row = report.rows[Index(i)];
    bool u = row.ap50.undefined;
    out += CsvLine({std::string(Code(i)), Cell(row.precision, u, 6),
                    Cell(row.recall, u, 6), Cell(row.f1, u, 6),
                    Cell(row.ap50.ap, u, 6),
                    std::to_string(row.ap50.num_truths),
                    std::to_string(row.ap50.num_predictions)});
  }
  out += CsvLine({"mAP50", "", "", "", FormatFixed(report.map50, 6), "", ""});
  return out;
}

}  // namespace nbhd
