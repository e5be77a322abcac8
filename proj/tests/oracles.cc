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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace oracle {

double PixelIou(const Box& a, const Box& b) {
  long inter = 0, ua = 0, ub = 0;
  int x_lo = std::min(a.x0, b.x0), x_hi = std::max(a.x1, b.x1);
  int y_lo = std::min(a.y0, b.y0), y_hi = std::max(a.y1, b.y1);
  for (int y = y_lo; y < y_hi; ++y) {
    for (int x = x_lo; x < x_hi; ++x) {
      bool in_a = x >= a.x0 && x < a.x1 && y >= a.y0 && y < a.y1;
      bool in_b = x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1;
      ua += in_a;
      ub += in_b;
      inter += in_a && in_b;
    }
  }
  long uni = ua + ub - inter;
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

namespace {

double BoxIou(const Box& a, const Box& b) {
  double iw = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  double ih = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  double inter = iw * ih;
  double area_a = double(a.x1 - a.x0) * (a.y1 - a.y0);
  double area_b = double(b.x1 - b.x0) * (b.y1 - b.y0);
  double uni = area_a + area_b - inter;
  return uni <= 0 ? 0.0 : inter / uni;
}

// True-positive count when only predictions at or above `threshold` exist.
// Each kept prediction, highest confidence first, claims the best still
// unclaimed truth on its image; equal IoUs go to the earlier truth.
int TruePositivesAt(const std::vector<Det>& preds,
                    const std::vector<Det>& truths, double iou_min,
                    double threshold) {
  std::vector<const Det*> kept;
  for (const Det& p : preds) {
    if (p.confidence >= threshold) kept.push_back(&p);
  }
  std::sort(kept.begin(), kept.end(), [](const Det* a, const Det* b) {
    return a->confidence > b->confidence;
  });
  std::vector<bool> used(truths.size(), false);
  int tp = 0;
  for (const Det* p : kept) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (used[t] || truths[t].image != p->image) continue;
      double iou = BoxIou(p->box, truths[t].box);
      if (iou >= iou_min && iou > best_iou) {
        best_iou = iou;
        best = int(t);
      }
    }
    if (best >= 0) {
      used[best] = true;
      ++tp;
    }
  }
  return tp;
}

}  // namespace

double ThresholdEnumerationAp(const std::vector<Det>& preds,
                              const std::vector<Det>& truths, double iou_min) {
  if (truths.empty()) return preds.empty() ? std::nan("") : 0.0;
  std::set<double, std::greater<>> thresholds;
  for (const Det& p : preds) thresholds.insert(p.confidence);
  std::vector<double> recall, precision;
  for (double t : thresholds) {
    int kept = 0;
    for (const Det& p : preds) kept += p.confidence >= t;
    int tp = TruePositivesAt(preds, truths, iou_min, t);
    recall.push_back(double(tp) / double(truths.size()));
    precision.push_back(double(tp) / double(kept));
  }
  // Interpolated precision at recall level r is the best precision at any
  // threshold reaching recall >= r; integrate over the recall steps.
  double ap = 0.0, prev_r = 0.0;
  for (std::size_t k = 0; k < recall.size(); ++k) {
    if (recall[k] <= prev_r) continue;
    double best = 0.0;
    for (std::size_t j = 0; j < recall.size(); ++j) {
      if (recall[j] >= recall[k]) best = std::max(best, precision[j]);
    }
    ap += (recall[k] - prev_r) * best;
    prev_r = recall[k];
  }
  return ap;
}

double GreatCircleMeters(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kR = 6371008.8;
  constexpr double kRad = M_PI / 180.0;
  double p1 = lat1 * kRad, p2 = lat2 * kRad;
  double dp = p2 - p1, dl = (lon2 - lon1) * kRad;
  double a = std::sin(dp / 2) * std::sin(dp / 2) +
             std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kR * std::atan2(std::sqrt(a), std::sqrt(1.0 - a));
}

double BinomialMajority(double p, int n) {
  double total = 0.0;
  for (int k = n / 2 + 1; k <= n; ++k) {
    double c = std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) *
                                       std::tgamma(n - k + 1.0));
    total += c * std::pow(p, k) * std::pow(1.0 - p, n - k);
  }
  return total;
}

double HarmonicF1(double precision, double recall) {
  return 1.0 / ((1.0 / precision + 1.0 / recall) / 2.0);
}

Instance RandomInstance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_truth(0, 5), n_pred(0, 8);
  std::uniform_int_distribution<int> image(0, 1), coord(0, 16), extent(2, 8);
  auto box = [&] {
    int x = coord(rng), y = coord(rng);
    return Box{x, y, x + extent(rng), y + extent(rng)};
  };
  Instance inst;
  int nt = n_truth(rng), np = n_pred(rng);
  for (int i = 0; i < nt; ++i) inst.truths.push_back({image(rng), box(), 1.0});
  std::vector<int> ranks(np);
  std::iota(ranks.begin(), ranks.end(), 1);
  std::shuffle(ranks.begin(), ranks.end(), rng);
  for (int i = 0; i < np; ++i) {
    // Predictions sometimes start from a truth box so matches actually occur.
    Box b = box();
    if (!inst.truths.empty() && image(rng) == 0) {
      const Det& t = inst.truths[rng() % inst.truths.size()];
      std::uniform_int_distribution<int> jitter(-1, 1);
      b = {t.box.x0 + jitter(rng), t.box.y0 + jitter(rng),
           t.box.x1 + jitter(rng), t.box.y1 + jitter(rng)};
      if (b.x1 <= b.x0) b.x1 = b.x0 + 1;
      if (b.y1 <= b.y0) b.y1 = b.y0 + 1;
      inst.preds.push_back({t.image, b, ranks[i] / 10.0});
    } else {
      inst.preds.push_back({image(rng), b, ranks[i] / 10.0});
    }
  }
  return inst;
}

}  // namespace oracle
