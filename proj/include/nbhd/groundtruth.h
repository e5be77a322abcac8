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

#ifndef NBHD_GROUNDTRUTH_H_
#define NBHD_GROUNDTRUTH_H_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbhd/indicator.h"

namespace nbhd {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

// Axis-aligned box in pixels, xmin < xmax and ymin < ymax.
struct BBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool valid() const { return xmin < xmax && ymin < ymax; }
  bool operator==(const BBox&) const = default;
};

struct Annotation {
  std::string image_id;
  Indicator indicator = Indicator::kStreetlight;
  std::vector<Point2> polygon;
  BBox bbox;
  bool operator==(const Annotation&) const = default;
};

// Case-insensitive label -> indicator mapping.
class LabelAliases {
 public:
  LabelAliases() = default;
  // Codes, display names and common spellings ("street light", ...).
  static LabelAliases Defaults();
  // JSON object {"label": "SL", ...}; merged over the defaults.
  static LabelAliases FromJson(std::string_view text);

  void Add(std::string_view label, Indicator indicator);
  std::optional<Indicator> Resolve(std::string_view label) const;

 private:
  std::map<std::string, Indicator> table_;
};

struct LabelmeFile {
  std::string image_id;  // stem of imagePath, else of the JSON file name
  int image_width = 0;   // 0 when the file omits the size
  int image_height = 0;
  std::vector<Annotation> annotations;
  std::vector<std::string> rejects;  // labels that did not resolve
};

// Polygon envelope, clamped to [0, width] x [0, height] when the size is known.
BBox Envelope(std::span<const Point2> polygon, int width = 0, int height = 0);

// Throws ParseError on malformed JSON or EmptyPolygon on shapes with fewer
// than three vertices or zero area (two-point rectangle shapes are expanded
// first).
LabelmeFile ParseLabelme(std::string_view json_text,
                         const LabelAliases& aliases,
                         std::string_view fallback_image_id = "");
LabelmeFile ReadLabelme(const std::filesystem::path& file,
                        const LabelAliases& aliases);
std::string SerializeLabelme(const LabelmeFile& file);

struct GroundTruthCorpus {
  std::vector<LabelmeFile> files;  // sorted by path
  std::array<int, kNumIndicators> annotation_totals{};  // canonical order
  std::size_t reject_count = 0;
};

// Parses every *.json in `dir` in parallel; the merge is in filename order.
GroundTruthCorpus IngestDirectory(const std::filesystem::path& dir,
                                  const LabelAliases& aliases);

using PresenceMap = std::map<std::string, IndicatorVector>;

// presence[i] is true iff at least one annotation of i exists on the image.
// Manifest images without annotations get an all-false vector; a non-empty
// manifest also drops annotations on images outside it.
PresenceMap ToPresence(std::span<const Annotation> annotations,
                       const std::set<std::string>& manifest = {});

std::vector<Annotation> AllAnnotations(const GroundTruthCorpus& corpus);

// One image id per non-empty line; '#' starts a comment.
std::set<std::string> ParseManifest(std::string_view text);
std::vector<std::string> ReadManifestOrdered(const std::filesystem::path& p);

// image_id,SL,SW,SR,MR,PL,AP with 0/1 cells.
std::string PresenceToCsv(const PresenceMap& presence);
PresenceMap PresenceFromCsv(std::string_view text);

// image_id,indicator,xmin,ymin,xmax,ymax
std::string BoxesToCsv(std::span<const Annotation> annotations);
std::vector<Annotation> BoxesFromCsv(std::string_view text);

}  // namespace nbhd

#endif  // NBHD_GROUNDTRUTH_H_
