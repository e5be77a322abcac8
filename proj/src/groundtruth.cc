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

#include "nbhd/groundtruth.h"

#include <algorithm>
#include <cctype>
#include <future>
#include <thread>

#include "json.hpp"
#include "nbhd/errors.h"
#include "nbhd/util.h"

namespace nbhd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string NormalizeLabel(std::string_view label) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : Trim(label)) {
    if (std::isspace(c) || c == '_') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

double ParseNumber(const std::string& cell, const char* what) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError(std::string("bad ") + what + " value '" + cell + "'");
  }
}

bool ParseFlag(const std::string& cell) {
  std::string c = Trim(cell);
  if (c == "1" || c == "true" || c == "T") return true;
  if (c == "0" || c == "false" || c == "F") return false;
  throw ParseError("bad presence cell '" + cell + "'");
}

}  // namespace

LabelAliases LabelAliases::Defaults() {
  LabelAliases a;
  for (Indicator i : kCanonicalOrder) {
    a.Add(Code(i), i);
    a.Add(DisplayName(i), i);
  }
  a.Add("street light", Indicator::kStreetlight);
  a.Add("street-light", Indicator::kStreetlight);
  a.Add("streetlamp", Indicator::kStreetlight);
  a.Add("single lane road", Indicator::kSingleLaneRoad);
  a.Add("single-lane", Indicator::kSingleLaneRoad);
  a.Add("multi-lane road", Indicator::kMultilaneRoad);
  a.Add("multi lane road", Indicator::kMultilaneRoad);
  a.Add("multilane", Indicator::kMultilaneRoad);
  a.Add("power line", Indicator::kPowerline);
  a.Add("power-line", Indicator::kPowerline);
  a.Add("apartments", Indicator::kApartment);
  return a;
}

LabelAliases LabelAliases::FromJson(std::string_view text) {
  LabelAliases a = Defaults();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid alias JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("alias file must be a JSON object");
  for (const auto& [label, target] : j.items()) {
    if (!target.is_string()) throw ParseError("alias target must be a code");
    auto ind = FromCode(target.get<std::string>());
    if (!ind) {
      throw ParseError("alias '" + label + "' targets unknown indicator '" +
                       target.get<std::string>() + "'");
    }
    a.Add(label, *ind);
  }
  return a;
}

void LabelAliases::Add(std::string_view label, Indicator indicator) {
  table_[NormalizeLabel(label)] = indicator;
}

std::optional<Indicator> LabelAliases::Resolve(std::string_view label) const {
  auto it = table_.find(NormalizeLabel(label));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

namespace {

// Twice the signed area; zero for collinear outlines.
double ShoelaceArea2(std::span<const Point2> polygon) {
  double sum = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point2& a = polygon[i];
    const Point2& b = polygon[(i + 1) % polygon.size()];
    sum += a.x * b.y - b.x * a.y;
  }
  return sum;
}

}  // namespace

BBox Envelope(std::span<const Point2> polygon, int width, int height) {
  BBox b{polygon[0].x, polygon[0].y, polygon[0].x, polygon[0].y};
  for (const Point2& p : polygon) {
    b.xmin = std::min(b.xmin, p.x);
    b.ymin = std::min(b.ymin, p.y);
    b.xmax = std::max(b.xmax, p.x);
    b.ymax = std::max(b.ymax, p.y);
  }
  if (width > 0) {
    b.xmin = std::clamp(b.xmin, 0.0, double(width));
    b.xmax = std::clamp(b.xmax, 0.0, double(width));
  }
  if (height > 0) {
    b.ymin = std::clamp(b.ymin, 0.0, double(height));
    b.ymax = std::clamp(b.ymax, 0.0, double(height));
  }
  return b;
}

LabelmeFile ParseLabelme(std::string_view json_text,
                         const LabelAliases& aliases,
                         std::string_view fallback_image_id) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid LabelMe JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("shapes") ||
      !doc["shapes"].is_array()) {
    throw ParseError("LabelMe JSON has no shapes[] array");
  }

  LabelmeFile out;
  std::string image_path = doc.value("imagePath", "");
  out.image_id = image_path.empty()
                     ? std::string(fallback_image_id)
                     : fs::path(image_path).stem().string();
  out.image_width = doc.value("imageWidth", 0);
  out.image_height = doc.value("imageHeight", 0);

  for (const auto& shape : doc["shapes"]) {
    if (!shape.is_object() || !shape.contains("label") ||
        !shape.contains("points") || !shape["label"].is_string() ||
        !shape["points"].is_array()) {
      throw ParseError("shape lacks a string label or a points array");
    }
    const std::string label = shape["label"].get<std::string>();
    std::vector<Point2> polygon;
    for (const auto& p : shape["points"]) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() ||
          !p[1].is_number()) {
        throw ParseError("malformed point in shape '" + label + "'");
      }
      polygon.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    if (shape.value("shape_type", "") == "rectangle" && polygon.size() == 2) {
      Point2 a = polygon[0], c = polygon[1];
      polygon = {a, {c.x, a.y}, c, {a.x, c.y}};
    }
    auto indicator = aliases.Resolve(label);
    if (!indicator) {
      out.rejects.push_back(label);
      continue;
    }
    if (polygon.size() < 3) {
      throw EmptyPolygon("shape '" + label + "' has " +
                         std::to_string(polygon.size()) + " points");
    }
    BBox box = Envelope(polygon, out.image_width, out.image_height);
    if (!box.valid() || ShoelaceArea2(polygon) == 0.0) {
      throw EmptyPolygon("shape '" + label + "' encloses no area");
    }
    out.annotations.push_back(
        Annotation{out.image_id, *indicator, std::move(polygon), box});
  }
  return out;
}

LabelmeFile ReadLabelme(const fs::path& file, const LabelAliases& aliases) {
  return ParseLabelme(ReadFile(file), aliases, file.stem().string());
}

std::string SerializeLabelme(const LabelmeFile& file) {
  json shapes = json::array();
  for (const Annotation& a : file.annotations) {
    json points = json::array();
    for (const Point2& p : a.polygon) points.push_back({p.x, p.y});
    shapes.push_back({{"label", std::string(Code(a.indicator))},
                      {"points", points},
                      {"shape_type", "polygon"}});
  }
  json doc{{"version", "5.0.1"},
           {"flags", json::object()},
           {"shapes", shapes},
           {"imagePath", file.image_id + ".png"},
           {"imageData", nullptr}};
  if (file.image_width > 0) doc["imageWidth"] = file.image_width;
  if (file.image_height > 0) doc["imageHeight"] = file.image_height;
  return doc.dump(2) + "\n";
}

GroundTruthCorpus IngestDirectory(const fs::path& dir,
                                  const LabelAliases& aliases) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError("cannot read annotation directory " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  // Parsed in bounded batches; merged in path order.
  const std::size_t batch =
      std::max(1u, std::thread::hardware_concurrency());
  GroundTruthCorpus corpus;
  for (std::size_t lo = 0; lo < files.size(); lo += batch) {
    std::vector<std::future<LabelmeFile>> parsed;
    for (std::size_t i = lo; i < std::min(files.size(), lo + batch); ++i) {
      parsed.push_back(std::async(std::launch::async, [&aliases, &files, i] {
        return ReadLabelme(files[i], aliases);
      }));
    }
    for (auto& fut : parsed) {
      LabelmeFile file = fut.get();
      for (const Annotation& a : file.annotations) {
        ++corpus.annotation_totals[Index(a.indicator)];
      }
      corpus.reject_count += file.rejects.size();
      corpus.files.push_back(std::move(file));
    }
  }
  return corpus;
}

PresenceMap ToPresence(std::span<const Annotation> annotations,
                       const std::set<std::string>& manifest) {
  PresenceMap out;
  for (const std::string& id : manifest) out[id];
  for (const Annotation& a : annotations) {
    if (!manifest.empty() && !manifest.contains(a.image_id)) continue;
    out[a.image_id].Set(a.indicator, true);
  }
  return out;
}

std::vector<Annotation> AllAnnotations(const GroundTruthCorpus& corpus) {
  std::vector<Annotation> out;
  for (const LabelmeFile& f : corpus.files) {
    out.insert(out.end(), f.annotations.begin(), f.annotations.end());
  }
  return out;
}

std::set<std::string> ParseManifest(std::string_view text) {
  std::set<std::string> out;
  for (const std::string& line : Split(text, '\n')) {
    std::string id = Trim(line.substr(0, line.find('#')));
    if (!id.empty()) out.insert(id);
  }
  return out;
}

std::vector<std::string> ReadManifestOrdered(const fs::path& p) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const std::string& line : Split(ReadFile(p), '\n')) {
    std::string id = Trim(line.substr(0, line.find('#')));
    if (!id.empty() && seen.insert(id).second) out.push_back(id);
  }
  return out;
}

std::string PresenceToCsv(const PresenceMap& presence) {
  CsvRow header{"image_id"};
  for (Indicator i : kCanonicalOrder) header.emplace_back(Code(i));
  std::string out = CsvLine(header);
  for (const auto& [id, v] : presence) {
    CsvRow row{id};
    for (Indicator i : kCanonicalOrder) row.push_back(v[i] ? "1" : "0");
    out += CsvLine(row);
  }
  return out;
}

PresenceMap PresenceFromCsv(std::string_view text) {
  auto rows = ParseCsv(text);
  if (rows.empty()) throw ParseError("ground-truth CSV is empty");
  const CsvRow& header = rows.front();
  std::size_t c_id = ColumnIndex(header, "image_id");
  std::array<std::size_t, kNumIndicators> cols{};
  for (Indicator i : kCanonicalOrder) cols[Index(i)] = ColumnIndex(header, Code(i));
  PresenceMap out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw ParseError("ground-truth CSV row " + std::to_string(r) +
                       " has the wrong column count");
    }
    IndicatorVector v;
    for (Indicator i : kCanonicalOrder) v.Set(i, ParseFlag(rows[r][cols[Index(i)]]));
    out[rows[r][c_id]] = v;
  }
  return out;
}

std::string BoxesToCsv(std::span<const Annotation> annotations) {
  std::string out =
      CsvLine({"image_id", "indicator", "xmin", "ymin", "xmax", "ymax"});
  for (const Annotation& a : annotations) {
    out += CsvLine({a.image_id, std::string(Code(a.indicator)),
                    FormatShort(a.bbox.xmin), FormatShort(a.bbox.ymin),
                    FormatShort(a.bbox.xmax), FormatShort(a.bbox.ymax)});
  }
  return out;
}

std::vector<Annotation> BoxesFromCsv(std::string_view text) {
  auto rows = ParseCsv(text);
  if (rows.empty()) throw ParseError("box CSV is empty");
  const CsvRow& h = rows.front();
  std::size_t c_id = ColumnIndex(h, "image_id");
  std::size_t c_ind = ColumnIndex(h, "indicator");
  std::size_t c_x0 = ColumnIndex(h, "xmin"), c_y0 = ColumnIndex(h, "ymin");
  std::size_t c_x1 = ColumnIndex(h, "xmax"), c_y1 = ColumnIndex(h, "ymax");
  std::vector<Annotation> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.size() != h.size()) {
      throw ParseError("box CSV row " + std::to_string(r) +
                       " has the wrong column count");
    }
    auto ind = FromCode(row[c_ind]);
    if (!ind) throw ParseError("unknown indicator code '" + row[c_ind] + "'");
    BBox b{ParseNumber(row[c_x0], "xmin"), ParseNumber(row[c_y0], "ymin"),
           ParseNumber(row[c_x1], "xmax"), ParseNumber(row[c_y1], "ymax")};
    if (!b.valid()) throw ParseError("box CSV row " + std::to_string(r) +
                                     " is not a valid box");
    out.push_back(Annotation{row[c_id], *ind,
                             {{b.xmin, b.ymin}, {b.xmax, b.ymin},
                              {b.xmax, b.ymax}, {b.xmin, b.ymax}},
                             b});
  }
  return out;
}

}  // namespace nbhd
