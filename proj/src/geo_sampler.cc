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

#include "nbhd/geo_sampler.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "nbhd/errors.h"
#include "nbhd/util.h"

namespace nbhd {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Vec3 {
  double x, y, z;
};

Vec3 ToUnit(LatLon p) {
  double lat = p.lat * kDegToRad;
  double lon = p.lon * kDegToRad;
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
          std::sin(lat)};
}

LatLon FromUnit(Vec3 v) {
  double lat = std::atan2(v.z, std::hypot(v.x, v.y));
  double lon = std::atan2(v.y, v.x);
  return {lat / kDegToRad, lon / kDegToRad};
}

void Validate(const RoadPolyline& road) {
  if (road.vertices.size() < 2) {
    throw InvalidGeometry("road '" + road.id + "' has fewer than 2 vertices");
  }
  for (const LatLon& v : road.vertices) {
    if (!(v.lat >= -90.0 && v.lat <= 90.0) ||
        !(v.lon >= -180.0 && v.lon <= 180.0)) {
      throw InvalidGeometry("road '" + road.id +
                            "' has a coordinate out of range");
    }
  }
}

}  // namespace

std::string FormatCoordinate(double degrees) { return FormatFixed(degrees, 7); }

std::string ImageRequest::Key() const {
  return FormatCoordinate(sample.position.lat) + "," +
         FormatCoordinate(sample.position.lon) + ",h" +
         std::to_string(heading_deg) + "," + std::to_string(width_px) + "x" +
         std::to_string(height_px);
}

std::string ImageRequest::Name() const {
  return sample.road_id + "_" + std::to_string(sample.index) + "_h" +
         std::to_string(heading_deg);
}

double GeodesicDistance(LatLon a, LatLon b) {
  double phi1 = a.lat * kDegToRad;
  double phi2 = b.lat * kDegToRad;
  double dphi = phi2 - phi1;
  double dlambda = (b.lon - a.lon) * kDegToRad;
  double s1 = std::sin(dphi / 2.0);
  double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

LatLon Interpolate(LatLon a, LatLon b, double fraction) {
  if (fraction <= 0.0) return a;
  if (fraction >= 1.0) return b;
  double delta = GeodesicDistance(a, b) / kEarthRadiusM;
  if (delta < 1e-15) return a;
  Vec3 u = ToUnit(a);
  Vec3 v = ToUnit(b);
  double sd = std::sin(delta);
  double wa = std::sin((1.0 - fraction) * delta) / sd;
  double wb = std::sin(fraction * delta) / sd;
  return FromUnit(
      {wa * u.x + wb * v.x, wa * u.y + wb * v.y, wa * u.z + wb * v.z});
}

double PolylineLength(const RoadPolyline& road) {
  double total = 0.0;
  for (std::size_t i = 1; i < road.vertices.size(); ++i) {
    total += GeodesicDistance(road.vertices[i - 1], road.vertices[i]);
  }
  return total;
}

std::vector<SamplePoint> SamplePolyline(const RoadPolyline& road,
                                        double interval_m) {
  if (!(interval_m > 0.0)) throw InvalidGeometry("interval must be positive");
  Validate(road);

  std::vector<double> cumulative(road.vertices.size(), 0.0);
  for (std::size_t i = 1; i < road.vertices.size(); ++i) {
    cumulative[i] = cumulative[i - 1] +
                    GeodesicDistance(road.vertices[i - 1], road.vertices[i]);
  }
  const double total = cumulative.back();
  if (total <= 0.0) {
    throw DegeneratePolyline("road '" + road.id + "' has zero length");
  }

  // A relative epsilon keeps an endpoint that lies on a multiple of d.
  const auto count =
      static_cast<std::size_t>(std::floor(total / interval_m + 1e-9)) + 1;
  std::vector<SamplePoint> points;
  points.reserve(count);
  std::size_t seg = 1;
  for (std::size_t k = 0; k < count; ++k) {
    double s = static_cast<double>(k) * interval_m;
    while (seg + 1 < cumulative.size() && cumulative[seg] < s) ++seg;
    double seg_len = cumulative[seg] - cumulative[seg - 1];
    double f = seg_len > 0.0 ? (s - cumulative[seg - 1]) / seg_len : 0.0;
    points.push_back(SamplePoint{
        road.id, static_cast<int>(k),
        Interpolate(road.vertices[seg - 1], road.vertices[seg],
                    std::clamp(f, 0.0, 1.0)),
        s});
  }
  return points;
}

std::vector<ImageRequest> ExpandHeadings(std::span<const SamplePoint> points) {
  std::vector<ImageRequest> out;
  out.reserve(points.size() * kHeadings.size());
  for (const SamplePoint& p : points) {
    for (int h : kHeadings) out.push_back(ImageRequest{p, h});
  }
  return out;
}

std::vector<RoadPolyline> ParseRoadsGeoJson(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid GeoJSON: ") + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    throw ParseError("expected a GeoJSON FeatureCollection");
  }
  std::vector<RoadPolyline> roads;
  for (const auto& feature : doc["features"]) {
    const auto& geom = feature.value("geometry", nlohmann::json::object());
    if (geom.value("type", "") != "LineString") {
      throw ParseError("only LineString features are supported");
    }
    const auto& props = feature.value("properties", nlohmann::json::object());
    if (!props.contains("id")) {
      throw ParseError("feature is missing the 'id' property");
    }
    RoadPolyline road;
    road.id = props["id"].is_string() ? props["id"].get<std::string>()
                                      : props["id"].dump();
    for (const auto& c : geom.at("coordinates")) {
      if (!c.is_array() || c.size() < 2) {
        throw ParseError("malformed coordinate in road '" + road.id + "'");
      }
      // GeoJSON positions are [longitude, latitude].
      road.vertices.push_back({c[1].get<double>(), c[0].get<double>()});
    }
    roads.push_back(std::move(road));
  }
  return roads;
}

std::vector<RoadPolyline> ReadRoadsGeoJson(const std::filesystem::path& path) {
  return ParseRoadsGeoJson(ReadFile(path));
}

std::string RequestsToCsv(std::span<const ImageRequest> requests) {
  std::string out =
      CsvLine({"road_id", "index", "lat", "lon", "heading", "width", "height"});
  for (const ImageRequest& r : requests) {
    out += CsvLine({r.sample.road_id, std::to_string(r.sample.index),
                    FormatCoordinate(r.sample.position.lat),
                    FormatCoordinate(r.sample.position.lon),
                    std::to_string(r.heading_deg), std::to_string(r.width_px),
                    std::to_string(r.height_px)});
  }
  return out;
}

std::vector<ImageRequest> RequestsFromCsv(std::string_view text) {
  auto rows = ParseCsv(text);
  if (rows.empty()) return {};
  const CsvRow& header = rows.front();
  const std::size_t c_road = ColumnIndex(header, "road_id");
  const std::size_t c_index = ColumnIndex(header, "index");
  const std::size_t c_lat = ColumnIndex(header, "lat");
  const std::size_t c_lon = ColumnIndex(header, "lon");
  const std::size_t c_heading = ColumnIndex(header, "heading");
  const std::size_t c_width = ColumnIndex(header, "width");
  const std::size_t c_height = ColumnIndex(header, "height");
  std::vector<ImageRequest> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    if (row.size() != header.size()) {
      throw ParseError("request CSV row " + std::to_string(i) +
                       " has the wrong column count");
    }
    try {
      ImageRequest r;
      r.sample.road_id = row[c_road];
      r.sample.index = std::stoi(row[c_index]);
      r.sample.position = {std::stod(row[c_lat]), std::stod(row[c_lon])};
      r.heading_deg = std::stoi(row[c_heading]);
      r.width_px = std::stoi(row[c_width]);
      r.height_px = std::stoi(row[c_height]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ParseError("request CSV row " + std::to_string(i) +
                       " has a non-numeric field");
    }
  }
  return out;
}

}  // namespace nbhd
