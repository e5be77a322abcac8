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

#ifndef NBHD_GEO_SAMPLER_H_
#define NBHD_GEO_SAMPLER_H_

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nbhd {

// Mean Earth radius (IUGG), meters.
inline constexpr double kEarthRadiusM = 6371008.8;
// Fifty feet.
inline constexpr double kDefaultIntervalM = 15.24;
inline constexpr int kImageSizePx = 640;
inline constexpr std::array<int, 4> kHeadings = {0, 90, 180, 270};

struct LatLon {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
  bool operator==(const LatLon&) const = default;
};

struct RoadPolyline {
  std::string id;
  std::vector<LatLon> vertices;
};

struct SamplePoint {
  std::string road_id;
  int index = 0;
  LatLon position;
  double arclength_m = 0.0;
};

struct ImageRequest {
  SamplePoint sample;
  int heading_deg = 0;
  int width_px = kImageSizePx;
  int height_px = kImageSizePx;

  // Stable identifier of the request, built from 7-decimal coordinates.
  std::string Key() const;
  // Human-readable name, "<road>_<index>_h<heading>".
  std::string Name() const;
};

// Great-circle (haversine) distance in meters.
double GeodesicDistance(LatLon a, LatLon b);

// Point at `fraction` of the great-circle arc from a to b.
LatLon Interpolate(LatLon a, LatLon b, double fraction);

double PolylineLength(const RoadPolyline& road);

// Points at arclength 0, d, 2d, ... <= L along the road. Throws
// InvalidGeometry for out-of-range coordinates or fewer than two vertices and
// DegeneratePolyline when the total length is zero.
std::vector<SamplePoint> SamplePolyline(const RoadPolyline& road,
                                        double interval_m = kDefaultIntervalM);

// Four requests per point (headings 0, 90, 180, 270), point order preserved.
std::vector<ImageRequest> ExpandHeadings(std::span<const SamplePoint> points);

// Coordinates are written with 7 decimals.
std::string FormatCoordinate(double degrees);

// GeoJSON FeatureCollection of LineString features with an `id` property.
std::vector<RoadPolyline> ParseRoadsGeoJson(std::string_view text);
std::vector<RoadPolyline> ReadRoadsGeoJson(const std::filesystem::path& path);

// CSV with header road_id,index,lat,lon,heading,width,height.
std::string RequestsToCsv(std::span<const ImageRequest> requests);
std::vector<ImageRequest> RequestsFromCsv(std::string_view text);

}  // namespace nbhd

#endif  // NBHD_GEO_SAMPLER_H_
