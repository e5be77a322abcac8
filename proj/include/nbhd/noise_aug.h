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

#ifndef NBHD_NOISE_AUG_H_
#define NBHD_NOISE_AUG_H_

#include <cstdint>
#include <vector>

#include "nbhd/groundtruth.h"
#include "nbhd/image.h"

namespace nbhd {

struct NoiseSpec {
  double snr_db = 20.0;  // accepted range [0, 60]
  std::uint64_t seed = 0;
  bool clamp = true;
};

inline constexpr double kMaxSnrDb = 60.0;

// Signal power of the image in normalized [0, 1] intensities: mean(x^2).
double SignalPower(const Image& image);

// The i.i.d. N(0, P / 10^(snr/10)) noise for every channel sample, in
// normalized units. Pure function of (image size, signal power, spec).
std::vector<double> NoiseField(const Image& image, const NoiseSpec& spec);

// Normalized noisy samples x + n, clamped to [0, 1] when spec.clamp is set.
std::vector<double> NoisySamples(const Image& image, const NoiseSpec& spec);

// 10 log10(P_signal / mean(n^2)) for a realized noise field.
double RealizedSnrDb(const Image& image, const std::vector<double>& noise);

// Noisy copy quantized back to 8 bits (always saturating at 0 and 255).
// Keeps the record name; the image_id is recomputed. Throws ConfigError for
// snr outside [0, 60] or an empty image.
ImageRecord AddGaussianNoise(const ImageRecord& image, const NoiseSpec& spec);

// Clockwise rotation by 90, 180 or 270 degrees; InvalidAngle otherwise.
Image Rotate(const Image& image, int degrees);
ImageRecord Rotate(const ImageRecord& image, int degrees);

struct CropResult {
  ImageRecord image;
  BBox window;  // crop window in source pixel coordinates
  BBox bbox;    // object box relative to the crop
};

// Window with the box's aspect ratio and area ~ fraction * box area
// (side = round(side * sqrt(fraction))), placed uniformly inside the box.
// Throws DegenerateBox when the box has no area or leaves the image.
CropResult RandomCrop(const ImageRecord& image, const BBox& object,
                      double fraction = 0.30, std::uint64_t seed = 0);

}  // namespace nbhd

#endif  // NBHD_NOISE_AUG_H_
