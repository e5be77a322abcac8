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

#include "nbhd/noise_aug.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "nbhd/errors.h"

namespace nbhd {

namespace {

void CheckSpec(const Image& image, const NoiseSpec& spec) {
  if (image.empty()) throw ConfigError("cannot add noise to an empty image");
  if (!(spec.snr_db >= 0.0 && spec.snr_db <= kMaxSnrDb)) {
    throw ConfigError("SNR must lie in [0, 60] dB");
  }
}

}  // namespace

double SignalPower(const Image& image) {
  if (image.empty()) return 0.0;
  double sum = 0.0;
  for (std::uint8_t v : image.rgb) {
    double x = v / 255.0;
    sum += x * x;
  }
  return sum / static_cast<double>(image.rgb.size());
}

std::vector<double> NoiseField(const Image& image, const NoiseSpec& spec) {
  CheckSpec(image, spec);
  double noise_power = SignalPower(image) / std::pow(10.0, spec.snr_db / 10.0);
  std::vector<double> noise(image.rgb.size(), 0.0);
  if (noise_power <= 0.0) return noise;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(noise_power));
  for (double& n : noise) n = gauss(rng);
  return noise;
}

std::vector<double> NoisySamples(const Image& image, const NoiseSpec& spec) {
  std::vector<double> noise = NoiseField(image, spec);
  std::vector<double> out(noise.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double y = image.rgb[i] / 255.0 + noise[i];
    out[i] = spec.clamp ? std::clamp(y, 0.0, 1.0) : y;
  }
  return out;
}

double RealizedSnrDb(const Image& image, const std::vector<double>& noise) {
  double np = 0.0;
  for (double n : noise) np += n * n;
  np /= static_cast<double>(noise.size());
  return 10.0 * std::log10(SignalPower(image) / np);
}

ImageRecord AddGaussianNoise(const ImageRecord& image, const NoiseSpec& spec) {
  std::vector<double> samples = NoisySamples(image.pixels, spec);
  Image out(image.pixels.width, image.pixels.height);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double v = std::round(samples[i] * 255.0);
    out.rgb[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return MakeRecord(std::move(out), image.name, image.source, image.request);
}

Image Rotate(const Image& image, int degrees) {
  if (degrees != 90 && degrees != 180 && degrees != 270) {
    throw InvalidAngle("rotation must be 90, 180 or 270 degrees, got " +
                       std::to_string(degrees));
  }
  const int w = image.width, h = image.height;
  Image out = degrees == 180 ? Image(w, h) : Image(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int nx, ny;
      switch (degrees) {
        case 90: nx = h - 1 - y; ny = x; break;
        case 180: nx = w - 1 - x; ny = h - 1 - y; break;
        default: nx = y; ny = w - 1 - x; break;
      }
      for (int c = 0; c < 3; ++c) out.at(nx, ny, c) = image.at(x, y, c);
    }
  }
  return out;
}

ImageRecord Rotate(const ImageRecord& image, int degrees) {
  return MakeRecord(Rotate(image.pixels, degrees), image.name, image.source,
                    image.request);
}

CropResult RandomCrop(const ImageRecord& image, const BBox& object,
                      double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("crop fraction must lie in (0, 1]");
  }
  const Image& src = image.pixels;
  if (!object.valid() || object.xmin < 0 || object.ymin < 0 ||
      object.xmax > src.width || object.ymax > src.height) {
    throw DegenerateBox("object box is empty or outside the image");
  }
  const int bx0 = static_cast<int>(std::floor(object.xmin));
  const int by0 = static_cast<int>(std::floor(object.ymin));
  const int bx1 = static_cast<int>(std::ceil(object.xmax));
  const int by1 = static_cast<int>(std::ceil(object.ymax));
  const int bw = bx1 - bx0, bh = by1 - by0;

  const double scale = std::sqrt(fraction);
  const int cw = std::clamp(static_cast<int>(std::lround(bw * scale)), 1, bw);
  const int ch = std::clamp(static_cast<int>(std::lround(bh * scale)), 1, bh);

  std::mt19937_64 rng(seed);
  const int ox = std::uniform_int_distribution<int>(bx0, bx1 - cw)(rng);
  const int oy = std::uniform_int_distribution<int>(by0, by1 - ch)(rng);

  Image out(cw, ch);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = src.at(ox + x, oy + y, c);
    }
  }
  CropResult r;
  r.window = {double(ox), double(oy), double(ox + cw), double(oy + ch)};
  // The window lies inside the box, so the object covers the whole crop.
  BBox rel{std::max(object.xmin, r.window.xmin) - ox,
           std::max(object.ymin, r.window.ymin) - oy,
           std::min(object.xmax, r.window.xmax) - ox,
           std::min(object.ymax, r.window.ymax) - oy};
  r.bbox = rel;
  r.image = MakeRecord(std::move(out), image.name, image.source, image.request);
  return r;
}

}  // namespace nbhd
