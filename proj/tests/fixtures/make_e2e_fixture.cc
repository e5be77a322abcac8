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

// Regenerates tests/fixtures/e2e: twenty 64x64 synthetic street scenes,
// one LabelMe file per scene, the derived presence CSV, a manifest and a
// run config wired to three mock providers. Output is deterministic.
//
//   make_e2e_fixture <out_dir>

#include <iostream>

#include "nbhd/groundtruth.h"
#include "nbhd/image.h"
#include "nbhd/util.h"

using namespace nbhd;

namespace {

constexpr int kSize = 64;
constexpr int kImages = 20;
constexpr std::uint64_t kSeed = 20240917;

// Per-indicator prevalence, canonical order.
constexpr double kPrevalence[kNumIndicators] = {0.45, 0.6, 0.5,
                                                0.35, 0.5, 0.3};

struct Glyph {
  int x0, y0, x1, y1;
  std::uint8_t r, g, b;
};

// Where each indicator is drawn when present, canonical order.
constexpr Glyph kGlyphs[kNumIndicators] = {
    {4, 4, 8, 40, 230, 220, 90},     // streetlight: tall pole
    {0, 52, 64, 58, 190, 190, 190},  // sidewalk: pale strip
    {20, 42, 44, 52, 70, 70, 70},    // single-lane road
    {0, 40, 64, 52, 40, 40, 40},     // multilane road
    {10, 10, 60, 12, 20, 20, 20},    // powerline
    {40, 14, 60, 40, 170, 80, 60},   // apartment block
};

void Fill(Image& img, const Glyph& g, int jitter) {
  for (int y = g.y0; y < g.y1; ++y) {
    for (int x = g.x0; x < g.x1; ++x) {
      std::size_t o = (std::size_t(y) * kSize + x) * 3;
      img.rgb[o] = std::uint8_t(std::clamp(g.r + jitter, 0, 255));
      img.rgb[o + 1] = std::uint8_t(std::clamp(g.g + jitter, 0, 255));
      img.rgb[o + 2] = std::uint8_t(std::clamp(g.b + jitter, 0, 255));
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_e2e_fixture <out_dir>\n";
    return 2;
  }
  const std::filesystem::path out = argv[1];
  PresenceMap presence;
  std::array<int, kNumIndicators> positives{};
  std::string manifest;
  for (int i = 0; i < kImages; ++i) {
    char name[16];
    std::snprintf(name, sizeof(name), "scene_%02d", i);
    Image img;
    img.width = img.height = kSize;
    img.rgb.assign(std::size_t(kSize) * kSize * 3, 0);
    for (int y = 0; y < kSize; ++y) {
      for (int x = 0; x < kSize; ++x) {
        std::size_t o = (std::size_t(y) * kSize + x) * 3;
        bool sky = y < 36;
        img.rgb[o] = sky ? 120 : 90;
        img.rgb[o + 1] = sky ? 170 : 120;
        img.rgb[o + 2] = sky ? 230 : 70;
      }
    }
    LabelmeFile lm;
    lm.image_id = name;
    lm.image_width = lm.image_height = kSize;
    IndicatorVector v;
    for (Indicator ind : kCanonicalOrder) {
      std::string key = std::string(name) + "|" + std::string(Code(ind));
      if (UnitInterval(StableHash64(key, kSeed)) >= kPrevalence[Index(ind)]) {
        continue;
      }
      v.Set(ind, true);
      ++positives[Index(ind)];
      const Glyph& g = kGlyphs[Index(ind)];
      Fill(img, g, int(StableHash64(key, kSeed + 1) % 21) - 10);
      Annotation a;
      a.image_id = name;
      a.indicator = ind;
      a.polygon = {{double(g.x0), double(g.y0)}, {double(g.x1), double(g.y0)},
                   {double(g.x1), double(g.y1)}, {double(g.x0), double(g.y1)}};
      a.bbox = Envelope(a.polygon, kSize, kSize);
      lm.annotations.push_back(a);
    }
    presence[name] = v;
    manifest += std::string(name) + "\n";
    WritePng(out / "images" / (std::string(name) + ".png"), img);
    WriteFile(out / "labelme" / (std::string(name) + ".json"),
              SerializeLabelme(lm));
  }
  for (Indicator ind : kCanonicalOrder) {
    int p = positives[Index(ind)];
    if (p == 0 || p == kImages) {
      std::cerr << Code(ind) << " is degenerate in this fixture\n";
      return 1;
    }
  }
  WriteFile(out / "ground_truth.csv", PresenceToCsv(presence));
  WriteFile(out / "manifest.txt", manifest);
  return 0;
}
