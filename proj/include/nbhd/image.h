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

#ifndef NBHD_IMAGE_H_
#define NBHD_IMAGE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nbhd/geo_sampler.h"

namespace nbhd {

// Interleaved 8-bit RGB raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 0) {}

  bool empty() const { return rgb.empty(); }
  std::uint8_t& at(int x, int y, int c) {
    return rgb[(std::size_t(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return rgb[(std::size_t(y) * width + x) * 3 + c];
  }
  bool operator==(const Image&) const = default;
};

enum class ImageSource { kRemote, kLocal };

struct ImageRecord {
  std::string image_id;  // sha256 of the pixel bytes
  std::string name;      // file stem or request name; keys ground truth
  ImageSource source = ImageSource::kLocal;
  std::optional<ImageRequest> request;
  Image pixels;
};

std::string DigestPixels(const Image& image);

ImageRecord MakeRecord(Image pixels, std::string name,
                       ImageSource source = ImageSource::kLocal,
                       std::optional<ImageRequest> request = std::nullopt);

// PNG/JPEG decoding. Throws DecodeError on malformed payloads.
Image DecodeImage(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> EncodePng(const Image& image);

Image ReadImageFile(const std::filesystem::path& path);
void WritePng(const std::filesystem::path& path, const Image& image);

}  // namespace nbhd

#endif  // NBHD_IMAGE_H_
