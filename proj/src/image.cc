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

#include "nbhd/image.h"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "nbhd/errors.h"
#include "nbhd/util.h"

namespace nbhd {

std::string DigestPixels(const Image& image) { return Sha256Hex(image.rgb); }

ImageRecord MakeRecord(Image pixels, std::string name, ImageSource source,
                       std::optional<ImageRequest> request) {
  ImageRecord r;
  r.image_id = DigestPixels(pixels);
  r.name = std::move(name);
  r.source = source;
  r.request = std::move(request);
  r.pixels = std::move(pixels);
  return r;
}

Image DecodeImage(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw DecodeError("empty image payload");
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1,
              const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat bgr;
  try {
    bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw DecodeError(std::string("image decode failed: ") + e.what());
  }
  if (bgr.empty() || bgr.type() != CV_8UC3) {
    throw DecodeError("payload is not a decodable PNG/JPEG image");
  }
  Image out(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      out.at(x, y, 0) = row[x][2];
      out.at(x, y, 1) = row[x][1];
      out.at(x, y, 2) = row[x][0];
    }
  }
  return out;
}

std::vector<std::uint8_t> EncodePng(const Image& image) {
  if (image.empty()) throw DecodeError("cannot encode an empty image");
  cv::Mat bgr(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width; ++x) {
      row[x] = cv::Vec3b(image.at(x, y, 2), image.at(x, y, 1),
                         image.at(x, y, 0));
    }
  }
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", bgr, out)) throw Error("PNG encoding failed");
  return out;
}

Image ReadImageFile(const std::filesystem::path& path) {
  std::string bytes = ReadFile(path);
  return DecodeImage(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

void WritePng(const std::filesystem::path& path, const Image& image) {
  auto bytes = EncodePng(image);
  WriteFile(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                   bytes.size()));
}

}  // namespace nbhd
