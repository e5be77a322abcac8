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

#include "nbhd/imagery_client.h"

#include <algorithm>
#include <cctype>
#include <thread>

#include "httplib.h"
#include "http_util.h"
#include "json.hpp"
#include "nbhd/errors.h"
#include "nbhd/util.h"

namespace nbhd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json RequestToJson(const ImageRequest& r) {
  return json{{"road_id", r.sample.road_id},
              {"index", r.sample.index},
              {"lat", FormatCoordinate(r.sample.position.lat)},
              {"lon", FormatCoordinate(r.sample.position.lon)},
              {"arclength_m", r.sample.arclength_m},
              {"heading", r.heading_deg},
              {"width", r.width_px},
              {"height", r.height_px},
              {"key", r.Key()}};
}

ImageRequest RequestFromJson(const json& j) {
  ImageRequest r;
  r.sample.road_id = j.at("road_id").get<std::string>();
  r.sample.index = j.at("index").get<int>();
  r.sample.position = {std::stod(j.at("lat").get<std::string>()),
                       std::stod(j.at("lon").get<std::string>())};
  r.sample.arclength_m = j.value("arclength_m", 0.0);
  r.heading_deg = j.at("heading").get<int>();
  r.width_px = j.at("width").get<int>();
  r.height_px = j.at("height").get<int>();
  return r;
}

bool IsImageExtension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

RateLimiter::RateLimiter(double calls_per_second, Clock::duration guard)
    : max_calls_(0), window_(std::chrono::seconds(1) + guard) {
  if (calls_per_second > 0.0) {
    // Fractional rates widen the window instead of rounding the count.
    if (calls_per_second >= 1.0) {
      max_calls_ = static_cast<int>(calls_per_second);
    } else {
      max_calls_ = 1;
      window_ = std::chrono::duration_cast<Clock::duration>(
                    std::chrono::duration<double>(1.0 / calls_per_second)) +
                guard;
    }
  }
}

void RateLimiter::Acquire() {
  if (max_calls_ <= 0) return;
  std::unique_lock lock(mu_);
  while (true) {
    auto now = Clock::now();
    while (!recent_.empty() && now - recent_.front() >= window_) {
      recent_.pop_front();
    }
    if (static_cast<int>(recent_.size()) < max_calls_) {
      recent_.push_back(now);
      return;
    }
    auto wake = recent_.front() + window_;
    lock.unlock();
    std::this_thread::sleep_until(wake);
    lock.lock();
  }
}

ImageCache::ImageCache(fs::path dir) : images_dir_(std::move(dir) / "images") {
  std::error_code ec;
  if (!fs::is_directory(images_dir_, ec)) return;
  for (const auto& entry : fs::directory_iterator(images_dir_)) {
    if (entry.path().extension() != ".json") continue;
    try {
      json j = json::parse(ReadFile(entry.path()));
      by_request_[RequestFromJson(j.at("request")).Key()] =
          entry.path().stem().string();
    } catch (const std::exception&) {
      // Unreadable sidecars simply do not index.
    }
  }
}

std::optional<ImageRecord> ImageCache::Lookup(
    const ImageRequest& request) const {
  std::string image_id;
  {
    std::lock_guard lock(mu_);
    auto it = by_request_.find(request.Key());
    if (it == by_request_.end()) return std::nullopt;
    image_id = it->second;
  }
  fs::path png = images_dir_ / (image_id + ".png");
  Image pixels;
  try {
    pixels = ReadImageFile(png);
  } catch (const Error&) {
    return std::nullopt;
  }
  ImageRecord record = MakeRecord(std::move(pixels), request.Name(),
                                  ImageSource::kRemote, request);
  if (record.image_id != image_id) return std::nullopt;  // corrupted entry
  return record;
}

void ImageCache::Store(const ImageRecord& record) {
  if (!record.request) throw Error("only remote records are cached");
  std::lock_guard lock(mu_);
  fs::create_directories(images_dir_);
  WritePng(images_dir_ / (record.image_id + ".png"), record.pixels);
  json sidecar{{"image_id", record.image_id},
               {"request", RequestToJson(*record.request)}};
  WriteFile(images_dir_ / (record.image_id + ".json"), sidecar.dump(2) + "\n");
  by_request_[record.request->Key()] = record.image_id;
}

std::size_t ImageCache::size() const {
  std::lock_guard lock(mu_);
  return by_request_.size();
}

ImageryClient::ImageryClient(ImageryOptions options)
    : options_(std::move(options)),
      cache_(options_.cache_dir),
      limiter_(options_.rate_limit),
      in_flight_(std::clamp(options_.max_in_flight, 1, 1024)),
      rng_(options_.jitter_seed) {
  if (!options_.offline) {
    for (const char* ph : {"{lat}", "{lon}", "{heading}", "{size}", "{key}"}) {
      if (options_.endpoint_template.find(ph) == std::string::npos) {
        throw ConfigError(std::string("endpoint template lacks ") + ph);
      }
    }
    internal::SplitHttpUrl(options_.endpoint_template);
  }
}

std::string ImageryClient::ExpandEndpoint(const ImageRequest& request) const {
  std::string url = options_.endpoint_template;
  url = internal::ReplaceAll(url, "{lat}",
                             FormatCoordinate(request.sample.position.lat));
  url = internal::ReplaceAll(url, "{lon}",
                             FormatCoordinate(request.sample.position.lon));
  url = internal::ReplaceAll(url, "{heading}",
                             std::to_string(request.heading_deg));
  url = internal::ReplaceAll(url, "{size}",
                             std::to_string(request.width_px) + "x" +
                                 std::to_string(request.height_px));
  url = internal::ReplaceAll(url, "{key}",
                             internal::UrlEncode(options_.api_key));
  return url;
}

std::chrono::milliseconds ImageryClient::Backoff(int attempt) {
  double jitter;
  {
    std::lock_guard lock(rng_mu_);
    jitter = std::uniform_real_distribution<double>(0.0, 0.25)(rng_);
  }
  double ms = static_cast<double>(options_.backoff_base.count()) *
              static_cast<double>(1 << attempt) * (1.0 + jitter);
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

ImageRecord ImageryClient::Fetch(const ImageRequest& request) {
  if (auto hit = cache_.Lookup(request)) return *std::move(hit);
  if (options_.offline) {
    throw IoError("offline mode: request " + request.Key() + " not cached");
  }

  const internal::SplitUrl url =
      internal::SplitHttpUrl(ExpandEndpoint(request));
  int last_status = 0;
  bool quota = false;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(Backoff(attempt - 1));
    limiter_.Acquire();
    in_flight_.acquire();
    httplib::Result res;
    {
      httplib::Client client(url.origin);
      client.set_connection_timeout(options_.timeout);
      client.set_read_timeout(options_.timeout);
      client.set_follow_location(true);
      network_calls_.fetch_add(1);
      res = client.Get(url.path);
    }
    in_flight_.release();

    if (!res) {
      if (res.error() == httplib::Error::ConnectionTimeout ||
          res.error() == httplib::Error::Read) {
        if (attempt == options_.max_retries) {
          throw Timeout("imagery request timed out: " + request.Key());
        }
      }
      last_status = 0;
      quota = false;
      continue;
    }
    last_status = res->status;
    if (res->status >= 200 && res->status < 300) {
      Image pixels = DecodeImage(std::span<const std::uint8_t>(
          reinterpret_cast<const std::uint8_t*>(res->body.data()),
          res->body.size()));
      if (pixels.width != request.width_px ||
          pixels.height != request.height_px) {
        throw DecodeError("expected " + std::to_string(request.width_px) +
                          "x" + std::to_string(request.height_px) +
                          " image, got " + std::to_string(pixels.width) + "x" +
                          std::to_string(pixels.height));
      }
      ImageRecord record = MakeRecord(std::move(pixels), request.Name(),
                                      ImageSource::kRemote, request);
      cache_.Store(record);
      return record;
    }
    quota = res->status == 403 || res->status == 429;
    bool retryable = quota || res->status >= 500;
    if (!retryable) {
      throw HttpError(res->status, "imagery request failed with HTTP " +
                                       std::to_string(res->status));
    }
  }
  if (quota) {
    throw QuotaExceeded("imagery quota exceeded after " +
                        std::to_string(options_.max_retries) + " retries");
  }
  throw HttpError(last_status, "imagery request failed after retries (HTTP " +
                                   std::to_string(last_status) + ")");
}

LocalImages LoadLocal(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError("cannot read image directory " + dir.string());
  }
  std::vector<fs::path> files;
  try {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
  } catch (const fs::filesystem_error& e) {
    throw IoError(e.what());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });

  LocalImages out;
  for (const fs::path& file : files) {
    if (!IsImageExtension(file)) {
      ++out.skipped;
      out.warnings.push_back("skipped non-image file " +
                             file.filename().string());
      continue;
    }
    try {
      out.records.push_back(
          MakeRecord(ReadImageFile(file), file.stem().string()));
    } catch (const Error& e) {
      ++out.skipped;
      out.warnings.push_back("skipped " + file.filename().string() + ": " +
                             e.what());
    }
  }
  return out;
}

}  // namespace nbhd
