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

#ifndef NBHD_IMAGERY_CLIENT_H_
#define NBHD_IMAGERY_CLIENT_H_

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <vector>

#include "nbhd/geo_sampler.h"
#include "nbhd/image.h"

namespace nbhd {

// Sliding-window limiter: at most `max_calls` acquisitions in any window.
// A small guard is added to the window so that receivers observing arrival
// times (rather than send times) still see the limit respected.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double calls_per_second,
                       Clock::duration guard = std::chrono::milliseconds(50));

  // Blocks until a call may be issued. A rate <= 0 means unlimited.
  void Acquire();

 private:
  int max_calls_;
  Clock::duration window_;
  std::mutex mu_;
  std::deque<Clock::time_point> recent_;
};

// Content-addressed image cache:
//   <dir>/images/<image_id>.png   pixels
//   <dir>/images/<image_id>.json  originating request
class ImageCache {
 public:
  explicit ImageCache(std::filesystem::path dir);

  std::optional<ImageRecord> Lookup(const ImageRequest& request) const;
  void Store(const ImageRecord& record);
  std::size_t size() const;

 private:
  std::filesystem::path images_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> by_request_;  // request key -> image_id
};

struct ImageryOptions {
  // Template with {lat}, {lon}, {heading}, {size} and {key} placeholders.
  std::string endpoint_template;
  std::string api_key;
  std::filesystem::path cache_dir = "cache";
  double rate_limit = 0.0;  // requests per second; <= 0 disables
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  int max_in_flight = 4;
  std::chrono::seconds timeout{60};
  bool offline = false;
  std::uint64_t jitter_seed = 0;
};

// Environment variable holding the imagery API key for the CLI.
inline constexpr char kImageryKeyEnv[] = "NBHD_IMAGERY_API_KEY";

class ImageryClient {
 public:
  explicit ImageryClient(ImageryOptions options);

  // Cache hit: no network call. Miss: GET, decode, verify size, store.
  // Throws HttpError, DecodeError, QuotaExceeded, Timeout, or IoError when
  // offline and uncached.
  ImageRecord Fetch(const ImageRequest& request);

  std::string ExpandEndpoint(const ImageRequest& request) const;
  std::size_t network_calls() const { return network_calls_.load(); }

 private:
  std::chrono::milliseconds Backoff(int attempt);

  ImageryOptions options_;
  ImageCache cache_;
  RateLimiter limiter_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::size_t> network_calls_{0};
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
};

struct LocalImages {
  std::vector<ImageRecord> records;  // sorted by filename
  std::size_t skipped = 0;           // non-image or undecodable files
  std::vector<std::string> warnings;
};

// Loads every PNG/JPEG in `dir` (non-recursive). Throws IoError if the
// directory cannot be read.
LocalImages LoadLocal(const std::filesystem::path& dir);

}  // namespace nbhd

#endif  // NBHD_IMAGERY_CLIENT_H_
