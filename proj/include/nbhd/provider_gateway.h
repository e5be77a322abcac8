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

#ifndef NBHD_PROVIDER_GATEWAY_H_
#define NBHD_PROVIDER_GATEWAY_H_

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nbhd/groundtruth.h"
#include "nbhd/image.h"
#include "nbhd/imagery_client.h"
#include "nbhd/indicator.h"
#include "nbhd/prompt_engine.h"

namespace nbhd {

// Decoding parameters. Defaults: temperature 1, top-p 0.95; no system
// prompt and a 64-token answer budget.
struct ProviderParams {
  double temperature = 1.0;
  double top_p = 0.95;
  std::string model_id;
  int max_tokens = 64;

  // Throws ConfigError when temperature < 0, top_p outside (0, 1] or
  // max_tokens < 1.
  void Validate() const;
  std::string Canonical() const;
  nlohmann::json ToJson() const;
};

struct ProviderResponse {
  std::string raw_text;  // verbatim
  long latency_ms = 0;
  std::string provider_id;
  bool cached = false;
  std::string cache_key;
};

// A chat-vision backend: returns the raw completion text.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual const std::string& id() const = 0;
  virtual std::string Complete(const ImageRecord& image,
                               const std::string& prompt,
                               const ProviderParams& params) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic mock.
// ---------------------------------------------------------------------------

struct IndicatorRates {
  double tpr = 1.0;
  double tnr = 1.0;
};

struct MockBehavior {
  std::array<IndicatorRates, kNumIndicators> rates{};  // canonical order
  // Used for single-question prompts when set.
  std::optional<std::array<IndicatorRates, kNumIndicators>> sequential_rates;
  std::uint64_t rng_seed = 0;

  // Rates implied by a published per-class table (see reference_rates.h).
  static MockBehavior FromPublished(std::string_view model,
                                    std::uint64_t seed = 0);
  void Validate() const;
};

// Answers each question of `pack` found in the prompt, in prompt order, with
// "Yes"/"No" drawn from the configured rates against the image's ground
// truth. The draw is a pure function of (seed, provider id, image name,
// indicator, prompt mode), so transcripts are reproducible.
class MockProvider : public Provider {
 public:
  MockProvider(std::string id, MockBehavior behavior, PresenceMap truth,
               LanguagePack pack = BuiltinPack("en"));

  const std::string& id() const override { return id_; }
  std::string Complete(const ImageRecord& image, const std::string& prompt,
                       const ProviderParams& params) override;

  // One verdict for one indicator, exposed for rate checks.
  bool Draw(std::string_view image_name, Indicator indicator, bool truth,
            bool sequential) const;

 private:
  std::string id_;
  MockBehavior behavior_;
  PresenceMap truth_;
  LanguagePack pack_;
};

// ---------------------------------------------------------------------------
// Generic HTTP chat-vision client.
// ---------------------------------------------------------------------------

// Provider envelope, loaded from JSON:
// {
//   "id": "openai",
//   "endpoint": "https://api.example.com/v1/chat/completions",
//   "auth_env": "OPENAI_API_KEY",          // variable holding the secret
//   "auth_header": "Authorization",        // omit to pass the key via {key}
//   "auth_prefix": "Bearer ",
//   "headers": {"x-extra": "v"},
//   "request": { ... "{{prompt}}", "{{image_base64}}", "{{model}}",
//                "{{temperature}}", "{{top_p}}", "{{max_tokens}}" ... },
//   "response_path": "/choices/0/message/content",
//   "timeout_s": 60,
//   "concurrency": 2,
//   "rate_limit": 0
// }
// The endpoint may contain {model} and {key}. A template string that is
// exactly a numeric placeholder becomes a JSON number.
struct HttpProviderConfig {
  std::string id;
  std::string endpoint;
  std::string auth_env;
  std::string auth_header;
  std::string auth_prefix;
  std::map<std::string, std::string> headers;
  nlohmann::json request_template;
  std::string response_path;
  int timeout_s = 60;
  int concurrency = 2;
  double rate_limit = 0.0;

  static HttpProviderConfig FromJson(const nlohmann::json& j);
  static HttpProviderConfig Read(const std::filesystem::path& path);
};

// Substitutes the placeholders into the request template.
nlohmann::json RenderRequest(const nlohmann::json& request_template,
                             const std::string& prompt,
                             const std::string& image_base64,
                             const ProviderParams& params);

class HttpProvider : public Provider {
 public:
  // `api_key` overrides the auth_env lookup when non-empty.
  explicit HttpProvider(HttpProviderConfig config, std::string api_key = "");

  const std::string& id() const override { return config_.id; }
  // Throws HttpError, Timeout or MalformedResponse.
  std::string Complete(const ImageRecord& image, const std::string& prompt,
                       const ProviderParams& params) override;

 private:
  HttpProviderConfig config_;
  std::string api_key_;
};

// ---------------------------------------------------------------------------
// Response cache and gateway.
// ---------------------------------------------------------------------------

// Append-only JSON-lines store, one record per distinct query.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path path);

  static std::string Key(std::string_view provider_id,
                         const ProviderParams& params,
                         std::string_view image_digest,
                         std::string_view prompt);

  std::optional<std::string> Lookup(const std::string& key) const;
  void Append(const std::string& key, const nlohmann::json& record);
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> entries_;  // key -> raw_text
};

class ProviderGateway {
 public:
  explicit ProviderGateway(std::filesystem::path cache_path);

  void Register(std::shared_ptr<Provider> provider, int concurrency = 2,
                double rate_limit = 0.0);
  bool Has(std::string_view provider_id) const;

  // Served from the response cache when an identical query was made before.
  ProviderResponse Query(std::string_view provider_id,
                         const ImageRecord& image, const std::string& prompt,
                         const ProviderParams& params);

  ResponseCache& cache() { return cache_; }

 private:
  struct Slot {
    std::shared_ptr<Provider> provider;
    std::unique_ptr<std::counting_semaphore<256>> concurrency;
    std::unique_ptr<RateLimiter> limiter;
  };
  Slot& Find(std::string_view provider_id);

  ResponseCache cache_;
  std::map<std::string, Slot, std::less<>> providers_;
};

struct SweepCell {
  ProviderParams params;
  std::filesystem::path dir;
  std::vector<std::string> cache_keys;
  std::vector<std::string> errors;
};

struct SweepManifest {
  std::vector<SweepCell> cells;
};

// One run directory per grid cell under `out_dir`, each holding a
// responses.csv; `out_dir`/sweep_manifest.json maps cells to cache keys.
// Query errors are recorded per cell. Throws ConfigError for an empty grid
// before touching the filesystem.
SweepManifest Sweep(ProviderGateway& gateway, std::string_view provider_id,
                    std::span<const ProviderParams> grid,
                    std::span<const ImageRecord> images,
                    const std::string& prompt,
                    const std::filesystem::path& out_dir);

}  // namespace nbhd

#endif  // NBHD_PROVIDER_GATEWAY_H_
