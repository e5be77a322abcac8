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

#include "nbhd/provider_gateway.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "httplib.h"
#include "http_util.h"
#include "nbhd/errors.h"
#include "nbhd/reference_rates.h"
#include "nbhd/util.h"

namespace nbhd {

namespace fs = std::filesystem;
using nlohmann::json;

void ProviderParams::Validate() const {
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw ConfigError("top_p must lie in (0, 1]");
  }
  if (max_tokens < 1) throw ConfigError("max_tokens must be positive");
}

std::string ProviderParams::Canonical() const {
  return "model=" + model_id + ";temperature=" + FormatShort(temperature) +
         ";top_p=" + FormatShort(top_p) +
         ";max_tokens=" + std::to_string(max_tokens);
}

json ProviderParams::ToJson() const {
  return json{{"model", model_id},
              {"temperature", temperature},
              {"top_p", top_p},
              {"max_tokens", max_tokens}};
}

// ---------------------------------------------------------------------------

MockBehavior MockBehavior::FromPublished(std::string_view model,
                                         std::uint64_t seed) {
  const PublishedTable& table = PublishedTableFor(model);
  MockBehavior b;
  b.rng_seed = seed;
  for (const PublishedRow& row : table.rows) {
    ClassRates r = RatesFromPublished(row.precision, row.recall, row.accuracy);
    b.rates[Index(row.indicator)] = {r.tpr, r.tnr};
  }
  return b;
}

void MockBehavior::Validate() const {
  auto check = [](const std::array<IndicatorRates, kNumIndicators>& rates) {
    for (const IndicatorRates& r : rates) {
      if (!(r.tpr >= 0.0 && r.tpr <= 1.0 && r.tnr >= 0.0 && r.tnr <= 1.0)) {
        throw ConfigError("mock rates must lie in [0, 1]");
      }
    }
  };
  check(rates);
  if (sequential_rates) check(*sequential_rates);
}

MockProvider::MockProvider(std::string id, MockBehavior behavior,
                           PresenceMap truth, LanguagePack pack)
    : id_(std::move(id)),
      behavior_(behavior),
      truth_(std::move(truth)),
      pack_(std::move(pack)) {
  behavior_.Validate();
}

bool MockProvider::Draw(std::string_view image_name, Indicator indicator,
                        bool truth, bool sequential) const {
  const auto& table = sequential && behavior_.sequential_rates
                          ? *behavior_.sequential_rates
                          : behavior_.rates;
  const IndicatorRates& r = table[Index(indicator)];
  std::string key = id_;
  key += '\x1f';
  key += image_name;
  key += '\x1f';
  key += Code(indicator);
  key += sequential ? "\x1fseq" : "\x1fpar";
  double u = UnitInterval(StableHash64(key, behavior_.rng_seed));
  return truth ? u < r.tpr : !(u < r.tnr);
}

std::string MockProvider::Complete(const ImageRecord& image,
                                   const std::string& prompt,
                                   const ProviderParams&) {
  auto it = truth_.find(image.name);
  if (it == truth_.end()) {
    throw ConfigError("mock provider '" + id_ +
                      "' has no ground truth for image '" + image.name + "'");
  }
  std::vector<std::pair<std::size_t, Indicator>> asked;
  for (const auto& [indicator, text] : pack_.questions) {
    if (text.empty()) continue;
    auto pos = prompt.find(text);
    if (pos == std::string::npos) pos = prompt.find(ContinuationForm(text));
    if (pos != std::string::npos) asked.emplace_back(pos, indicator);
  }
  if (asked.empty()) return "I cannot tell from this image.";
  std::sort(asked.begin(), asked.end());
  const bool sequential = asked.size() == 1;
  std::string out;
  for (const auto& [pos, indicator] : asked) {
    if (!out.empty()) out += ", ";
    out += Draw(image.name, indicator, it->second[indicator], sequential)
               ? "Yes"
               : "No";
  }
  return out;
}

// ---------------------------------------------------------------------------

HttpProviderConfig HttpProviderConfig::FromJson(const json& j) {
  HttpProviderConfig c;
  try {
    c.id = j.at("id").get<std::string>();
    c.endpoint = j.at("endpoint").get<std::string>();
    c.auth_env = j.value("auth_env", "");
    c.auth_header = j.value("auth_header", "");
    c.auth_prefix = j.value("auth_prefix", "");
    c.headers = j.value("headers", std::map<std::string, std::string>{});
    c.request_template = j.at("request");
    c.response_path = j.at("response_path").get<std::string>();
    c.timeout_s = j.value("timeout_s", 60);
    c.concurrency = j.value("concurrency", 2);
    c.rate_limit = j.value("rate_limit", 0.0);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid provider config: ") + e.what());
  }
  internal::SplitHttpUrl(c.endpoint);
  try {
    json::json_pointer(c.response_path);
  } catch (const json::exception&) {
    throw ConfigError("response_path is not a JSON pointer: " +
                      c.response_path);
  }
  return c;
}

HttpProviderConfig HttpProviderConfig::Read(const fs::path& path) {
  try {
    return FromJson(json::parse(ReadFile(path)));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

json RenderRequest(const json& node, const std::string& prompt,
                   const std::string& image_base64,
                   const ProviderParams& params) {
  if (node.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : node.items()) {
      out[k] = RenderRequest(v, prompt, image_base64, params);
    }
    return out;
  }
  if (node.is_array()) {
    json out = json::array();
    for (const auto& v : node) {
      out.push_back(RenderRequest(v, prompt, image_base64, params));
    }
    return out;
  }
  if (!node.is_string()) return node;
  const std::string& s = node.get_ref<const std::string&>();
  if (s == "{{temperature}}") return params.temperature;
  if (s == "{{top_p}}") return params.top_p;
  if (s == "{{max_tokens}}") return params.max_tokens;
  std::string out = internal::ReplaceAll(s, "{{prompt}}", prompt);
  out = internal::ReplaceAll(out, "{{model}}", params.model_id);
  out = internal::ReplaceAll(out, "{{image_base64}}", image_base64);
  return out;
}

HttpProvider::HttpProvider(HttpProviderConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {
  if (api_key_.empty() && !config_.auth_env.empty()) {
    if (const char* v = std::getenv(config_.auth_env.c_str())) api_key_ = v;
  }
}

std::string HttpProvider::Complete(const ImageRecord& image,
                                   const std::string& prompt,
                                   const ProviderParams& params) {
  std::vector<std::uint8_t> png = EncodePng(image.pixels);
  json body = RenderRequest(config_.request_template, prompt,
                            Base64Encode(png), params);

  std::string url = internal::ReplaceAll(config_.endpoint, "{model}",
                                         params.model_id);
  url = internal::ReplaceAll(url, "{key}", internal::UrlEncode(api_key_));
  internal::SplitUrl split = internal::SplitHttpUrl(url);

  httplib::Headers headers;
  if (!config_.auth_header.empty() && !api_key_.empty()) {
    headers.emplace(config_.auth_header, config_.auth_prefix + api_key_);
  }
  for (const auto& [k, v] : config_.headers) headers.emplace(k, v);

  httplib::Client client(split.origin);
  client.set_connection_timeout(std::chrono::seconds(config_.timeout_s));
  client.set_read_timeout(std::chrono::seconds(config_.timeout_s));
  client.set_write_timeout(std::chrono::seconds(config_.timeout_s));
  auto res = client.Post(split.path, headers, body.dump(), "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
      throw Timeout("provider '" + config_.id + "' timed out");
    }
    throw HttpError(0, "provider '" + config_.id +
                           "' request failed: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw HttpError(res->status, "provider '" + config_.id + "' returned HTTP " +
                                     std::to_string(res->status));
  }
  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception&) {
    throw MalformedResponse("provider '" + config_.id +
                            "' returned non-JSON content");
  }
  json::json_pointer ptr(config_.response_path);
  if (!reply.contains(ptr) || !reply[ptr].is_string()) {
    throw MalformedResponse("provider '" + config_.id + "' response lacks " +
                            config_.response_path);
  }
  return reply[ptr].get<std::string>();
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(fs::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      entries_.emplace(j.at("key").get<std::string>(),
                       j.at("raw_text").get<std::string>());
    } catch (const json::exception&) {
      // A torn final line from an interrupted run is ignored.
    }
  }
}

std::string ResponseCache::Key(std::string_view provider_id,
                               const ProviderParams& params,
                               std::string_view image_digest,
                               std::string_view prompt) {
  std::string material;
  material += provider_id;
  material += '\n';
  material += params.model_id;
  material += '\n';
  material += image_digest;
  material += '\n';
  material += Sha256Hex(prompt);
  material += '\n';
  material += Sha256Hex(params.Canonical());
  return Sha256Hex(material);
}

std::optional<std::string> ResponseCache::Lookup(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::Append(const std::string& key, const json& record) {
  std::lock_guard lock(mu_);
  if (entries_.contains(key)) return;
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot append to " + path_.string());
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw IoError("short write to " + path_.string());
  entries_.emplace(key, record.at("raw_text").get<std::string>());
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

ProviderGateway::ProviderGateway(fs::path cache_path)
    : cache_(std::move(cache_path)) {}

void ProviderGateway::Register(std::shared_ptr<Provider> provider,
                               int concurrency, double rate_limit) {
  Slot slot;
  std::string id = provider->id();
  slot.provider = std::move(provider);
  slot.concurrency = std::make_unique<std::counting_semaphore<256>>(
      std::clamp(concurrency, 1, 256));
  slot.limiter = std::make_unique<RateLimiter>(rate_limit);
  providers_[id] = std::move(slot);
}

bool ProviderGateway::Has(std::string_view provider_id) const {
  return providers_.find(provider_id) != providers_.end();
}

ProviderGateway::Slot& ProviderGateway::Find(std::string_view provider_id) {
  auto it = providers_.find(provider_id);
  if (it == providers_.end()) {
    throw ConfigError("unknown provider '" + std::string(provider_id) + "'");
  }
  return it->second;
}

ProviderResponse ProviderGateway::Query(std::string_view provider_id,
                                        const ImageRecord& image,
                                        const std::string& prompt,
                                        const ProviderParams& params) {
  if (prompt.empty()) throw ConfigError("prompt must not be empty");
  if (image.pixels.empty()) throw DecodeError("image has no pixels");
  params.Validate();
  Slot& slot = Find(provider_id);

  ProviderResponse response;
  response.provider_id = std::string(provider_id);
  response.cache_key =
      ResponseCache::Key(provider_id, params, image.image_id, prompt);
  if (auto hit = cache_.Lookup(response.cache_key)) {
    response.raw_text = *std::move(hit);
    response.cached = true;
    return response;
  }

  slot.limiter->Acquire();
  slot.concurrency->acquire();
  auto start = std::chrono::steady_clock::now();
  try {
    response.raw_text = slot.provider->Complete(image, prompt, params);
  } catch (...) {
    slot.concurrency->release();
    throw;
  }
  slot.concurrency->release();
  response.latency_ms = static_cast<long>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start)
          .count());

  cache_.Append(response.cache_key,
                json{{"key", response.cache_key},
                     {"provider_id", response.provider_id},
                     {"image_id", image.image_id},
                     {"image_name", image.name},
                     {"prompt_sha256", Sha256Hex(prompt)},
                     {"params", params.ToJson()},
                     {"raw_text", response.raw_text},
                     {"latency_ms", response.latency_ms}});
  return response;
}

SweepManifest Sweep(ProviderGateway& gateway, std::string_view provider_id,
                    std::span<const ProviderParams> grid,
                    std::span<const ImageRecord> images,
                    const std::string& prompt, const fs::path& out_dir) {
  if (grid.empty()) throw ConfigError("parameter grid is empty");
  for (const ProviderParams& p : grid) p.Validate();

  SweepManifest manifest;
  json cells = json::array();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    SweepCell cell;
    cell.params = grid[c];
    char name[96];
    std::snprintf(name, sizeof(name), "cell_%03zu_t%s_p%s", c,
                  FormatShort(cell.params.temperature).c_str(),
                  FormatShort(cell.params.top_p).c_str());
    cell.dir = out_dir / name;
    fs::create_directories(cell.dir);
    std::string csv = CsvLine({"image_id", "cache_key", "cached", "raw_text"});
    for (const ImageRecord& image : images) {
      try {
        ProviderResponse r = gateway.Query(provider_id, image, prompt, cell.params);
        cell.cache_keys.push_back(r.cache_key);
        csv += CsvLine({image.name, r.cache_key, r.cached ? "1" : "0",
                        r.raw_text});
      } catch (const Error& e) {
        cell.errors.push_back(image.name + ": " + e.what());
      }
    }
    WriteFile(cell.dir / "responses.csv", csv);
    cells.push_back({{"dir", cell.dir.filename().string()},
                     {"params", cell.params.ToJson()},
                     {"cache_keys", cell.cache_keys},
                     {"errors", cell.errors}});
    manifest.cells.push_back(std::move(cell));
  }
  WriteFile(out_dir / "sweep_manifest.json",
            json{{"provider", provider_id}, {"cells", cells}}.dump(2) + "\n");
  return manifest;
}

}  // namespace nbhd
