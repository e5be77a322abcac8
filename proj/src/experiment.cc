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

#include "nbhd/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <set>
#include <thread>

#include "nbhd/errors.h"
#include "nbhd/geo_sampler.h"
#include "nbhd/imagery_client.h"
#include "nbhd/reference_rates.h"
#include "nbhd/util.h"

namespace nbhd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string UtcNow() {
  std::time_t t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::array<IndicatorRates, kNumIndicators> ParseRates(
    const json& j, std::array<IndicatorRates, kNumIndicators> base) {
  if (!j.is_object()) throw ConfigError("rates must be an object");
  for (const auto& [code, pair] : j.items()) {
    auto ind = FromCode(code);
    if (!ind) throw ConfigError("unknown indicator '" + code + "' in rates");
    if (!pair.is_array() || pair.size() != 2) {
      throw ConfigError("rates entries are [tpr, tnr] pairs");
    }
    base[Index(*ind)] = {pair[0].get<double>(), pair[1].get<double>()};
  }
  return base;
}

ProviderParams ParseParams(const json& j, const std::string& default_model) {
  ProviderParams p;
  p.model_id = default_model;
  if (j.is_null()) return p;
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  p.model_id = j.value("model", p.model_id);
  return p;
}

ProviderSpec ParseProvider(const json& j) {
  ProviderSpec s;
  s.id = j.at("id").get<std::string>();
  std::string kind = j.value("kind", "mock");
  if (kind == "mock") {
    s.kind = ProviderKind::kMock;
  } else if (kind == "http") {
    s.kind = ProviderKind::kHttp;
  } else {
    throw ConfigError("provider kind must be 'mock' or 'http'");
  }
  s.preset = j.value("preset", "");
  s.params = ParseParams(j.value("params", json()), s.id);
  s.concurrency = j.value("concurrency", 2);
  s.rate_limit = j.value("rate_limit", 0.0);
  std::array<IndicatorRates, kNumIndicators> base{};
  if (!s.preset.empty()) {
    try {
      base = MockBehavior::FromPublished(s.preset).rates;
    } catch (const std::out_of_range& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("rates")) {
    s.rates = ParseRates(j["rates"], base);
  } else if (!s.preset.empty()) {
    s.rates = base;
  }
  if (j.contains("sequential_preset")) {
    try {
      s.sequential_rates =
          MockBehavior::FromPublished(j["sequential_preset"].get<std::string>())
              .rates;
    } catch (const std::out_of_range& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("sequential_rates")) {
    s.sequential_rates =
        ParseRates(j["sequential_rates"], s.sequential_rates.value_or(base));
  }
  if (j.contains("config")) s.http_config = j["config"].get<std::string>();
  return s;
}

std::string FileDigest(const fs::path& p) { return Sha256Hex(ReadFile(p)); }

std::string MetricName(ChartMetric m) {
  switch (m) {
    case ChartMetric::kAccuracy: return "Accuracy";
    case ChartMetric::kRecall: return "Recall";
    case ChartMetric::kPrecision: return "Precision";
    case ChartMetric::kF1: return "F1";
  }
  return "Accuracy";
}

std::optional<double> MetricValue(const MetricsRow& row, ChartMetric m) {
  if (row.counts.total() == 0) return std::nullopt;
  const DerivedMetrics& d = row.metrics;
  switch (m) {
    case ChartMetric::kAccuracy: return d.accuracy;
    case ChartMetric::kRecall:
      if (d.recall_undefined) return std::nullopt;
      return d.recall;
    case ChartMetric::kPrecision:
      if (d.precision_undefined) return std::nullopt;
      return d.precision;
    case ChartMetric::kF1:
      if (d.f1_undefined) return std::nullopt;
      return d.f1;
  }
  return std::nullopt;
}

std::string XmlEscape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::vector<ImageRecord> LoadImages(const ExperimentConfig& cfg,
                                    std::vector<QueryFailure>* failures,
                                    std::vector<std::string>* notes) {
  std::vector<ImageRecord> images;
  if (cfg.sampling) {
    const SamplingSource& src = *cfg.sampling;
    std::vector<ImageRequest> requests;
    for (const RoadPolyline& road : ReadRoadsGeoJson(cfg.Resolve(src.roads))) {
      auto points = SamplePolyline(road, src.interval_m);
      auto expanded = ExpandHeadings(points);
      requests.insert(requests.end(), expanded.begin(), expanded.end());
    }
    if (src.max_images > 0 && requests.size() > src.max_images) {
      requests.resize(src.max_images);
    }
    ImageryOptions opts;
    opts.endpoint_template = src.endpoint;
    if (const char* key = std::getenv(src.api_key_env.c_str())) {
      opts.api_key = key;
    }
    opts.cache_dir = cfg.CacheDir();
    opts.rate_limit = src.rate_limit;
    opts.offline = src.offline;
    opts.jitter_seed = cfg.seed;
    ImageryClient client(opts);
    for (const ImageRequest& r : requests) {
      try {
        images.push_back(client.Fetch(r));
      } catch (const Error& e) {
        failures->push_back({"fetch", r.Name(), e.what()});
      }
    }
  } else {
    LocalImages local = LoadLocal(cfg.Resolve(cfg.images_dir));
    for (const std::string& w : local.warnings) notes->push_back(w);
    images = std::move(local.records);
  }

  if (!cfg.image_manifest.empty()) {
    std::vector<std::string> wanted =
        ReadManifestOrdered(cfg.Resolve(cfg.image_manifest));
    std::map<std::string, ImageRecord*> by_name;
    for (ImageRecord& r : images) by_name[r.name] = &r;
    std::vector<ImageRecord> selected;
    for (const std::string& name : wanted) {
      auto it = by_name.find(name);
      if (it == by_name.end()) {
        notes->push_back("manifest image '" + name + "' was not found");
        continue;
      }
      selected.push_back(*it->second);
    }
    images = std::move(selected);
  }
  return images;
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::FromJson(const json& j,
                                            const fs::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  c.raw = j;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    c.schema_version = j.value("schema_version", 0);
    if (c.schema_version != kConfigSchemaVersion) {
      throw ConfigError("unsupported schema_version " +
                        std::to_string(c.schema_version));
    }
    c.images_dir = j.value("images_dir", "");
    c.image_manifest = j.value("image_manifest", "");
    c.ground_truth = j.value("ground_truth", "");
    c.language = j.value("language", "en");
    c.language_pack = j.value("language_pack", "");
    if (j.contains("prompt_modes")) {
      c.prompt_modes.clear();
      for (const auto& m : j["prompt_modes"]) {
        c.prompt_modes.push_back(ParsePromptMode(m.get<std::string>()));
      }
    }
    c.parse_mode = ParseParseMode(j.value("parse_mode", "lenient"));
    if (j.contains("providers")) {
      for (const auto& p : j["providers"]) c.providers.push_back(ParseProvider(p));
    }
    if (j.contains("voters")) {
      if (j["voters"].is_string()) {
        c.voters = VoterPreset(j["voters"].get<std::string>());
      } else {
        c.voters = j["voters"].get<std::vector<std::string>>();
      }
    }
    c.tie_rule = ParseTieRule(j.value("tie_rule", "negative"));
    if (j.contains("noise")) {
      NoiseSpec n;
      n.snr_db = j["noise"].at("snr_db").get<double>();
      n.seed = j["noise"].value("seed", std::uint64_t{0});
      n.clamp = j["noise"].value("clamp", true);
      c.noise = n;
    }
    if (j.contains("rotation")) c.rotation = j["rotation"].get<int>();
    if (j.contains("sampling")) {
      const json& s = j["sampling"];
      SamplingSource src;
      src.roads = s.at("roads").get<std::string>();
      src.interval_m = s.value("interval_m", src.interval_m);
      src.endpoint = s.value("endpoint", "");
      src.api_key_env = s.value("api_key_env", src.api_key_env);
      src.rate_limit = s.value("rate_limit", 0.0);
      src.offline = s.value("offline", false);
      src.max_images = s.value("max_images", std::size_t{0});
      c.sampling = src;
    }
    c.output_dir = j.value("output_dir", "out");
    c.cache_dir = j.value("cache_dir", "");
    c.seed = j.value("seed", std::uint64_t{0});
    c.failure_threshold = j.value("failure_threshold", 0.2);
    c.workers = j.value("workers", 4);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::Read(const fs::path& path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return FromJson(j, path.parent_path());
}

fs::path ExperimentConfig::Resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return base_dir / p;
}

fs::path ExperimentConfig::CacheDir() const {
  return cache_dir.empty() ? OutputDir() / "cache" : Resolve(cache_dir);
}

void ExperimentConfig::Validate() const {
  if (providers.empty()) throw ConfigError("provider list is empty");
  std::set<std::string> ids;
  for (const ProviderSpec& p : providers) {
    if (p.id.empty()) throw ConfigError("provider id must not be empty");
    if (!ids.insert(p.id).second) {
      throw ConfigError("duplicate provider id '" + p.id + "'");
    }
    p.params.Validate();
    if (p.kind == ProviderKind::kHttp && !fs::exists(Resolve(p.http_config))) {
      throw ConfigError("provider config not found: " +
                        Resolve(p.http_config).string());
    }
    if (p.kind == ProviderKind::kMock && !p.rates) {
      throw ConfigError("mock provider '" + p.id + "' needs a preset or rates");
    }
  }
  for (const std::string& v : voters) {
    if (!ids.contains(v)) throw ConfigError("voter '" + v + "' is not a provider");
  }
  if (prompt_modes.empty()) throw ConfigError("prompt_modes is empty");
  if (ground_truth.empty() || !fs::exists(Resolve(ground_truth))) {
    throw ConfigError("ground truth not found: " + Resolve(ground_truth).string());
  }
  if (sampling) {
    if (!fs::exists(Resolve(sampling->roads))) {
      throw ConfigError("roads file not found: " +
                        Resolve(sampling->roads).string());
    }
  } else if (images_dir.empty() || !fs::is_directory(Resolve(images_dir))) {
    throw ConfigError("images_dir not found: " + Resolve(images_dir).string());
  }
  if (!image_manifest.empty() && !fs::exists(Resolve(image_manifest))) {
    throw ConfigError("image manifest not found: " +
                      Resolve(image_manifest).string());
  }
  if (!language_pack.empty() && !fs::exists(Resolve(language_pack))) {
    throw ConfigError("language pack not found: " +
                      Resolve(language_pack).string());
  }
  if (noise && !(noise->snr_db >= 0.0 && noise->snr_db <= kMaxSnrDb)) {
    throw ConfigError("noise snr_db must lie in [0, 60]");
  }
  if (rotation && *rotation != 90 && *rotation != 180 && *rotation != 270) {
    throw ConfigError("rotation must be 90, 180 or 270");
  }
  if (!(failure_threshold >= 0.0 && failure_threshold <= 1.0)) {
    throw ConfigError("failure_threshold must lie in [0, 1]");
  }
  if (workers < 1) throw ConfigError("workers must be positive");
}

std::string ExperimentConfig::Digest() const { return Sha256Hex(raw.dump()); }

std::shared_ptr<Provider> MakeProvider(const ProviderSpec& spec,
                                       const PresenceMap& truth,
                                       const LanguagePack& pack,
                                       std::uint64_t seed,
                                       const fs::path& base_dir) {
  if (spec.kind == ProviderKind::kHttp) {
    fs::path cfg = spec.http_config.is_absolute()
                       ? spec.http_config
                       : base_dir / spec.http_config;
    HttpProviderConfig http = HttpProviderConfig::Read(cfg);
    http.id = spec.id;
    return std::make_shared<HttpProvider>(std::move(http));
  }
  MockBehavior behavior;
  behavior.rng_seed = seed;
  if (spec.rates) behavior.rates = *spec.rates;
  behavior.sequential_rates = spec.sequential_rates;
  return std::make_shared<MockProvider>(spec.id, behavior, truth, pack);
}

// ---------------------------------------------------------------------------

EvaluationResult Evaluate(ProviderGateway& gateway,
                          std::span<const EvaluationTask> tasks,
                          std::span<const ImageRecord> images,
                          const PromptPlan& plan, ParseMode parse_mode,
                          const AnswerTokens& tokens, int workers,
                          double failure_threshold) {
  struct JobResult {
    bool ran = false;
    std::optional<IndicatorVector> vector;
    std::vector<Transcript> transcripts;
    std::string error;
  };
  const std::size_t total = tasks.size() * images.size();
  std::vector<JobResult> results(total);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failures{0};
  std::atomic<bool> abort{false};

  auto run_job = [&](std::size_t job) {
    const EvaluationTask& task = tasks[job / images.size()];
    const ImageRecord& image = images[job % images.size()];
    JobResult& out = results[job];
    out.ran = true;
    try {
      IndicatorVector vec;
      for (std::size_t r = 0; r < plan.requests.size(); ++r) {
        const PromptRequest& req = plan.requests[r];
        ProviderResponse resp =
            gateway.Query(task.provider_id, image, req.text, task.params);
        out.transcripts.push_back({task.series, image.name, int(r),
                                   resp.cache_key, resp.raw_text});
        if (plan.mode == PromptMode::kParallel) {
          vec = ParseParallel(resp.raw_text, parse_mode, tokens);
        } else {
          vec.Set(req.indicators.front(),
                  ParseSingle(resp.raw_text, parse_mode, tokens));
        }
      }
      out.vector = vec;
    } catch (const Error& e) {
      out.error = e.what();
      std::size_t f = failures.fetch_add(1) + 1;
      if (double(f) > failure_threshold * double(total)) abort = true;
    }
  };

  auto worker = [&] {
    while (!abort.load()) {
      std::size_t job = next.fetch_add(1);
      if (job >= total) return;
      run_job(job);
    }
  };
  {
    std::vector<std::jthread> pool;
    int n = std::clamp<int>(workers, 1, 64);
    for (int w = 0; w < n; ++w) pool.emplace_back(worker);
  }

  EvaluationResult out;
  out.aborted = abort.load();
  for (std::size_t job = 0; job < total; ++job) {
    JobResult& r = results[job];
    if (!r.ran) continue;
    ++out.attempts;
    const EvaluationTask& task = tasks[job / images.size()];
    const ImageRecord& image = images[job % images.size()];
    for (Transcript& t : r.transcripts) out.transcripts.push_back(std::move(t));
    if (r.vector) {
      out.verdicts.push_back({image.name, task.series, *r.vector, ""});
    } else {
      out.failures.push_back({task.series, image.name, r.error});
    }
  }
  return out;
}

std::string TranscriptsToCsv(std::span<const Transcript> transcripts) {
  std::string out = CsvLine(
      {"series", "image_id", "request", "cache_key", "raw_text"});
  for (const Transcript& t : transcripts) {
    out += CsvLine({t.series, t.image_id, std::to_string(t.request_index),
                    t.cache_key, t.raw_text});
  }
  return out;
}

std::string FailuresToCsv(std::span<const QueryFailure> failures) {
  std::string out = CsvLine({"series", "image_id", "error"});
  for (const QueryFailure& f : failures) {
    out += CsvLine({f.series, f.image_id, f.error});
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string RenderBarChartSvg(std::span<const MetricsReport> reports,
                              ChartMetric metric, std::string_view title) {
  static constexpr const char* kPalette[] = {
      "#4e79a7", "#f28e2b", "#59a14f", "#e15759",
      "#76b7b2", "#edc948", "#b07aa1", "#9c755f"};
  const int n_series = static_cast<int>(reports.size());
  const int bar_w = 16;
  const int group_w = std::max(60, n_series * bar_w + 24);
  const int left = 56, top = 40, plot_h = 240;
  const int plot_w = group_w * int(kNumIndicators);
  const int legend_h = 18 * std::max(1, n_series);
  const int width = left + plot_w + 24;
  const int height = top + plot_h + 40 + legend_h + 40;

  // Indicators with no ground-truth positives in any series are omitted.
  std::array<bool, kNumIndicators> omitted{};
  for (Indicator i : kCanonicalOrder) {
    bool has_positive = false;
    for (const MetricsReport& r : reports) {
      const ConfusionCounts& c = r.rows[Index(i)].counts;
      if (c.tp + c.fn > 0) has_positive = true;
    }
    omitted[Index(i)] = !has_positive;
  }

  auto y_of = [&](double v) { return top + plot_h - v * plot_h; };
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(width / 2) +
         "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         XmlEscape(title) + "</text>\n";
  for (int k = 0; k <= 5; ++k) {
    double v = k * 0.2;
    std::string y = FormatFixed(y_of(v), 1);
    svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + y +
           "\" x2=\"" + std::to_string(left + plot_w) + "\" y2=\"" + y +
           "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + y +
           "\" text-anchor=\"end\" dominant-baseline=\"middle\">" +
           FormatFixed(v, 1) + "</text>\n";
  }
  svg += "<text x=\"14\" y=\"" + std::to_string(top + plot_h / 2) +
         "\" transform=\"rotate(-90 14 " + std::to_string(top + plot_h / 2) +
         ")\" text-anchor=\"middle\">" + MetricName(metric) + "</text>\n";

  std::vector<std::string> footnotes;
  for (std::size_t g = 0; g < kNumIndicators; ++g) {
    Indicator ind = kCanonicalOrder[g];
    int gx = left + int(g) * group_w;
    std::string label(Code(ind));
    if (omitted[g]) {
      label += "*";
      footnotes.push_back(std::string(Code(ind)) +
                          ": no ground-truth positives, bars omitted");
    } else {
      int x0 = gx + (group_w - n_series * bar_w) / 2;
      for (int s = 0; s < n_series; ++s) {
        auto v = MetricValue(reports[s].rows[g], metric);
        if (!v) continue;
        double y = y_of(*v);
        svg += "<rect x=\"" + std::to_string(x0 + s * bar_w) + "\" y=\"" +
               FormatFixed(y, 1) + "\" width=\"" + std::to_string(bar_w - 2) +
               "\" height=\"" + FormatFixed(top + plot_h - y, 1) +
               "\" fill=\"" + kPalette[s % 8] + "\"><title>" +
               XmlEscape(reports[s].series) + " " + label + ": " +
               FormatFixed(*v, 3) + "</title></rect>\n";
      }
    }
    svg += "<text x=\"" + std::to_string(gx + group_w / 2) + "\" y=\"" +
           std::to_string(top + plot_h + 16) +
           "\" text-anchor=\"middle\">" + label + "</text>\n";
  }
  svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" +
         std::to_string(top + plot_h) + "\" x2=\"" +
         std::to_string(left + plot_w) + "\" y2=\"" +
         std::to_string(top + plot_h) + "\" stroke=\"black\"/>\n";

  int ly = top + plot_h + 36;
  for (int s = 0; s < n_series; ++s) {
    svg += "<rect x=\"" + std::to_string(left) + "\" y=\"" +
           std::to_string(ly + s * 18) + "\" width=\"12\" height=\"12\" fill=\"" +
           kPalette[s % 8] + "\"/>\n";
    svg += "<text x=\"" + std::to_string(left + 18) + "\" y=\"" +
           std::to_string(ly + s * 18 + 10) + "\">" +
           XmlEscape(reports[s].series) + "</text>\n";
  }
  int fy = ly + n_series * 18 + 14;
  for (const std::string& f : footnotes) {
    svg += "<text x=\"" + std::to_string(left) + "\" y=\"" +
           std::to_string(fy) + "\" font-size=\"10\">* " + XmlEscape(f) +
           "</text>\n";
    fy += 14;
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<MetricsReport> ReportsFromConfusionCsv(std::string_view text) {
  auto rows = ParseCsv(text);
  if (rows.empty()) throw ParseError("confusion CSV is empty");
  const CsvRow& h = rows.front();
  std::size_t c_series = ColumnIndex(h, "series");
  std::size_t c_ind = ColumnIndex(h, "indicator");
  std::size_t c_tp = ColumnIndex(h, "tp"), c_fp = ColumnIndex(h, "fp");
  std::size_t c_fn = ColumnIndex(h, "fn"), c_tn = ColumnIndex(h, "tn");
  std::vector<std::string> order;
  std::map<std::string, ConfusionTable> tables;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.size() != h.size()) {
      throw ParseError("confusion CSV row " + std::to_string(r) +
                       " has the wrong column count");
    }
    auto ind = FromCode(row[c_ind]);
    if (!ind) throw ParseError("unknown indicator '" + row[c_ind] + "'");
    if (!tables.contains(row[c_series])) order.push_back(row[c_series]);
    try {
      tables[row[c_series]][Index(*ind)] = {
          std::stol(row[c_tp]), std::stol(row[c_fp]), std::stol(row[c_fn]),
          std::stol(row[c_tn])};
    } catch (const std::logic_error&) {
      throw ParseError("confusion CSV row " + std::to_string(r) +
                       " has a non-integer count");
    }
  }
  std::vector<MetricsReport> out;
  for (const std::string& s : order) out.push_back(BuildReport(s, tables[s]));
  return out;
}

std::vector<std::string> WriteReports(std::span<const MetricsReport> reports,
                                      const fs::path& out_dir,
                                      std::string_view notes) {
  std::string confusion = ConfusionCsvHeader();
  std::string metrics = MetricsCsvHeader();
  for (const MetricsReport& r : reports) {
    confusion += ConfusionCsvRows(r);
    metrics += MetricsCsvRows(r);
  }
  WriteFile(out_dir / "confusion.csv", confusion);
  WriteFile(out_dir / "metrics.csv", metrics);

  std::string md = "# Indicator detection report\n\n";
  md += "## Accuracy by indicator\n\n| Series |";
  for (Indicator i : kCanonicalOrder) md += " " + std::string(Code(i)) + " |";
  md += " Average |\n|---|";
  for (std::size_t k = 0; k <= kNumIndicators; ++k) md += "---|";
  md += "\n";
  for (const MetricsReport& r : reports) {
    md += "| " + r.series + " |";
    for (const MetricsRow& row : r.rows) {
      md += " " + (row.counts.total() ? FormatFixed(row.metrics.accuracy, 3)
                                      : std::string("n/a")) + " |";
    }
    md += " " + FormatFixed(r.macro_accuracy, 3) + " |\n";
  }
  for (const MetricsReport& r : reports) {
    md += "\n## " + r.series + "\n\n" + ReportMarkdown(r, 2);
  }
  md += "\n![Accuracy](chart_accuracy.svg)\n\n![Recall](chart_recall.svg)\n";
  if (!notes.empty()) md += "\n## Notes\n\n" + std::string(notes);
  WriteFile(out_dir / "report.md", md);

  WriteFile(out_dir / "chart_accuracy.svg",
            RenderBarChartSvg(reports, ChartMetric::kAccuracy,
                              "Accuracy by indicator"));
  WriteFile(out_dir / "chart_recall.svg",
            RenderBarChartSvg(reports, ChartMetric::kRecall,
                              "Recall by indicator"));
  return {"confusion.csv", "metrics.csv", "report.md", "chart_accuracy.svg",
          "chart_recall.svg"};
}

json RunManifest::ToJson() const {
  return json{{"config_digest", config_digest},
              {"tool_version", tool_version},
              {"started_at", started_at},
              {"finished_at", finished_at},
              {"inputs", inputs},
              {"stage_outputs", stage_outputs},
              {"images", images},
              {"attempts", attempts},
              {"failures", failures}};
}

// ---------------------------------------------------------------------------

RunResult Run(const ExperimentConfig& cfg) {
  cfg.Validate();
  RunResult result;
  RunManifest& manifest = result.manifest;
  manifest.started_at = UtcNow();
  manifest.config_digest = cfg.Digest();

  const fs::path truth_path = cfg.Resolve(cfg.ground_truth);
  PresenceMap truth_all;
  LanguagePack pack;
  std::vector<PromptPlan> plans;
  try {
    truth_all = PresenceFromCsv(ReadFile(truth_path));
    pack = cfg.language_pack.empty()
               ? BuiltinPack(cfg.language)
               : ReadLanguagePack(cfg.Resolve(cfg.language_pack));
    for (PromptMode m : cfg.prompt_modes) plans.push_back(BuildPlan(pack, m));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  AnswerTokens tokens{pack.yes_tokens, pack.no_tokens};

  const fs::path out = cfg.OutputDir();
  result.output_dir = out;
  fs::create_directories(out);
  ProviderGateway gateway(cfg.CacheDir() / "responses.jsonl");
  for (const ProviderSpec& spec : cfg.providers) {
    gateway.Register(MakeProvider(spec, truth_all, pack, cfg.seed, cfg.base_dir),
                     spec.concurrency, spec.rate_limit);
  }

  // Stage: sample / fetch / load.
  std::vector<QueryFailure> failures;
  std::vector<std::string> notes;
  std::vector<ImageRecord> images = LoadImages(cfg, &failures, &notes);
  manifest.images = images.size();

  // Stage: optional robustness transforms.
  for (ImageRecord& img : images) {
    if (cfg.rotation) img = Rotate(img, *cfg.rotation);
    if (cfg.noise) {
      NoiseSpec spec = *cfg.noise;
      spec.seed = StableHash64(img.name, spec.seed);
      img = AddGaussianNoise(img, spec);
    }
  }
  std::string image_list;
  for (const ImageRecord& img : images) {
    image_list += img.name + ":" + img.image_id + "\n";
  }
  manifest.inputs["images"] = Sha256Hex(image_list);
  manifest.inputs["ground_truth"] = FileDigest(truth_path);

  // Stages: prompt, query, parse.
  const bool label_modes = cfg.prompt_modes.size() > 1;
  std::vector<ModelVerdict> verdicts;
  std::vector<ModelVerdict> primary;  // first mode, keyed by provider id
  std::vector<Transcript> transcripts;
  std::vector<std::string> series_order;
  bool aborted = false;
  std::size_t attempts = 0;
  for (std::size_t m = 0; m < plans.size() && !aborted; ++m) {
    std::vector<EvaluationTask> tasks;
    for (const ProviderSpec& spec : cfg.providers) {
      std::string series = spec.id;
      if (label_modes) series += "@" + std::string(ToString(cfg.prompt_modes[m]));
      tasks.push_back({spec.id, series, spec.params});
      series_order.push_back(series);
    }
    EvaluationResult r = Evaluate(gateway, tasks, images, plans[m],
                                  cfg.parse_mode, tokens, cfg.workers,
                                  cfg.failure_threshold);
    attempts += r.attempts;
    aborted = r.aborted;
    for (auto& f : r.failures) failures.push_back(std::move(f));
    for (auto& t : r.transcripts) transcripts.push_back(std::move(t));
    for (ModelVerdict& v : r.verdicts) {
      if (m == 0) {
        ModelVerdict p = v;
        for (const EvaluationTask& t : tasks) {
          if (t.series == v.provider_id) p.provider_id = t.provider_id;
        }
        primary.push_back(std::move(p));
      }
      verdicts.push_back(std::move(v));
    }
  }
  manifest.attempts = attempts;
  manifest.failures = failures.size();

  WriteFile(out / "transcripts.csv", TranscriptsToCsv(transcripts));
  WriteFile(out / "failures.csv", FailuresToCsv(failures));
  WriteFile(out / "verdicts.csv", VerdictsToCsv(verdicts));
  manifest.stage_outputs["query"] = {
      {"transcripts.csv", FileDigest(out / "transcripts.csv")},
      {"failures.csv", FileDigest(out / "failures.csv")}};
  manifest.stage_outputs["parse"] = {
      {"verdicts.csv", FileDigest(out / "verdicts.csv")}};

  const std::size_t planned =
      images.size() * cfg.providers.size() * cfg.prompt_modes.size();
  if (aborted || (planned > 0 && double(failures.size()) >
                                     cfg.failure_threshold * double(planned))) {
    manifest.finished_at = UtcNow();
    WriteFile(out / "run_manifest.json", manifest.ToJson().dump(2) + "\n");
    throw PartialFailure(std::to_string(failures.size()) + " of " +
                         std::to_string(planned) +
                         " queries failed; threshold exceeded");
  }

  // Stage: vote.
  std::vector<std::string> voters = cfg.voters;
  if (voters.empty()) {
    for (const ProviderSpec& p : cfg.providers) voters.push_back(p.id);
  }
  std::optional<EnsembleRun> ensemble;
  if (voters.size() >= 2) {
    ensemble = VoteAll(primary, voters, cfg.tie_rule);
    WriteFile(out / "ensemble.csv", EnsembleToCsv(*ensemble));
    manifest.stage_outputs["vote"] = {
        {"ensemble.csv", FileDigest(out / "ensemble.csv")}};
    for (const std::string& id : ensemble->skipped_images) {
      notes.push_back("ensemble skipped '" + id + "': fewer than 2 verdicts");
    }
  } else {
    notes.push_back("ensemble not computed: fewer than 2 voters");
  }

  // Stage: score (truth restricted to the evaluated images).
  PresenceMap truth;
  for (const ImageRecord& img : images) {
    auto it = truth_all.find(img.name);
    if (it == truth_all.end()) {
      notes.push_back("no ground truth for image '" + img.name + "'");
      continue;
    }
    truth[img.name] = it->second;
  }
  for (const std::string& series : series_order) {
    ConfusionResult c = Confusion(VerdictsFor(verdicts, series), truth);
    if (!c.missing_predictions.empty()) {
      notes.push_back(series + ": " + std::to_string(c.missing_predictions.size()) +
                      " image(s) without a verdict excluded");
    }
    result.reports.push_back(BuildReport(series, c.counts));
  }
  if (ensemble) {
    ConfusionResult c = Confusion(EnsemblePresence(*ensemble), truth);
    result.reports.push_back(BuildReport("ensemble", c.counts));
  }

  // Stage: report.
  std::string note_text;
  if (!failures.empty()) {
    note_text += "- " + std::to_string(failures.size()) +
                 " failed queries (see failures.csv)\n";
  }
  for (const std::string& n : notes) note_text += "- " + n + "\n";
  std::vector<std::string> files = WriteReports(result.reports, out, note_text);
  for (const std::string& f : files) {
    std::string stage = f.ends_with(".csv") ? "score" : "report";
    manifest.stage_outputs[stage][f] = FileDigest(out / f);
  }
  manifest.finished_at = UtcNow();
  WriteFile(out / "run_manifest.json", manifest.ToJson().dump(2) + "\n");
  return result;
}

}  // namespace nbhd
