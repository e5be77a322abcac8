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

#ifndef NBHD_EXPERIMENT_H_
#define NBHD_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nbhd/answer_parser.h"
#include "nbhd/ensemble.h"
#include "nbhd/groundtruth.h"
#include "nbhd/image.h"
#include "nbhd/metrics.h"
#include "nbhd/noise_aug.h"
#include "nbhd/prompt_engine.h"
#include "nbhd/provider_gateway.h"

namespace nbhd {

inline constexpr char kToolVersion[] = "0.1.0";
inline constexpr int kConfigSchemaVersion = 1;

enum class ProviderKind { kMock, kHttp };

struct ProviderSpec {
  std::string id;
  ProviderKind kind = ProviderKind::kMock;
  ProviderParams params;
  int concurrency = 2;
  double rate_limit = 0.0;
  // Mock: rates from a published table, optionally overridden per indicator.
  std::string preset;
  std::optional<std::array<IndicatorRates, kNumIndicators>> rates;
  std::optional<std::array<IndicatorRates, kNumIndicators>> sequential_rates;
  // Http: provider envelope file.
  std::filesystem::path http_config;
};

struct SamplingSource {
  std::filesystem::path roads;
  double interval_m = 15.24;
  std::string endpoint;
  std::string api_key_env = "NBHD_IMAGERY_API_KEY";
  double rate_limit = 0.0;
  bool offline = false;
  std::size_t max_images = 0;  // 0 = all requests
};

// One JSON document; relative paths resolve against the file's directory.
struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::filesystem::path base_dir;
  std::filesystem::path images_dir;
  std::optional<SamplingSource> sampling;
  std::filesystem::path image_manifest;  // optional
  std::filesystem::path ground_truth;
  std::string language = "en";
  std::filesystem::path language_pack;  // optional override of `language`
  std::vector<PromptMode> prompt_modes = {PromptMode::kParallel};
  ParseMode parse_mode = ParseMode::kLenient;
  std::vector<ProviderSpec> providers;
  std::vector<std::string> voters;  // empty: every provider
  TieRule tie_rule = TieRule::kNegative;
  std::optional<NoiseSpec> noise;
  std::optional<int> rotation;
  std::filesystem::path output_dir = "out";
  std::filesystem::path cache_dir;  // default: <output_dir>/cache
  std::uint64_t seed = 0;
  double failure_threshold = 0.2;
  int workers = 4;

  nlohmann::json raw;  // the document as read, for the digest

  // Throws ConfigError on malformed documents.
  static ExperimentConfig FromJson(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir);
  static ExperimentConfig Read(const std::filesystem::path& path);

  // Referenced files exist, provider list nonempty, values in range.
  void Validate() const;
  std::string Digest() const;
  std::filesystem::path Resolve(const std::filesystem::path& p) const;
  std::filesystem::path OutputDir() const { return Resolve(output_dir); }
  std::filesystem::path CacheDir() const;
};

std::shared_ptr<Provider> MakeProvider(const ProviderSpec& spec,
                                       const PresenceMap& truth,
                                       const LanguagePack& pack,
                                       std::uint64_t seed,
                                       const std::filesystem::path& base_dir);

struct Transcript {
  std::string series;
  std::string image_id;
  int request_index = 0;
  std::string cache_key;
  std::string raw_text;
};

struct QueryFailure {
  std::string series;
  std::string image_id;
  std::string error;
};

struct EvaluationResult {
  std::vector<ModelVerdict> verdicts;
  std::vector<Transcript> transcripts;
  std::vector<QueryFailure> failures;
  std::size_t attempts = 0;
  bool aborted = false;
};

struct EvaluationTask {
  std::string provider_id;
  std::string series;  // label used in reports
  ProviderParams params;
};

// Runs every task over every image with `workers` threads. Outputs are in
// (task, image) order regardless of scheduling. Stops issuing new queries
// once failures exceed `failure_threshold` of all planned jobs.
EvaluationResult Evaluate(ProviderGateway& gateway,
                          std::span<const EvaluationTask> tasks,
                          std::span<const ImageRecord> images,
                          const PromptPlan& plan, ParseMode parse_mode,
                          const AnswerTokens& tokens, int workers,
                          double failure_threshold = 1.0);

std::string TranscriptsToCsv(std::span<const Transcript> transcripts);
std::string FailuresToCsv(std::span<const QueryFailure> failures);

enum class ChartMetric { kAccuracy, kRecall, kPrecision, kF1 };

// Grouped bars: one group per indicator, one bar per series. Indicators
// without ground-truth positives are omitted and footnoted.
std::string RenderBarChartSvg(std::span<const MetricsReport> reports,
                              ChartMetric metric, std::string_view title);

// Rebuilds reports from confusion.csv rows (series order preserved).
std::vector<MetricsReport> ReportsFromConfusionCsv(std::string_view text);

// Writes confusion.csv, metrics.csv, report.md, chart_accuracy.svg and
// chart_recall.svg into `out_dir`; returns the written file names.
std::vector<std::string> WriteReports(std::span<const MetricsReport> reports,
                                      const std::filesystem::path& out_dir,
                                      std::string_view notes = "");

struct RunManifest {
  std::string config_digest;
  std::string tool_version = kToolVersion;
  std::string started_at;
  std::string finished_at;
  // stage -> (file -> sha256)
  std::map<std::string, std::map<std::string, std::string>> stage_outputs;
  std::map<std::string, std::string> inputs;
  std::size_t images = 0;
  std::size_t attempts = 0;
  std::size_t failures = 0;

  nlohmann::json ToJson() const;
};

struct RunResult {
  RunManifest manifest;
  std::vector<MetricsReport> reports;
  std::filesystem::path output_dir;
};

// sample/load -> transform -> prompt -> query -> parse -> vote -> score ->
// report. Throws ConfigError before any work for invalid configs and
// PartialFailure (after persisting what was gathered) when the failure rate
// exceeds the threshold.
RunResult Run(const ExperimentConfig& config);

}  // namespace nbhd

#endif  // NBHD_EXPERIMENT_H_
