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

// Command-line front end for the indicator-detection pipeline. Each
// subcommand runs one stage against files on disk; `run` chains them all.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nbhd/answer_parser.h"
#include "nbhd/ensemble.h"
#include "nbhd/errors.h"
#include "nbhd/experiment.h"
#include "nbhd/geo_sampler.h"
#include "nbhd/groundtruth.h"
#include "nbhd/imagery_client.h"
#include "nbhd/metrics.h"
#include "nbhd/noise_aug.h"
#include "nbhd/prompt_engine.h"
#include "nbhd/provider_gateway.h"
#include "nbhd/util.h"

namespace fs = std::filesystem;
using namespace nbhd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct SampleArgs {
  std::string roads, out;
  double interval = kDefaultIntervalM;
};

struct FetchArgs {
  std::string requests, endpoint, cache_dir = "cache", out_dir;
  double rate_limit = 0.0;
  bool offline = false;
};

struct IngestArgs {
  std::string labelme_dir, aliases, manifest, presence_out, boxes_out;
};

struct EvaluateArgs {
  std::string images, manifest, ground_truth, provider, model;
  std::string mode = "parallel", language = "en", parse = "lenient";
  std::string cache = "cache/responses.jsonl", out, transcripts;
  std::vector<std::string> grid;
  double temperature = 1.0, top_p = 0.95;
  std::uint64_t seed = 0;
  int workers = 4;
};

struct VoteArgs {
  std::string verdicts, voters = "top3", tie = "negative", out;
};

struct ScoreArgs {
  std::string verdicts, ensemble, ground_truth, out_dir;
  std::string detections, boxes;
  double iou = 0.5;
};

struct NoiseArgs {
  std::vector<double> snr;
  std::uint64_t seed = 0;
  std::string in_dir, out_dir;
};

struct AugmentArgs {
  std::vector<int> rotations;
  double crop = 0.0;
  std::string boxes;
  std::uint64_t seed = 0;
  std::string in_dir, out_dir;
};

struct ReportArgs {
  std::string confusion, out_dir;
};

struct RunArgs {
  std::string config, output_dir;
};

void CmdSample(const SampleArgs& a) {
  std::vector<ImageRequest> requests;
  for (const RoadPolyline& road : ReadRoadsGeoJson(a.roads)) {
    auto points = SamplePolyline(road, a.interval);
    auto expanded = ExpandHeadings(points);
    requests.insert(requests.end(), expanded.begin(), expanded.end());
  }
  std::string csv = RequestsToCsv(requests);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    WriteFile(a.out, csv);
  }
  std::cerr << requests.size() << " image requests\n";
}

int CmdFetch(const FetchArgs& a) {
  ImageryOptions opts;
  opts.endpoint_template = a.endpoint;
  if (const char* key = std::getenv(kImageryKeyEnv)) opts.api_key = key;
  opts.cache_dir = a.cache_dir;
  opts.rate_limit = a.rate_limit;
  opts.offline = a.offline;
  ImageryClient client(opts);
  auto requests = RequestsFromCsv(ReadFile(a.requests));
  std::size_t failed = 0;
  for (const ImageRequest& r : requests) {
    try {
      ImageRecord rec = client.Fetch(r);
      if (!a.out_dir.empty()) {
        WritePng(fs::path(a.out_dir) / (rec.name + ".png"), rec.pixels);
      }
    } catch (const QuotaExceeded&) {
      throw;
    } catch (const Error& e) {
      ++failed;
      std::cerr << r.Name() << ": " << e.what() << "\n";
    }
  }
  std::cerr << requests.size() - failed << " fetched, " << failed
            << " failed, " << client.network_calls() << " network calls\n";
  return failed ? kExitPartial : kExitOk;
}

void CmdIngest(const IngestArgs& a) {
  LabelAliases aliases = a.aliases.empty()
                             ? LabelAliases::Defaults()
                             : LabelAliases::FromJson(ReadFile(a.aliases));
  GroundTruthCorpus corpus = IngestDirectory(a.labelme_dir, aliases);
  std::set<std::string> manifest;
  if (!a.manifest.empty()) {
    manifest = ParseManifest(ReadFile(a.manifest));
  } else {
    for (const LabelmeFile& f : corpus.files) manifest.insert(f.image_id);
  }
  auto annotations = AllAnnotations(corpus);
  PresenceMap presence = ToPresence(annotations, manifest);
  std::string csv = PresenceToCsv(presence);
  if (a.presence_out.empty()) {
    std::cout << csv;
  } else {
    WriteFile(a.presence_out, csv);
  }
  if (!a.boxes_out.empty()) WriteFile(a.boxes_out, BoxesToCsv(annotations));
  std::cerr << corpus.files.size() << " files, " << annotations.size()
            << " annotations, " << corpus.reject_count << " rejected\n";
  for (Indicator i : kCanonicalOrder) {
    std::cerr << "  " << Code(i) << " " << corpus.annotation_totals[Index(i)]
              << "\n";
  }
}

std::vector<ImageRecord> LoadImageSet(const std::string& dir,
                                      const std::string& manifest) {
  LocalImages local = LoadLocal(dir);
  for (const std::string& w : local.warnings) std::cerr << w << "\n";
  if (manifest.empty()) return local.records;
  std::set<std::string> wanted = ParseManifest(ReadFile(manifest));
  std::vector<ImageRecord> out;
  for (ImageRecord& r : local.records) {
    if (wanted.contains(r.name)) out.push_back(std::move(r));
  }
  return out;
}

ProviderParams GridCell(const std::string& cell, const ProviderParams& base) {
  auto parts = Split(cell, ':');
  if (parts.size() != 2) {
    throw ConfigError("grid cells are written temperature:top_p");
  }
  ProviderParams p = base;
  try {
    p.temperature = std::stod(parts[0]);
    p.top_p = std::stod(parts[1]);
  } catch (const std::logic_error&) {
    throw ConfigError("bad grid cell '" + cell + "'");
  }
  return p;
}

int CmdEvaluate(const EvaluateArgs& a) {
  ProviderSpec spec;
  PresenceMap truth;
  if (!a.ground_truth.empty()) truth = PresenceFromCsv(ReadFile(a.ground_truth));
  if (a.provider.ends_with(".json")) {
    spec.kind = ProviderKind::kHttp;
    spec.http_config = a.provider;
    spec.id = fs::path(a.provider).stem().string();
  } else {
    spec.kind = ProviderKind::kMock;
    spec.id = a.provider;
    try {
      spec.rates = MockBehavior::FromPublished(a.provider).rates;
    } catch (const std::out_of_range& e) {
      throw ConfigError(e.what());
    }
  }
  spec.params.model_id = a.model.empty() ? spec.id : a.model;
  spec.params.temperature = a.temperature;
  spec.params.top_p = a.top_p;
  spec.params.Validate();

  LanguagePack pack = BuiltinPack(a.language);
  PromptPlan plan = BuildPlan(pack, ParsePromptMode(a.mode));
  ProviderGateway gateway(a.cache);
  gateway.Register(MakeProvider(spec, truth, pack, a.seed, fs::current_path()),
                   a.workers);
  std::vector<ImageRecord> images = LoadImageSet(a.images, a.manifest);

  if (!a.grid.empty()) {
    if (plan.requests.size() != 1) {
      throw ConfigError("parameter sweeps use the parallel prompt");
    }
    std::vector<ProviderParams> grid;
    for (const std::string& cell : a.grid) grid.push_back(GridCell(cell, spec.params));
    SweepManifest m = Sweep(gateway, spec.id, grid, images,
                            plan.requests.front().text, a.out);
    std::size_t errors = 0;
    for (const SweepCell& c : m.cells) errors += c.errors.size();
    std::cerr << m.cells.size() << " sweep cells, " << errors << " errors\n";
    return errors ? kExitPartial : kExitOk;
  }

  std::vector<EvaluationTask> tasks{{spec.id, spec.id, spec.params}};
  EvaluationResult r = Evaluate(gateway, tasks, images, plan,
                                ParseParseMode(a.parse),
                                {pack.yes_tokens, pack.no_tokens}, a.workers,
                                1.0);
  std::string csv = VerdictsToCsv(r.verdicts);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    WriteFile(a.out, csv);
  }
  if (!a.transcripts.empty()) {
    WriteFile(a.transcripts, TranscriptsToCsv(r.transcripts));
  }
  for (const QueryFailure& f : r.failures) {
    std::cerr << f.image_id << ": " << f.error << "\n";
  }
  std::cerr << r.verdicts.size() << " verdicts, " << r.failures.size()
            << " failures\n";
  return r.failures.empty() ? kExitOk : kExitPartial;
}

std::vector<std::string> VoterList(const std::string& spec) {
  if (spec.find(',') == std::string::npos) {
    try {
      return VoterPreset(spec);
    } catch (const ConfigError&) {
      return {spec};
    }
  }
  return Split(spec, ',');
}

void CmdVote(const VoteArgs& a) {
  auto verdicts = VerdictsFromCsv(ReadFile(a.verdicts));
  EnsembleRun run = VoteAll(verdicts, VoterList(a.voters), ParseTieRule(a.tie));
  std::string csv = EnsembleToCsv(run);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    WriteFile(a.out, csv);
  }
  for (const std::string& id : run.skipped_images) {
    std::cerr << "skipped " << id << ": fewer than 2 verdicts\n";
  }
}

void CmdScore(const ScoreArgs& a) {
  if (!a.detections.empty()) {
    auto preds = PredictionsFromCsv(ReadFile(a.detections));
    auto truths = TruthBoxes(BoxesFromCsv(ReadFile(a.boxes)));
    DetectionReport rep = EvaluateDetections(preds, truths, a.iou);
    std::cout << DetectionMarkdown(rep);
    if (!a.out_dir.empty()) {
      WriteFile(fs::path(a.out_dir) / "detection.csv", DetectionCsv(rep));
    }
    return;
  }
  PresenceMap truth = PresenceFromCsv(ReadFile(a.ground_truth));
  std::vector<MetricsReport> reports;
  if (!a.verdicts.empty()) {
    auto verdicts = VerdictsFromCsv(ReadFile(a.verdicts));
    std::vector<std::string> order;
    for (const ModelVerdict& v : verdicts) {
      if (std::find(order.begin(), order.end(), v.provider_id) == order.end()) {
        order.push_back(v.provider_id);
      }
    }
    for (const std::string& p : order) {
      ConfusionResult c = Confusion(VerdictsFor(verdicts, p), truth);
      reports.push_back(BuildReport(p, c.counts));
    }
  }
  if (!a.ensemble.empty()) {
    PresenceMap ens = PresenceFromCsv(ReadFile(a.ensemble));
    reports.push_back(BuildReport("ensemble", Confusion(ens, truth).counts));
  }
  if (reports.empty()) throw ConfigError("nothing to score");
  if (a.out_dir.empty()) {
    for (const MetricsReport& r : reports) {
      std::cout << "## " << r.series << "\n\n" << ReportMarkdown(r) << "\n";
    }
  } else {
    WriteReports(reports, a.out_dir, "");
  }
}

void CmdNoise(const NoiseArgs& a) {
  LocalImages local = LoadLocal(a.in_dir);
  for (double snr : a.snr) {
    fs::path dir = fs::path(a.out_dir) / ("snr_" + FormatShort(snr));
    for (const ImageRecord& img : local.records) {
      NoiseSpec spec{snr, StableHash64(img.name, a.seed), true};
      WritePng(dir / (img.name + ".png"), AddGaussianNoise(img, spec).pixels);
    }
  }
  std::cerr << local.records.size() << " images x " << a.snr.size()
            << " SNR levels\n";
}

void CmdAugment(const AugmentArgs& a) {
  LocalImages local = LoadLocal(a.in_dir);
  for (int deg : a.rotations) {
    fs::path dir = fs::path(a.out_dir) / ("rot_" + std::to_string(deg));
    for (const ImageRecord& img : local.records) {
      WritePng(dir / (img.name + ".png"), Rotate(img.pixels, deg));
    }
  }
  if (a.crop > 0.0) {
    fs::path dir = fs::path(a.out_dir) / "crop";
    if (a.boxes.empty()) {
      // Without object boxes the whole frame is the region cropped from.
      for (const ImageRecord& img : local.records) {
        BBox frame{0, 0, double(img.pixels.width), double(img.pixels.height)};
        CropResult c =
            RandomCrop(img, frame, a.crop, StableHash64(img.name, a.seed));
        WritePng(dir / (img.name + ".png"), c.image.pixels);
      }
      return;
    }
    std::map<std::string, const ImageRecord*> by_name;
    for (const ImageRecord& r : local.records) by_name[r.name] = &r;
    std::vector<Annotation> cropped;
    int k = 0;
    for (const Annotation& ann : BoxesFromCsv(ReadFile(a.boxes))) {
      auto it = by_name.find(ann.image_id);
      if (it == by_name.end()) continue;
      std::string name = ann.image_id + "_" + std::to_string(k++) + "_" +
                         std::string(Code(ann.indicator));
      CropResult c = RandomCrop(*it->second, ann.bbox, a.crop,
                                StableHash64(name, a.seed));
      WritePng(dir / (name + ".png"), c.image.pixels);
      cropped.push_back({name, ann.indicator, {}, c.bbox});
    }
    WriteFile(dir / "boxes.csv", BoxesToCsv(cropped));
  }
}

void CmdReport(const ReportArgs& a) {
  auto reports = ReportsFromConfusionCsv(ReadFile(a.confusion));
  WriteReports(reports, a.out_dir, "");
}

int CmdRun(const RunArgs& a) {
  ExperimentConfig cfg = ExperimentConfig::Read(a.config);
  if (!a.output_dir.empty()) cfg.output_dir = fs::absolute(a.output_dir);
  RunResult r = Run(cfg);
  for (const MetricsReport& rep : r.reports) {
    std::cout << rep.series << ": accuracy " << FormatFixed(rep.macro_accuracy, 3)
              << "\n";
  }
  std::cerr << "outputs in " << r.output_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neighborhood indicator detection from street-level imagery"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  SampleArgs sample;
  auto* c_sample = app.add_subcommand("sample", "Sample points along roads");
  c_sample->add_option("--roads", sample.roads, "GeoJSON road file")->required();
  c_sample->add_option("--interval", sample.interval, "Spacing in meters");
  c_sample->add_option("-o,--out", sample.out, "Output CSV (stdout if omitted)");

  FetchArgs fetch;
  auto* c_fetch = app.add_subcommand("fetch", "Fetch imagery for sampled requests");
  c_fetch->add_option("--requests", fetch.requests, "Request CSV")->required();
  c_fetch->add_option("--endpoint", fetch.endpoint, "URL template");
  c_fetch->add_option("--cache-dir", fetch.cache_dir, "Image cache directory");
  c_fetch->add_option("--rate-limit", fetch.rate_limit, "Calls per second");
  c_fetch->add_flag("--offline", fetch.offline, "Serve from cache only");
  c_fetch->add_option("--out-dir", fetch.out_dir, "Also write named PNGs here");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Ingest LabelMe annotations");
  c_ingest->add_option("--labelme-dir", ingest.labelme_dir)->required();
  c_ingest->add_option("--aliases", ingest.aliases, "Label alias JSON");
  c_ingest->add_option("--manifest", ingest.manifest, "Image manifest");
  c_ingest->add_option("-o,--out", ingest.presence_out, "Presence CSV");
  c_ingest->add_option("--boxes", ingest.boxes_out, "Box CSV");

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Query one provider over images");
  c_eval->add_option("--images", ev.images)->required();
  c_eval->add_option("--manifest", ev.manifest);
  c_eval->add_option("--ground-truth", ev.ground_truth,
                     "Presence CSV (drives mock providers)");
  c_eval->add_option("--provider", ev.provider,
                     "Mock preset name or HTTP provider config .json")
      ->required();
  c_eval->add_option("--model", ev.model);
  c_eval->add_option("--temperature", ev.temperature);
  c_eval->add_option("--top-p", ev.top_p);
  c_eval->add_option("--seed", ev.seed);
  c_eval->add_option("--mode", ev.mode, "parallel or sequential");
  c_eval->add_option("--language", ev.language);
  c_eval->add_option("--parse", ev.parse, "strict or lenient");
  c_eval->add_option("--cache", ev.cache, "Response cache (JSONL)");
  c_eval->add_option("--workers", ev.workers);
  c_eval->add_option("--grid", ev.grid, "Sweep cells as temperature:top_p")
      ->delimiter(',');
  c_eval->add_option("-o,--out", ev.out,
                     "Verdict CSV, or sweep directory with --grid");
  c_eval->add_option("--transcripts", ev.transcripts);

  VoteArgs vote;
  auto* c_vote = app.add_subcommand("vote", "Majority-vote provider verdicts");
  c_vote->add_option("--verdicts", vote.verdicts)->required();
  c_vote->add_option("--voters", vote.voters, "Preset name or comma list");
  c_vote->add_option("--tie", vote.tie, "abstain, negative or positive");
  c_vote->add_option("-o,--out", vote.out);

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Score verdicts or detections");
  c_score->add_option("--verdicts", score.verdicts);
  c_score->add_option("--ensemble", score.ensemble, "Ensemble CSV from vote");
  c_score->add_option("--ground-truth", score.ground_truth);
  c_score->add_option("--detections", score.detections, "Predicted boxes CSV");
  c_score->add_option("--boxes", score.boxes, "Ground-truth boxes CSV");
  c_score->add_option("--iou", score.iou);
  c_score->add_option("--out-dir", score.out_dir);

  NoiseArgs noise;
  auto* c_noise = app.add_subcommand("noise", "Add Gaussian noise at given SNRs");
  c_noise->add_option("--snr", noise.snr)->delimiter(',')->required();
  c_noise->add_option("--seed", noise.seed);
  c_noise->add_option("in_dir", noise.in_dir)->required();
  c_noise->add_option("out_dir", noise.out_dir)->required();

  AugmentArgs aug;
  auto* c_aug = app.add_subcommand("augment", "Rotate and crop images");
  c_aug->add_option("--rotations", aug.rotations)->delimiter(',');
  c_aug->add_option("--crop", aug.crop, "Crop area fraction");
  c_aug->add_option("--boxes", aug.boxes, "Box CSV for crops");
  c_aug->add_option("--seed", aug.seed);
  c_aug->add_option("in_dir", aug.in_dir)->required();
  c_aug->add_option("out_dir", aug.out_dir)->required();

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Render tables and charts");
  c_report->add_option("--confusion", report.confusion)->required();
  c_report->add_option("--out-dir", report.out_dir)->required();

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Run the full pipeline from a config");
  c_run->add_option("config", run.config)->required();
  c_run->add_option("--output-dir", run.output_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*c_sample) CmdSample(sample);
    if (*c_fetch) return CmdFetch(fetch);
    if (*c_ingest) CmdIngest(ingest);
    if (*c_eval) return CmdEvaluate(ev);
    if (*c_vote) CmdVote(vote);
    if (*c_score) CmdScore(score);
    if (*c_noise) CmdNoise(noise);
    if (*c_aug) CmdAugment(aug);
    if (*c_report) CmdReport(report);
    if (*c_run) return CmdRun(run);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingTemplate& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PartialFailure& e) {
    std::cerr << "partial failure: " << e.what() << "\n";
    return kExitPartial;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOk;
}
