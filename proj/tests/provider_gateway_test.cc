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

#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "nbhd/errors.h"
#include "nbhd/reference_rates.h"
#include "nbhd/util.h"
#include "test_support.h"

namespace nbhd {
namespace {

using nlohmann::json;
using testing::TempDir;

ImageRecord Img(const std::string& name, std::uint8_t shade = 50) {
  return MakeRecord(testing::SolidImage(4, 4, shade, shade, shade), name,
                    ImageSource::kLocal);
}

IndicatorVector AllTrue() {
  return IndicatorVector({true, true, true, true, true, true});
}

MockBehavior Perfect(std::uint64_t seed) {
  MockBehavior b;
  b.rng_seed = seed;
  return b;  // all rates 1.0
}

std::string ParallelPrompt() {
  return BuildParallel(BuiltinPack("en")).requests[0].text;
}

TEST_CASE("perfect mock echoes the ground truth") {
  MockProvider mock("m", Perfect(7), {{"x", AllTrue()}});
  CHECK(mock.Complete(Img("x"), ParallelPrompt(), {}) ==
        "Yes, Yes, Yes, Yes, Yes, Yes");
  IndicatorVector some;
  some.Set(Indicator::kStreetlight, true);
  MockProvider mock2("m", Perfect(7), {{"x", some}});
  // Prompt order MR, SR, SW, SL, PL, AP.
  CHECK(mock2.Complete(Img("x"), ParallelPrompt(), {}) == "No, No, No, Yes, No, No");
}

TEST_CASE("mock answers single questions and unknown prompts") {
  MockProvider mock("m", Perfect(1), {{"x", AllTrue()}});
  auto seq = BuildSequential(BuiltinPack("en"));
  CHECK(mock.Complete(Img("x"), seq.requests[0].text, {}) == "Yes");
  CHECK(mock.Complete(Img("x"), "Describe the picture.", {}) ==
        "I cannot tell from this image.");
  CHECK_THROWS_AS(mock.Complete(Img("nobody"), ParallelPrompt(), {}), ConfigError);
}

TEST_CASE("mock yes-rate follows the published recall") {
  MockBehavior b = MockBehavior::FromPublished("gemini-1.5-pro", 3);
  CHECK(b.rates[Index(Indicator::kStreetlight)].tpr == 0.96);
  MockProvider mock("gemini", b, {});
  int yes = 0;
  for (int i = 0; i < 10000; ++i) {
    yes += mock.Draw("img" + std::to_string(i), Indicator::kStreetlight, true, false);
  }
  CHECK(std::abs(yes / 10000.0 - 0.96) <= 0.01);

  // The negative-class rate reproduces the published accuracy at the
  // implied prevalence.
  const PublishedRow& row = PublishedTableFor("gemini-1.5-pro").rows[0];
  ClassRates r = RatesFromPublished(row.precision, row.recall, row.accuracy);
  CHECK(r.prevalence * r.tpr + (1 - r.prevalence) * r.tnr ==
        doctest::Approx(row.accuracy));
  double precision = r.prevalence * r.tpr /
                     (r.prevalence * r.tpr + (1 - r.prevalence) * (1 - r.tnr));
  CHECK(precision == doctest::Approx(row.precision));
  CHECK_THROWS(MockBehavior::FromPublished("gpt-9"));
}

TEST_CASE("mock draws depend on mode and seed only through the hash") {
  MockBehavior b = MockBehavior::FromPublished("grok-2", 11);
  MockProvider a("grok", b, {}), same("grok", b, {});
  int differ_mode = 0;
  for (int i = 0; i < 200; ++i) {
    std::string id = "i" + std::to_string(i);
    CHECK(a.Draw(id, Indicator::kSingleLaneRoad, false, false) ==
          same.Draw(id, Indicator::kSingleLaneRoad, false, false));
    differ_mode += a.Draw(id, Indicator::kSingleLaneRoad, false, false) !=
                   a.Draw(id, Indicator::kSingleLaneRoad, false, true);
  }
  CHECK(differ_mode > 0);
  MockBehavior bad;
  bad.rates[0].tpr = 1.5;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
}

TEST_CASE("gateway caches identical queries") {
  TempDir dir;
  auto path = dir / "responses.jsonl";
  std::string first_text;
  {
    ProviderGateway gw(path);
    gw.Register(std::make_shared<MockProvider>(
        "m", MockBehavior::FromPublished("claude-3.7", 5),
        PresenceMap{{"x", AllTrue()}}));
    ProviderResponse a = gw.Query("m", Img("x"), ParallelPrompt(), {});
    ProviderResponse b = gw.Query("m", Img("x"), ParallelPrompt(), {});
    CHECK_FALSE(a.cached);
    CHECK(b.cached);
    CHECK(a.raw_text == b.raw_text);
    CHECK(a.cache_key == b.cache_key);
    CHECK(gw.cache().size() == 1);
    first_text = a.raw_text;

    ProviderParams hot;
    hot.temperature = 1.5;
    CHECK_FALSE(gw.Query("m", Img("x"), ParallelPrompt(), hot).cached);
    CHECK(gw.cache().size() == 2);
  }
  // The JSONL file survives; a new gateway answers from it.
  ProviderGateway again(path);
  again.Register(std::make_shared<MockProvider>("m", Perfect(0), PresenceMap{}));
  ProviderResponse c = again.Query("m", Img("x"), ParallelPrompt(), {});
  CHECK(c.cached);
  CHECK(c.raw_text == first_text);
  auto lines = Split(ReadFile(path), '\n');
  CHECK(json::parse(lines[0]).at("raw_text") == first_text);
}

TEST_CASE("gateway argument checks") {
  TempDir dir;
  ProviderGateway gw(dir / "c.jsonl");
  gw.Register(std::make_shared<MockProvider>("m", Perfect(0),
                                             PresenceMap{{"x", AllTrue()}}));
  CHECK(gw.Has("m"));
  CHECK_FALSE(gw.Has("z"));
  CHECK_THROWS_AS(gw.Query("m", Img("x"), "", {}), ConfigError);
  CHECK_THROWS_AS(gw.Query("m", ImageRecord{}, "q", {}), DecodeError);
  CHECK_THROWS_AS(gw.Query("z", Img("x"), "q", {}), ConfigError);
  ProviderParams bad;
  bad.top_p = 0.0;
  CHECK_THROWS_AS(gw.Query("m", Img("x"), "q", bad), ConfigError);
  bad = {};
  bad.temperature = -0.1;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
}

TEST_CASE("cache keys separate every input") {
  ProviderParams p;
  std::string k = ResponseCache::Key("a", p, "img", "prompt");
  CHECK(k == ResponseCache::Key("a", p, "img", "prompt"));
  CHECK(k != ResponseCache::Key("b", p, "img", "prompt"));
  CHECK(k != ResponseCache::Key("a", p, "img2", "prompt"));
  CHECK(k != ResponseCache::Key("a", p, "img", "prompt!"));
  ProviderParams q = p;
  q.top_p = 0.5;
  CHECK(k != ResponseCache::Key("a", q, "img", "prompt"));
  q = p;
  q.model_id = "other";
  CHECK(k != ResponseCache::Key("a", q, "img", "prompt"));
}

TEST_CASE("parameter sweeps") {
  TempDir dir;
  ProviderGateway gw(dir / "c.jsonl");
  gw.Register(std::make_shared<MockProvider>(
      "m", Perfect(0), PresenceMap{{"x", AllTrue()}, {"y", {}}}));
  std::vector<ImageRecord> images{Img("x", 1), Img("y", 2)};

  std::vector<ProviderParams> temps(3);
  temps[0].temperature = 0.1;
  temps[1].temperature = 1.0;
  temps[2].temperature = 1.5;
  SweepManifest m = Sweep(gw, "m", temps, images, ParallelPrompt(), dir / "temp");
  REQUIRE(m.cells.size() == 3);
  for (const SweepCell& c : m.cells) {
    CHECK(std::filesystem::exists(c.dir / "responses.csv"));
    CHECK(c.cache_keys.size() == 2);
    CHECK(c.errors.empty());
  }
  CHECK(m.cells[0].dir.filename() == "cell_000_t0.1_p0.95");
  CHECK(std::filesystem::exists(dir / "temp" / "sweep_manifest.json"));

  std::vector<ProviderParams> tops(3);
  tops[0].top_p = 0.5;
  tops[1].top_p = 0.75;
  tops[2].top_p = 0.95;
  CHECK(Sweep(gw, "m", tops, images, ParallelPrompt(), dir / "topp").cells.size() == 3);
  int dirs = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "topp")) {
    dirs += e.is_directory();
  }
  CHECK(dirs == 3);

  std::vector<ProviderParams> empty;
  CHECK_THROWS_AS(Sweep(gw, "m", empty, images, ParallelPrompt(), dir / "none"),
                  ConfigError);
  CHECK_FALSE(std::filesystem::exists(dir / "none"));
}

TEST_CASE("request templates") {
  json tmpl = json::parse(R"({"model":"{{model}}","temperature":"{{temperature}}",
    "top_p":"{{top_p}}","max_tokens":"{{max_tokens}}",
    "messages":[{"content":[{"text":"{{prompt}}"},
                            {"url":"data:image/png;base64,{{image_base64}}"}]}]})");
  ProviderParams p;
  p.model_id = "vision-1";
  p.temperature = 0.1;
  json body = RenderRequest(tmpl, "Q \"quoted\"", "QUJD", p);
  CHECK(body["model"] == "vision-1");
  CHECK(body["temperature"].is_number());
  CHECK(body["temperature"] == 0.1);
  CHECK(body["top_p"] == 0.95);
  CHECK(body["max_tokens"] == 64);
  CHECK(body["messages"][0]["content"][0]["text"] == "Q \"quoted\"");
  CHECK(body["messages"][0]["content"][1]["url"] == "data:image/png;base64,QUJD");
}

TEST_CASE("HTTP provider against a local stub") {
  httplib::Server server;
  std::string seen_auth, seen_body;
  int status = 200;
  std::string reply = R"({"choices":[{"message":{"content":"Yes, No, No, Yes, No, Yes"}}]})";
  server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.status = status;
    res.set_content(reply, "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpProviderConfig cfg = HttpProviderConfig::FromJson(json::parse(
      R"({"id":"stub","endpoint":"http://127.0.0.1:)" + std::to_string(port) +
      R"(/v1/chat","auth_header":"Authorization","auth_prefix":"Bearer ",
      "request":{"model":"{{model}}","prompt":"{{prompt}}","image":"{{image_base64}}",
                 "temperature":"{{temperature}}"},
      "response_path":"/choices/0/message/content","timeout_s":5})"));
  HttpProvider provider(cfg, "secret");
  ProviderParams p;
  p.model_id = "m1";
  CHECK(provider.Complete(Img("x"), "the prompt", p) == "Yes, No, No, Yes, No, Yes");
  CHECK(seen_auth == "Bearer secret");
  json sent = json::parse(seen_body);
  CHECK(sent["prompt"] == "the prompt");
  CHECK(sent["model"] == "m1");
  CHECK_FALSE(sent["image"].get<std::string>().empty());

  reply = R"({"choices":[]})";
  CHECK_THROWS_AS(provider.Complete(Img("x"), "q", p), MalformedResponse);
  reply = "<html>";
  CHECK_THROWS_AS(provider.Complete(Img("x"), "q", p), MalformedResponse);
  status = 500;
  try {
    provider.Complete(Img("x"), "q", p);
    FAIL("expected HttpError");
  } catch (const HttpError& e) {
    CHECK(e.status() == 500);
  }
  server.stop();
  t.join();

  CHECK_THROWS_AS(HttpProviderConfig::FromJson(json::parse(R"({"id":"x"})")),
                  ConfigError);
}

}  // namespace
}  // namespace nbhd
