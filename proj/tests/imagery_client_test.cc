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

#include <chrono>
#include <mutex>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "nbhd/errors.h"
#include "nbhd/util.h"
#include "test_support.h"

namespace nbhd {
namespace {

using testing::TempDir;

// Local HTTP server on an ephemeral port, stopped on destruction.
class StubServer {
 public:
  StubServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string Origin() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

ImageRequest SmallRequest(double lat, int heading) {
  ImageRequest r;
  r.sample = {"road", 0, {lat, -83.0}, 0.0};
  r.heading_deg = heading;
  r.width_px = r.height_px = 8;
  return r;
}

std::string PngBody(const Image& img) {
  auto bytes = EncodePng(img);
  return std::string(bytes.begin(), bytes.end());
}

ImageryOptions Options(const StubServer& s, const TempDir& dir) {
  ImageryOptions o;
  o.endpoint_template = s.Origin() +
                        "/img?size={size}&location={lat},{lon}&heading={heading}"
                        "&key={key}";
  o.api_key = "k+y";
  o.cache_dir = dir.path();
  o.backoff_base = std::chrono::milliseconds(1);
  o.timeout = std::chrono::seconds(5);
  return o;
}

TEST_CASE("endpoint expansion") {
  TempDir dir;
  StubServer s;
  ImageryClient client(Options(s, dir));
  CHECK(client.ExpandEndpoint(SmallRequest(40.5, 90)) ==
        s.Origin() + "/img?size=8x8&location=40.5000000,-83.0000000&heading=90"
                     "&key=k%2By");
  ImageryOptions bad = Options(s, dir);
  bad.endpoint_template = s.Origin() + "/img?heading={heading}";
  CHECK_THROWS_AS(ImageryClient{bad}, ConfigError);
}

TEST_CASE("fetch caches and serves repeats without network") {
  TempDir dir;
  StubServer s;
  std::atomic<int> hits{0};
  s.server().Get("/img", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    std::uint8_t shade = req.get_param_value("heading") == "0" ? 10 : 200;
    res.set_content(PngBody(testing::SolidImage(8, 8, shade, 0, 0)), "image/png");
  });
  ImageryClient client(Options(s, dir));
  ImageRecord a = client.Fetch(SmallRequest(40.0, 0));
  ImageRecord again = client.Fetch(SmallRequest(40.0, 0));
  CHECK(hits == 1);
  CHECK(client.network_calls() == 1);
  CHECK(again.pixels == a.pixels);
  CHECK(again.image_id == a.image_id);
  CHECK(a.name == "road_0_h0");

  ImageRecord b = client.Fetch(SmallRequest(40.0, 90));
  CHECK(b.image_id != a.image_id);

  // A fresh client over the same directory still hits the cache.
  ImageryOptions offline = Options(s, dir);
  offline.offline = true;
  ImageryClient cold(offline);
  CHECK(cold.Fetch(SmallRequest(40.0, 0)).pixels == a.pixels);
  CHECK(cold.network_calls() == 0);
  CHECK_THROWS_AS(cold.Fetch(SmallRequest(41.0, 0)), IoError);
}

TEST_CASE("403 exhausts retries into QuotaExceeded") {
  TempDir dir;
  StubServer s;
  std::atomic<int> hits{0};
  s.server().Get("/img", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 403;
  });
  ImageryClient client(Options(s, dir));
  CHECK_THROWS_AS(client.Fetch(SmallRequest(40.0, 0)), QuotaExceeded);
  CHECK(hits == 4);  // first attempt + 3 retries
}

TEST_CASE("5xx is retried then succeeds; 404 fails at once") {
  TempDir dir;
  StubServer s;
  std::atomic<int> hits{0};
  s.server().Get("/img", [&](const httplib::Request& req, httplib::Response& res) {
    if (req.get_param_value("heading") == "180") {
      res.status = 404;
      return;
    }
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    res.set_content(PngBody(testing::SolidImage(8, 8, 1, 2, 3)), "image/png");
  });
  ImageryClient client(Options(s, dir));
  CHECK(client.Fetch(SmallRequest(40.0, 0)).pixels.at(0, 0, 2) == 3);
  CHECK(hits == 3);
  try {
    client.Fetch(SmallRequest(40.0, 180));
    FAIL("expected HttpError");
  } catch (const HttpError& e) {
    CHECK(e.status() == 404);
  }
}

TEST_CASE("wrong image size is a decode error") {
  TempDir dir;
  StubServer s;
  s.server().Get("/img", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(PngBody(testing::SolidImage(4, 4, 0, 0, 0)), "image/png");
  });
  ImageryClient client(Options(s, dir));
  CHECK_THROWS_AS(client.Fetch(SmallRequest(40.0, 0)), DecodeError);
}

TEST_CASE("rate limit holds at the receiving end") {
  TempDir dir;
  StubServer s;
  std::mutex mu;
  std::vector<std::chrono::steady_clock::time_point> arrivals;
  s.server().Get("/img", [&](const httplib::Request&, httplib::Response& res) {
    {
      std::lock_guard lock(mu);
      arrivals.push_back(std::chrono::steady_clock::now());
    }
    res.set_content(PngBody(testing::SolidImage(8, 8, 0, 0, 0)), "image/png");
  });
  ImageryOptions o = Options(s, dir);
  o.rate_limit = 5.0;
  ImageryClient client(o);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int k = 0; k < 3; ++k) client.Fetch(SmallRequest(30.0 + t + k * 0.1, 0));
    });
  }
  for (auto& th : threads) th.join();
  REQUIRE(arrivals.size() == 12);
  std::sort(arrivals.begin(), arrivals.end());
  for (std::size_t i = 5; i < arrivals.size(); ++i) {
    CHECK(arrivals[i] - arrivals[i - 5] >= std::chrono::seconds(1));
  }
}

TEST_CASE("rate limiter below one call per second") {
  RateLimiter limiter(0.5, std::chrono::milliseconds(0));
  auto start = std::chrono::steady_clock::now();
  limiter.Acquire();
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::milliseconds(100));
}

TEST_CASE("local folder loading") {
  TempDir dir;
  CHECK(LoadLocal(dir.path()).records.empty());
  WritePng(dir / "b.png", testing::SolidImage(4, 4, 9, 9, 9));
  WritePng(dir / "a.png", testing::SolidImage(4, 4, 1, 1, 1));
  WriteFile(dir / "broken.png", "not a png");
  WriteFile(dir / "notes.txt", "hello");
  LocalImages local = LoadLocal(dir.path());
  REQUIRE(local.records.size() == 2);
  CHECK(local.records[0].name == "a");
  CHECK(local.records[1].name == "b");
  CHECK(local.records[0].source == ImageSource::kLocal);
  CHECK(local.skipped == 2);
  CHECK_THROWS_AS(LoadLocal(dir / "missing"), IoError);
}

TEST_CASE("bundled fixture loads deterministically") {
  auto first = LoadLocal(testing::FixtureDir() / "e2e" / "images");
  auto second = LoadLocal(testing::FixtureDir() / "e2e" / "images");
  REQUIRE(first.records.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(first.records[i].image_id == second.records[i].image_id);
    CHECK(first.records[i].image_id == DigestPixels(first.records[i].pixels));
  }
  CHECK(first.records.front().name == "scene_00");
}

}  // namespace
}  // namespace nbhd
