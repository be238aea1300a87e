// Copyright 2026 The Drivescene Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "drivescene/metadata.h"

#include <atomic>
#include <chrono>
#include <thread>

#include <gtest/gtest.h>

#include "drivescene/errors.h"
#include "drivescene/rng.h"
#include "httplib.h"

namespace drivescene {
namespace {

Scene fixture(Source source) {
  for (const auto& fx : make_fixture_pool(7)) {
    if (fx.scene.metadata.source == source) return fx.scene;
  }
  throw std::runtime_error("no fixture");
}

TEST(ClassifyWeather, ArgmaxAndTies) {
  const Scene s = fixture(Source::kAv2);
  StubSimilarityClient stub;
  EXPECT_EQ(classify_weather(s, stub).value, Weather::kCloudy);  // all zero
  stub.set(front_image_ref(s), "a photo of rain weather", 0.8);
  const auto got = classify_weather(s, stub);
  EXPECT_EQ(got.value, Weather::kRain);
  EXPECT_EQ(got.provenance, Provenance::kInferred);
}

TEST(ClassifyWeather, OneHotVectorsAreExhaustive) {
  const Scene s = fixture(Source::kAv2);
  const auto names = enum_names<Weather>();
  ASSERT_EQ(names.size(), 8u);
  std::set<Weather> seen;
  for (std::size_t k = 0; k < names.size(); ++k) {
    StubSimilarityClient stub;
    stub.set(front_image_ref(s), "a photo of " + names[k] + " weather", 1.0);
    const Weather w = classify_weather(s, stub).value;
    EXPECT_EQ(to_string(w), names[k]);
    seen.insert(w);
  }
  EXPECT_EQ(seen.size(), 8u);
}

TEST(ClassifyTimeOfDay, OneHotAndTie) {
  const Scene s = fixture(Source::kAv2);
  StubSimilarityClient tie;
  EXPECT_EQ(classify_time_of_day(s, tie).value, TimeOfDay::kDaytime);
  std::set<TimeOfDay> seen;
  for (const auto& name : enum_names<TimeOfDay>()) {
    StubSimilarityClient stub;
    stub.set(front_image_ref(s), "a photo taken at " + name, 1.0);
    const TimeOfDay t = classify_time_of_day(s, stub).value;
    EXPECT_EQ(to_string(t), name);
    seen.insert(t);
  }
  EXPECT_EQ(seen.size(), 3u);
}

class BrokenClient : public SimilarityClient {
 public:
  explicit BrokenClient(int mode) : mode_(mode) {}
  std::vector<double> similarity(const std::string&, const std::vector<std::string>& p) override {
    if (mode_ == 0) throw ClientError("backend down");
    if (mode_ == 1) return {1.0};
    return std::vector<double>(p.size(), std::nan(""));
  }

 private:
  int mode_;
};

TEST(ClassifyWeather, ErrorsCarryContext) {
  Scene s = fixture(Source::kAv2);
  for (int mode = 0; mode < 3; ++mode) {
    BrokenClient c(mode);
    try {
      classify_weather(s, c);
      FAIL() << "mode " << mode;
    } catch (const ClientError& e) {
      EXPECT_NE(std::string(e.what()).find(s.scene_id), std::string::npos);
    }
  }
  s.frames[0].image_refs.clear();
  StubSimilarityClient stub;
  EXPECT_THROW(classify_weather(s, stub), MissingImage);
}

TEST(ClassifySceneType, StubContract) {
  const Scene s = fixture(Source::kAv2);
  StubMapLabelClient stub;
  stub.set("bev.png", "straight_road");
  const auto got = classify_scene_type(s, "bev.png", stub);
  EXPECT_EQ(got.value, SceneType::kStraightRoad);
  EXPECT_EQ(got.provenance, Provenance::kInferred);
  stub.set("bev.png", "freeway");
  EXPECT_THROW(classify_scene_type(s, "bev.png", stub), InvalidCategory);
  EXPECT_THROW(classify_scene_type(s, "other.png", stub), ClientError);
}

TEST(CompleteMetadata, AvailabilityTable) {
  const auto pool = make_fixture_pool(7);
  StubTables tables = fixture_stub_tables(pool);
  MetadataClients clients{&tables.similarity, &tables.map_label};

  const Scene truck = fixture(Source::kTruckscenes);
  const auto t = complete_metadata(truck, clients);
  EXPECT_TRUE(t.errors.empty());
  EXPECT_EQ(t.scene.metadata.weather, truck.metadata.weather);
  EXPECT_EQ(t.scene.metadata.weather->provenance, Provenance::kSourceNative);
  EXPECT_EQ(t.scene.metadata.time_of_day->provenance, Provenance::kSourceNative);
  EXPECT_EQ(t.scene.metadata.scene_type->provenance, Provenance::kInferred);

  const Scene av2 = fixture(Source::kAv2);
  const auto a = complete_metadata(av2, clients);
  EXPECT_EQ(a.scene.metadata.weather->provenance, Provenance::kInferred);
  EXPECT_EQ(a.scene.metadata.time_of_day->provenance, Provenance::kInferred);
  EXPECT_EQ(a.scene.metadata.scene_type->provenance, Provenance::kInferred);

  // The stub recovers the layout each fixture was drawn with.
  for (const auto& fx : pool) {
    EXPECT_EQ(complete_metadata(fx.scene, clients).scene.metadata.scene_type->value, fx.road);
  }
}

TEST(CompleteMetadata, HumanVerifiedWins) {
  Scene s = fixture(Source::kAv2);
  s.metadata.weather = Labeled<Weather>{Weather::kSnow, Provenance::kHumanVerified};
  StubSimilarityClient stub;
  stub.set(front_image_ref(s), "a photo of sunny weather", 5.0);
  StubMapLabelClient map;
  map.set(default_bev_ref(s), "t_intersection");
  const auto r = complete_metadata(s, {&stub, &map});
  EXPECT_EQ(r.scene.metadata.weather->value, Weather::kSnow);
  EXPECT_EQ(r.scene.metadata.weather->provenance, Provenance::kHumanVerified);
}

TEST(CompleteMetadata, PartialCompletionReportsErrors) {
  const Scene s = fixture(Source::kAv2);
  StubSimilarityClient stub;
  const auto r = complete_metadata(s, {&stub, nullptr});
  EXPECT_TRUE(r.scene.metadata.weather.has_value());
  EXPECT_TRUE(r.scene.metadata.time_of_day.has_value());
  EXPECT_FALSE(r.scene.metadata.scene_type.has_value());
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_TRUE(r.errors.count("scene_type"));
}

// Random provenance assignments: precedence and idempotence per field.
TEST(CompleteMetadata, PrecedenceAndIdempotenceProperty) {
  const auto pool = make_fixture_pool(7);
  StubTables tables = fixture_stub_tables(pool);
  MetadataClients clients{&tables.similarity, &tables.map_label};
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Scene s = pool[rng.index(pool.size())].scene;
    auto draw = [&](auto& field, auto values) {
      const int kind = static_cast<int>(rng.index(4));  // absent, native, inferred, human
      if (kind == 0) {
        field.reset();
        return;
      }
      const Provenance p = kind == 1 ? Provenance::kSourceNative
                           : kind == 2 ? Provenance::kInferred
                                       : Provenance::kHumanVerified;
      field = {values[rng.index(values.size())], p};
    };
    draw(s.metadata.weather, enum_values<Weather>());
    draw(s.metadata.time_of_day, enum_values<TimeOfDay>());
    draw(s.metadata.scene_type, enum_values<SceneType>());
    const Scene once = complete_metadata(s, clients).scene;
    const Scene twice = complete_metadata(once, clients).scene;
    EXPECT_EQ(serialize_canonical(once), serialize_canonical(twice));
    auto check = [](const auto& before, const auto& after) {
      ASSERT_TRUE(after.has_value());
      if (before) {
        EXPECT_EQ(*after, *before);
      } else {
        EXPECT_EQ(after->provenance, Provenance::kInferred);
      }
    };
    check(s.metadata.weather, once.metadata.weather);
    check(s.metadata.time_of_day, once.metadata.time_of_day);
    check(s.metadata.scene_type, once.metadata.scene_type);
  }
}

TEST(StubTables, JsonRoundTrip) {
  const auto tables = fixture_stub_tables(make_fixture_pool(7));
  const auto back = StubTables::from_json(nlohmann::json::parse(tables.to_json().dump()));
  EXPECT_EQ(back.to_json(), tables.to_json());
}

class LocalServer {
 public:
  explicit LocalServer(std::function<void(httplib::Server&)> setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(RemoteClients, RoundTripAndRetries) {
  std::atomic<int> calls{0};
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/sim", [&](const httplib::Request& req, httplib::Response& res) {
      if (calls++ < 2) {
        res.status = 503;
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      std::vector<double> scores(body["prompts"].size(), 0.0);
      scores[2] = 1.0;
      res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
    });
    s.Post("/map", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"label": "y_intersection"})", "application/json");
    });
  });
  const Scene s = fixture(Source::kAv2);
  RemoteSimilarityClient sim({srv.url("/sim"), 5.0, 2});
  EXPECT_EQ(classify_weather(s, sim).value, Weather::kSnow);
  EXPECT_EQ(calls.load(), 3);
  calls = 0;
  RemoteSimilarityClient impatient({srv.url("/sim"), 5.0, 1});
  EXPECT_THROW(classify_weather(s, impatient), ClientError);
  RemoteMapLabelClient map({srv.url("/map"), 5.0, 2});
  EXPECT_EQ(classify_scene_type(s, "x", map).value, SceneType::kYIntersection);
}

TEST(RemoteClients, TimeoutBecomesClientError) {
  std::atomic<int> calls{0};
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/slow", [&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      std::this_thread::sleep_for(std::chrono::milliseconds(600));
      res.set_content(R"({"scores": []})", "application/json");
    });
  });
  RemoteSimilarityClient sim({srv.url("/slow"), 0.2, 2});
  EXPECT_THROW(sim.similarity("x", {"a"}), ClientError);
  EXPECT_EQ(calls.load(), 3);
  EXPECT_EQ(RemoteConfig{}.timeout_seconds, 30.0);
  EXPECT_EQ(RemoteConfig{}.retries, 2);
}

}  // namespace
}  // namespace drivescene
