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

#include <algorithm>
#include <cmath>
#include <regex>

#include "drivescene/errors.h"
#include "drivescene/rng.h"
#include "httplib.h"

namespace drivescene {

std::vector<double> StubSimilarityClient::similarity(const std::string& image_ref,
                                                     const std::vector<std::string>& prompts) {
  std::vector<double> out(prompts.size(), 0.0);
  auto it = table_.find(image_ref);
  if (it == table_.end()) return out;
  for (std::size_t k = 0; k < prompts.size(); ++k) {
    auto p = it->second.find(prompts[k]);
    if (p != it->second.end()) out[k] = p->second;
  }
  return out;
}

std::string StubMapLabelClient::label(const std::string& bev_ref, const std::vector<std::string>&) {
  auto it = table_.find(bev_ref);
  if (it == table_.end()) throw ClientError("no stub label for " + bev_ref);
  return it->second;
}

nlohmann::json post_json(const RemoteConfig& config, const nlohmann::json& body) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config.url, m, url_re)) throw ClientError("bad client url " + config.url);
  const std::string path = m[2].matched ? m[2].str() : "/";
  httplib::Client cli(m[1].str());
  const auto secs = static_cast<time_t>(config.timeout_seconds);
  const auto usecs = static_cast<time_t>((config.timeout_seconds - double(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  std::string last;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    auto res = cli.Post(path, body.dump(), "application/json");
    if (!res) {
      last = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last = "status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ClientError(config.url + " returned status " + std::to_string(res->status));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ClientError(config.url + " returned malformed body: " + e.what());
    }
  }
  throw ClientError(config.url + " failed after " + std::to_string(config.retries + 1) +
                    " attempts: " + last);
}

std::vector<double> RemoteSimilarityClient::similarity(const std::string& image_ref,
                                                       const std::vector<std::string>& prompts) {
  const nlohmann::json res = post_json(config_, {{"image", image_ref}, {"prompts", prompts}});
  try {
    return res.at("scores").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ClientError("similarity response lacks scores: " + std::string(e.what()));
  }
}

std::string RemoteMapLabelClient::label(const std::string& bev_ref,
                                        const std::vector<std::string>& categories) {
  const nlohmann::json res = post_json(config_, {{"image", bev_ref}, {"categories", categories}});
  try {
    return res.at("label").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ClientError("map label response lacks label: " + std::string(e.what()));
  }
}

std::vector<std::string> weather_prompts() {
  std::vector<std::string> out;
  for (const auto& name : enum_names<Weather>()) out.push_back("a photo of " + name + " weather");
  return out;
}

std::vector<std::string> time_of_day_prompts() {
  std::vector<std::string> out;
  for (const auto& name : enum_names<TimeOfDay>()) out.push_back("a photo taken at " + name);
  return out;
}

std::string front_image_ref(const Scene& scene) {
  const std::string& cam = front_camera(scene.metadata.source);
  const auto& refs = scene.frames.at(0).image_refs;
  auto it = refs.find(cam);
  if (it == refs.end()) throw MissingImage(scene.scene_id + "/0/" + cam);
  return it->second;
}

std::string default_bev_ref(const Scene& scene) { return scene.scene_id + "/0/bev.png"; }

namespace {

// First maximum wins, so ties resolve to the earliest category.
template <typename E>
E argmax_label(const Scene& scene, SimilarityClient& client, const std::vector<std::string>& prompts,
               const char* what) {
  const std::string ref = front_image_ref(scene);
  std::vector<double> scores;
  try {
    scores = client.similarity(ref, prompts);
  } catch (const ClientError& e) {
    throw ClientError(std::string(what) + " for scene " + scene.scene_id + ": " + e.what());
  }
  if (scores.size() != prompts.size()) {
    throw ClientError(std::string(what) + " for scene " + scene.scene_id + ": expected " +
                      std::to_string(prompts.size()) + " scores, got " + std::to_string(scores.size()));
  }
  std::size_t best = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (!std::isfinite(scores[k])) {
      throw ClientError(std::string(what) + " for scene " + scene.scene_id + ": non-finite score");
    }
    if (scores[k] > scores[best]) best = k;
  }
  return enum_values<E>()[best];
}

}  // namespace

Labeled<Weather> classify_weather(const Scene& scene, SimilarityClient& client) {
  return {argmax_label<Weather>(scene, client, weather_prompts(), "weather"), Provenance::kInferred};
}

Labeled<TimeOfDay> classify_time_of_day(const Scene& scene, SimilarityClient& client) {
  return {argmax_label<TimeOfDay>(scene, client, time_of_day_prompts(), "time_of_day"),
          Provenance::kInferred};
}

Labeled<SceneType> classify_scene_type(const Scene& scene, const std::string& bev_ref,
                                       MapLabelClient& client) {
  std::string name;
  try {
    name = client.label(bev_ref, enum_names<SceneType>());
  } catch (const ClientError& e) {
    throw ClientError("scene_type for scene " + scene.scene_id + ": " + e.what());
  }
  const auto value = enum_from_string<SceneType>(name);
  if (!value) throw InvalidCategory("scene_type client returned '" + name + "' for " + scene.scene_id);
  return {*value, Provenance::kInferred};
}

CompletionResult complete_metadata(const Scene& scene, const MetadataClients& clients,
                                   const std::string& bev_ref) {
  CompletionResult out{scene, {}};
  SceneMetadata& md = out.scene.metadata;
  auto attempt = [&](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      out.errors[field] = e.what();
    }
  };
  if (!md.weather) {
    attempt("weather", [&] {
      if (!clients.similarity) throw ClientError("no similarity client configured");
      md.weather = classify_weather(scene, *clients.similarity);
    });
  }
  if (!md.time_of_day) {
    attempt("time_of_day", [&] {
      if (!clients.similarity) throw ClientError("no similarity client configured");
      md.time_of_day = classify_time_of_day(scene, *clients.similarity);
    });
  }
  if (!md.scene_type) {
    attempt("scene_type", [&] {
      if (!clients.map_label) throw ClientError("no map label client configured");
      md.scene_type = classify_scene_type(scene, bev_ref.empty() ? default_bev_ref(scene) : bev_ref,
                                          *clients.map_label);
    });
  }
  return out;
}

nlohmann::json StubTables::to_json() const {
  return {{"similarity", similarity.table()}, {"map_label", map_label.table()}};
}

StubTables StubTables::from_json(const nlohmann::json& j) {
  StubTables t;
  t.similarity = StubSimilarityClient(
      j.at("similarity").get<std::map<std::string, std::map<std::string, double>>>());
  t.map_label = StubMapLabelClient(j.at("map_label").get<std::map<std::string, std::string>>());
  return t;
}

StubTables fixture_stub_tables(const std::vector<FixtureScene>& pool) {
  StubTables t;
  const auto wp = weather_prompts();
  const auto tp = time_of_day_prompts();
  for (const FixtureScene& fx : pool) {
    const Scene& s = fx.scene;
    const std::string ref = front_image_ref(s);
    Rng rng(hash_string(s.scene_id));
    // Peak on one hidden label, small deterministic noise elsewhere.
    const std::size_t w = rng.index(wp.size());
    for (std::size_t k = 0; k < wp.size(); ++k) t.similarity.set(ref, wp[k], k == w ? 0.9 : rng.uniform(0, 0.3));
    const std::size_t d = rng.index(tp.size());
    for (std::size_t k = 0; k < tp.size(); ++k) t.similarity.set(ref, tp[k], k == d ? 0.9 : rng.uniform(0, 0.3));
    t.map_label.set(default_bev_ref(s), to_string(fx.road));
  }
  return t;
}

}  // namespace drivescene
