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

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "drivescene/schema.h"
#include "drivescene/synthetic.h"

namespace drivescene {

// Image-text similarity backend: one finite score per prompt.
class SimilarityClient {
 public:
  virtual ~SimilarityClient() = default;
  virtual std::vector<double> similarity(const std::string& image_ref,
                                         const std::vector<std::string>& prompts) = 0;
};

// Map classifier backend: picks one category for a BEV image.
class MapLabelClient {
 public:
  virtual ~MapLabelClient() = default;
  virtual std::string label(const std::string& bev_ref, const std::vector<std::string>& categories) = 0;
};

// Table-driven stub. Unlisted (image, prompt) pairs score 0.
class StubSimilarityClient : public SimilarityClient {
 public:
  StubSimilarityClient() = default;
  explicit StubSimilarityClient(std::map<std::string, std::map<std::string, double>> table)
      : table_(std::move(table)) {}
  std::vector<double> similarity(const std::string& image_ref,
                                 const std::vector<std::string>& prompts) override;
  void set(const std::string& image_ref, const std::string& prompt, double score) {
    table_[image_ref][prompt] = score;
  }
  const auto& table() const { return table_; }

 private:
  std::map<std::string, std::map<std::string, double>> table_;
};

// Table-driven stub. Unlisted images raise ClientError.
class StubMapLabelClient : public MapLabelClient {
 public:
  StubMapLabelClient() = default;
  explicit StubMapLabelClient(std::map<std::string, std::string> table) : table_(std::move(table)) {}
  std::string label(const std::string& bev_ref, const std::vector<std::string>& categories) override;
  void set(const std::string& bev_ref, const std::string& label) { table_[bev_ref] = label; }
  const auto& table() const { return table_; }

 private:
  std::map<std::string, std::string> table_;
};

struct RemoteConfig {
  std::string url;  // http://host:port/path
  double timeout_seconds = 30.0;
  int retries = 2;
};

// POST {"image": ref, "prompts": [...]} -> {"scores": [...]}.
class RemoteSimilarityClient : public SimilarityClient {
 public:
  explicit RemoteSimilarityClient(RemoteConfig config) : config_(std::move(config)) {}
  std::vector<double> similarity(const std::string& image_ref,
                                 const std::vector<std::string>& prompts) override;

 private:
  RemoteConfig config_;
};

// POST {"image": ref, "categories": [...]} -> {"label": name}.
class RemoteMapLabelClient : public MapLabelClient {
 public:
  explicit RemoteMapLabelClient(RemoteConfig config) : config_(std::move(config)) {}
  std::string label(const std::string& bev_ref, const std::vector<std::string>& categories) override;

 private:
  RemoteConfig config_;
};

// Posts a JSON body, retrying transport failures and 5xx responses.
nlohmann::json post_json(const RemoteConfig& config, const nlohmann::json& body);

std::vector<std::string> weather_prompts();
std::vector<std::string> time_of_day_prompts();

std::string front_image_ref(const Scene& scene);
std::string default_bev_ref(const Scene& scene);

Labeled<Weather> classify_weather(const Scene& scene, SimilarityClient& client);
Labeled<TimeOfDay> classify_time_of_day(const Scene& scene, SimilarityClient& client);
Labeled<SceneType> classify_scene_type(const Scene& scene, const std::string& bev_ref,
                                       MapLabelClient& client);

struct MetadataClients {
  SimilarityClient* similarity = nullptr;
  MapLabelClient* map_label = nullptr;
};

struct CompletionResult {
  Scene scene;
  std::map<std::string, std::string> errors;  // attribute -> message
};

// Fills absent attributes. Existing values are never replaced, whatever
// their provenance, so a second pass is a no-op.
CompletionResult complete_metadata(const Scene& scene, const MetadataClients& clients,
                                   const std::string& bev_ref = "");

// Stub responses that reproduce each fixture's layout and a hidden
// weather / time-of-day draw.
struct StubTables {
  StubSimilarityClient similarity;
  StubMapLabelClient map_label;
  nlohmann::json to_json() const;
  static StubTables from_json(const nlohmann::json& j);
};
StubTables fixture_stub_tables(const std::vector<FixtureScene>& pool);

}  // namespace drivescene
