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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drivescene/graph.h"
#include "drivescene/render.h"
#include "drivescene/schema.h"
#include "json.hpp"

namespace drivescene {

enum class Ability { kConst, kUnders, kReas };

enum class Task {
  kSceneConstruction,
  kPerspectiveCameraMatching,
  kEgoRotation,
  kCameraOrdering,
  kLeaveOneCameraOut,
  kMultiStepReasoning,
  kAllocentricImagination,
  kSpatialCompatibility,
  kMultiviewObjectMatching,
  kMultiviewDepthAwareness,
  kRelativeDirection,
  kRelativeDistance,
  kDistanceAbsolute,
  kCountingAbsolute,
  kEventOrdering,
  kTrajectoryReasoning,
  kOcclusionAwareness,
  kObjectManipulation,
  kActionReasoning,
  kInteractionReasoning,
};

template <>
const std::vector<std::string>& enum_names<Ability>();
template <>
const std::vector<std::string>& enum_names<Task>();

Ability ability_of(Task task);
bool is_numeric_task(Task task);
bool is_temporal_task(Task task);

// Prompt prepended to interaction, event-ordering and multi-step questions.
const std::string& interaction_definition_prompt();

struct QAItem {
  std::string item_id;
  Task task = Task::kSceneConstruction;
  std::string question;
  std::string preamble;  // empty or the interaction definition prompt
  std::vector<AssetSpec> assets;
  std::vector<std::string> options;  // empty for numeric tasks
  std::optional<int> answer_index;
  std::optional<double> answer_value;
  std::string scene_id;
  int frame_begin = 0;
  int frame_end = 0;
  nlohmann::json certificate = nlohmann::json::object();
  std::uint64_t seed = 0;
  nlohmann::json conditions = nlohmann::json::object();  // source, weather, time_of_day, scene_type

  Ability ability() const { return ability_of(task); }
  bool numeric() const { return is_numeric_task(task); }
  std::vector<std::string> asset_paths() const;
  // Question, options, answer and assets; equal keys mean duplicate items.
  std::string content_key() const;

  nlohmann::json to_json() const;
  static QAItem from_json(const nlohmann::json& j);
};

struct GeneratorConfig {
  std::uint64_t seed = 0;
  int num_options = 4;
  int rotation_gap = 3;               // frames between ego-rotation timestamps
  int masked_sequence = 6;            // leave-one-camera-out video length
  int clip_length = 8;                // temporal task clip
  int context_frames = 4;             // event ordering context
  double future_seconds = 3.0;        // event ordering horizon
  double occlusion_visibility = 0.6;  // theta_v
  int max_occluded = 3;
  double p_same = 0.75;               // object matching
  double p_cross_view = 0.75;         // interaction pairs in disjoint cameras
  double depth_margin = 2.0;
  double compat_max = 8.0;
  double compat_pass = 5.0;
  double distance_min = 5.0;
  double distance_max = 50.0;
  double manipulation_dt = 0.5;
  double nearby_radius = 30.0;
  int attempts_per_item = 20;  // attempt budget multiplier on the quota

  void validate() const;
  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
};

struct SceneBundle {
  Scene scene;  // calibrated, metadata completed
  SceneGraph graph;
};

// Builds one item for `task` from `bundle`; `pool` supplies cross-scene
// distractors. Same inputs and seed give the same item. Throws
// NoEligibleCandidates naming the failed constraint.
QAItem generate_item(Task task, const SceneBundle& bundle, const std::vector<SceneBundle>& pool,
                     const GeneratorConfig& cfg, std::uint64_t seed);

using Quotas = std::map<Task, int>;
// Per-task counts whose ability shares follow the reference distribution.
Quotas default_quotas();
Quotas quotas_from_json(const nlohmann::json& j);

struct TaskReport {
  int quota = 0;
  int attempts = 0;
  int successes = 0;
  int duplicates = 0;
  std::map<std::string, int> rejections;  // constraint -> count
};

struct GenerationReport {
  std::map<Task, TaskReport> tasks;
  bool has_shortfall() const;
  nlohmann::json to_json() const;
};

struct Corpus {
  std::vector<QAItem> items;  // sorted by (task, scene_id, seed)
  GenerationReport report;
};

// Attempts scenes round-robin until each quota is met or the attempt budget
// runs out. Tasks run on up to `jobs` threads; output does not depend on it.
Corpus generate_all(const std::vector<SceneBundle>& pool, const Quotas& quotas,
                    const GeneratorConfig& cfg, int jobs = 1);

std::string serialize_corpus(const std::vector<QAItem>& items);  // JSONL
std::vector<QAItem> parse_corpus(std::string_view jsonl);

// Text forms shared by generators and checkers.
const std::string& relation_phrase(Relation r);         // "ahead and to your left"
const std::string& relation_short_phrase(Relation r);   // "ahead left"
const std::string& cardinal_phrase(Relation r);         // allocentric; throws for diagonals
const std::string& action_phrase(Action a);             // "turning left"
const std::string& action_event_phrase(Action a);       // "turns left"
const std::string& interaction_phrase(Interaction m);   // "following"
std::string category_count_phrase(const std::map<Category, int>& counts);  // "2 cars, 1 pedestrian"
std::string category_plural(Category c);

// Relation label seen after the observer's heading turns by `degrees`
// (multiple of 90).
Relation rotate_relation(Relation r, int degrees);

inline const std::vector<double>& rotation_bin_edges() {
  static const std::vector<double> edges = {0, 15, 30, 45, 60, 75, 90, 120, 150, 180};
  return edges;
}
int rotation_bin(double degrees);
std::string rotation_bin_label(int bin);  // "15-30 degrees"

double distance_bin_size(double d);
std::string distance_bin_label(double lo, double size);  // "7-8 meters"

std::string expand_video(int frames);  // "Frame 1: <image> Frame 2: <image>"

}  // namespace drivescene
