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

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drivescene/schema.h"

namespace drivescene {

enum class Relation {
  kAheadOf,
  kBehind,
  kLeftOf,
  kRightOf,
  kAheadLeftOf,
  kAheadRightOf,
  kRearLeftOf,
  kRearRightOf,
};

enum class Action {
  kStopped,
  kMovingForward,
  kMovingBackward,
  kTurnLeft,
  kTurnRight,
  kUTurn,
  kLaneChangeLeft,
  kLaneChangeRight,
  kAccelerate,
  kDecelerate,
};

enum class Interaction {
  kLead,
  kFollow,
  kOvertake,
  kPassing,
  kCoMoving,
  kApproaching,
  kCrossing,
  kYielding,
};

enum class EdgeKind { kRelation, kAction, kInteraction, kTemporal };

enum class VelocitySource { kEstimated, kNative, kUnknown };

template <>
const std::vector<std::string>& enum_names<Relation>();
template <>
const std::vector<std::string>& enum_names<Action>();
template <>
const std::vector<std::string>& enum_names<Interaction>();
template <>
const std::vector<std::string>& enum_names<EdgeKind>();
template <>
const std::vector<std::string>& enum_names<VelocitySource>();

struct ThresholdSet {
  double delta_xy_floor = 1.0;
  double delta_z = 1.5;
  double eps_v = 0.5;
  double eps_a = 0.5;
  double eps_lane = 1.0;
  double delta_int = 30.0;
  double same_lane = 2.0;
  double visibility_view = 0.1;
  double longitudinal_offset = 1.0;
  double overtake_margin = 0.5;
  double comoving_band = 1.0;
  double crossing_proximity = 10.0;

  void validate() const;  // throws InvariantError
  nlohmann::json to_json() const;
  static ThresholdSet from_json(const nlohmann::json& j);
};

// Object index used for the ego vehicle's node in every frame.
inline constexpr int kEgoIndex = -1;

struct NodeId {
  int t = 0;
  int i = 0;
  auto operator<=>(const NodeId&) const = default;
};

struct ObjectNode {
  int t = 0;
  int i = 0;
  std::optional<std::string> track_id;
  Category category = Category::kOther;
  Vec3d center = Vec3d::Zero();
  Vec3d size = Vec3d::Ones();
  double yaw = 0.0;
  Vec3d velocity = Vec3d::Zero();
  VelocitySource velocity_source = VelocitySource::kUnknown;
  std::vector<std::string> cameras;  // canonical order, visibility >= view threshold
  double max_visibility = 0.0;       // over all projections
  bool in_frustum = false;           // has at least one projection

  NodeId id() const { return {t, i}; }
  bool is_ego() const { return i == kEgoIndex; }
};

// Bitmask over Action.
class ActionSet {
 public:
  ActionSet() = default;
  void insert(Action a) { bits_ |= bit(a); }
  void erase(Action a) { bits_ &= static_cast<std::uint16_t>(~bit(a)); }
  bool contains(Action a) const { return (bits_ & bit(a)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::vector<Action> labels() const;
  bool operator==(const ActionSet&) const = default;

 private:
  static std::uint16_t bit(Action a) { return static_cast<std::uint16_t>(1u << static_cast<int>(a)); }
  std::uint16_t bits_ = 0;
};

struct Edge {
  EdgeKind kind;
  NodeId src;
  NodeId dst;
  int label = 0;  // Relation / Action / Interaction value; 0 for temporal
  auto operator<=>(const Edge&) const = default;
};

struct SceneGraph {
  std::string scene_id;
  ThresholdSet thresholds;
  bool temporal_disabled = false;
  std::vector<std::vector<ObjectNode>> nodes;  // [t][i]
  std::vector<ObjectNode> ego;                 // [t]
  std::vector<Edge> edges;                     // sorted

  // Derived lookups, rebuilt by index().
  std::vector<std::vector<ActionSet>> actions;            // [t][i]
  std::vector<std::vector<std::int8_t>> relation_table;   // [t][(a+1)*(n+1)+(b+1)]
  std::vector<std::vector<Edge>> interactions;            // [t]

  const ObjectNode& node(NodeId id) const;
  std::optional<Relation> relation(NodeId a, NodeId b) const;
  std::optional<int> successor(NodeId id) const;  // temporal edge target index in t+1
  std::size_t num_nodes() const;
  void index();
};

struct LocalOffset {
  double s;  // forward
  double u;  // rightward
  double w;  // vertical
};

LocalOffset local_projection(const ObjectNode& src, const ObjectNode& dst);
double adaptive_threshold(const ObjectNode& src, const ThresholdSet& th);
std::optional<Relation> relation_from_offset(double s, double u, double delta);
std::optional<Relation> classify_relation(const ObjectNode& src, const ObjectNode& dst,
                                          const ThresholdSet& th);

// Ego-motion compensated finite difference for track `track` at frame t.
Vec3d estimate_velocity(const Scene& scene, int t, const std::string& track);

// Per-object kinematic history needed by the action rules.
struct ActionInput {
  Category category = Category::kOther;
  Vec3d velocity = Vec3d::Zero();
  double yaw = 0.0;
  Vec3d center = Vec3d::Zero();
  bool has_previous = false;        // same track in t-1
  Vec3d previous_center = Vec3d::Zero();  // compensated into frame t
  double previous_yaw = 0.0;              // compensated into frame t
  // Speeds at t, t-1, t-2, t-3 while known (native or estimated), most recent first.
  std::vector<double> speed_history;
};

// Lateral displacement corrected for the drift a pure turn would produce.
double compensated_lateral(const ActionInput& in);
ActionSet actions_from_input(const ActionInput& in, const ThresholdSet& th);
std::vector<ActionSet> classify_actions(const Scene& scene, const SceneGraph& graph, int t,
                                        const ThresholdSet& th);

std::optional<Interaction> classify_interaction(const ObjectNode& src, const ObjectNode& dst,
                                                ActionSet src_actions, ActionSet dst_actions,
                                                std::optional<double> previous_distance,
                                                const ThresholdSet& th);

std::vector<Edge> link_temporal(const Scene& scene);

// Scene must be calibrated; throws InvariantError otherwise.
SceneGraph build_graph(const Scene& scene, const ThresholdSet& th = {});

nlohmann::json graph_to_json(const SceneGraph& graph);
SceneGraph graph_from_json(const nlohmann::json& j);
std::string serialize_graph(const SceneGraph& graph);

}  // namespace drivescene
