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

#include "drivescene/graph.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "drivescene/errors.h"

namespace drivescene {

using nlohmann::json;

template <>
const std::vector<std::string>& enum_names<Relation>() {
  static const std::vector<std::string> n = {"ahead_of",      "behind",         "left_of",
                                             "right_of",      "ahead_left_of",  "ahead_right_of",
                                             "rear_left_of",  "rear_right_of"};
  return n;
}
template <>
const std::vector<std::string>& enum_names<Action>() {
  static const std::vector<std::string> n = {
      "stopped",   "moving_forward",   "moving_backward",   "turn_left",  "turn_right",
      "u_turn",    "lane_change_left", "lane_change_right", "accelerate", "decelerate"};
  return n;
}
template <>
const std::vector<std::string>& enum_names<Interaction>() {
  static const std::vector<std::string> n = {"lead",      "follow",      "overtake", "passing",
                                             "co_moving", "approaching", "crossing", "yielding"};
  return n;
}
template <>
const std::vector<std::string>& enum_names<EdgeKind>() {
  static const std::vector<std::string> n = {"relation", "action", "interaction", "temporal"};
  return n;
}
template <>
const std::vector<std::string>& enum_names<VelocitySource>() {
  static const std::vector<std::string> n = {"estimated", "native", "unknown"};
  return n;
}

std::vector<Action> ActionSet::labels() const {
  std::vector<Action> out;
  for (Action a : enum_values<Action>()) {
    if (contains(a)) out.push_back(a);
  }
  return out;
}

void ThresholdSet::validate() const {
  const json j = to_json();
  for (const auto& [k, v] : j.items()) {
    if (!(v.get<double>() > 0.0)) throw InvariantError("thresholds." + k, "must be positive");
  }
}

json ThresholdSet::to_json() const {
  return {{"delta_xy_floor", delta_xy_floor},
          {"delta_z", delta_z},
          {"eps_v", eps_v},
          {"eps_a", eps_a},
          {"eps_lane", eps_lane},
          {"delta_int", delta_int},
          {"same_lane", same_lane},
          {"visibility_view", visibility_view},
          {"longitudinal_offset", longitudinal_offset},
          {"overtake_margin", overtake_margin},
          {"comoving_band", comoving_band},
          {"crossing_proximity", crossing_proximity}};
}

ThresholdSet ThresholdSet::from_json(const json& j) {
  ThresholdSet t;
  if (!j.is_object()) throw SchemaError("thresholds", "expected object");
  const json defaults = t.to_json();
  for (const auto& [k, v] : j.items()) {
    if (!defaults.contains(k)) throw SchemaError("thresholds." + k, "unknown threshold");
    if (!v.is_number()) throw SchemaError("thresholds." + k, "expected number");
  }
  auto get = [&](const char* k, double& dst) {
    if (j.contains(k)) dst = j[k].get<double>();
  };
  get("delta_xy_floor", t.delta_xy_floor);
  get("delta_z", t.delta_z);
  get("eps_v", t.eps_v);
  get("eps_a", t.eps_a);
  get("eps_lane", t.eps_lane);
  get("delta_int", t.delta_int);
  get("same_lane", t.same_lane);
  get("visibility_view", t.visibility_view);
  get("longitudinal_offset", t.longitudinal_offset);
  get("overtake_margin", t.overtake_margin);
  get("comoving_band", t.comoving_band);
  get("crossing_proximity", t.crossing_proximity);
  t.validate();
  return t;
}

const ObjectNode& SceneGraph::node(NodeId id) const {
  return id.i == kEgoIndex ? ego.at(id.t) : nodes.at(id.t).at(id.i);
}

std::size_t SceneGraph::num_nodes() const {
  std::size_t n = 0;
  for (const auto& f : nodes) n += f.size();
  return n;
}

std::optional<Relation> SceneGraph::relation(NodeId a, NodeId b) const {
  if (a.t != b.t) return std::nullopt;
  const std::size_t n = nodes[a.t].size() + 1;
  const std::int8_t v = relation_table[a.t][(a.i + 1) * n + (b.i + 1)];
  if (v < 0) return std::nullopt;
  return static_cast<Relation>(v);
}

std::optional<int> SceneGraph::successor(NodeId id) const {
  const auto& track = node(id).track_id;
  if (!track || id.t + 1 >= static_cast<int>(nodes.size()) || temporal_disabled) {
    return std::nullopt;
  }
  const auto& next = nodes[id.t + 1];
  for (const auto& n : next) {
    if (n.track_id == track) return n.i;
  }
  return std::nullopt;
}

void SceneGraph::index() {
  const std::size_t frames = nodes.size();
  actions.assign(frames, {});
  relation_table.assign(frames, {});
  interactions.assign(frames, {});
  for (std::size_t t = 0; t < frames; ++t) {
    actions[t].assign(nodes[t].size(), ActionSet{});
    const std::size_t n = nodes[t].size() + 1;
    relation_table[t].assign(n * n, -1);
  }
  for (const Edge& e : edges) {
    switch (e.kind) {
      case EdgeKind::kAction:
        actions[e.src.t][e.src.i].insert(static_cast<Action>(e.label));
        break;
      case EdgeKind::kRelation: {
        const std::size_t n = nodes[e.src.t].size() + 1;
        relation_table[e.src.t][(e.src.i + 1) * n + (e.dst.i + 1)] =
            static_cast<std::int8_t>(e.label);
        break;
      }
      case EdgeKind::kInteraction:
        interactions[e.src.t].push_back(e);
        break;
      case EdgeKind::kTemporal:
        break;
    }
  }
}

LocalOffset local_projection(const ObjectNode& src, const ObjectNode& dst) {
  const Vec3d d = dst.center - src.center;
  return {d.dot(forward_axis(src.yaw)), d.dot(right_axis(src.yaw)), d.z()};
}

double adaptive_threshold(const ObjectNode& src, const ThresholdSet& th) {
  return std::max(th.delta_xy_floor, (src.size.x() + src.size.y()) / 4.0);
}

std::optional<Relation> relation_from_offset(double s, double u, double delta) {
  if (s > delta && std::abs(u) < delta) return Relation::kAheadOf;
  if (s < -delta && std::abs(u) < delta) return Relation::kBehind;
  if (u < -delta && std::abs(s) < delta) return Relation::kLeftOf;
  if (u > delta && std::abs(s) < delta) return Relation::kRightOf;
  if (s > delta && u < -delta) return Relation::kAheadLeftOf;
  if (s > delta && u > delta) return Relation::kAheadRightOf;
  if (s < -delta && u < -delta) return Relation::kRearLeftOf;
  if (s < -delta && u > delta) return Relation::kRearRightOf;
  return std::nullopt;
}

std::optional<Relation> classify_relation(const ObjectNode& src, const ObjectNode& dst,
                                          const ThresholdSet& th) {
  const LocalOffset off = local_projection(src, dst);
  return relation_from_offset(off.s, off.u, adaptive_threshold(src, th));
}

namespace {

const ObjectAnnotation* find_track(const Frame& f, const std::string& track) {
  for (const auto& o : f.objects) {
    if (o.track_id && *o.track_id == track) return &o;
  }
  return nullptr;
}

// Transform taking frame t-1 ego coordinates into frame t ego coordinates.
Mat4d previous_to_current(const Frame& prev, const Frame& cur) {
  return rigid_inverse(cur.ego_pose) * prev.ego_pose;
}

}  // namespace

Vec3d estimate_velocity(const Scene& scene, int t, const std::string& track) {
  if (t < 1 || t >= static_cast<int>(scene.frames.size())) {
    throw MissingTrack("track " + track + " has no previous frame at t=" + std::to_string(t));
  }
  const Frame& cur = scene.frames[t];
  const Frame& prev = scene.frames[t - 1];
  const ObjectAnnotation* a = find_track(cur, track);
  const ObjectAnnotation* b = find_track(prev, track);
  if (!a || !b) {
    throw MissingTrack("track " + track + " missing in frames " + std::to_string(t - 1) + ".." +
                       std::to_string(t));
  }
  const double dt = cur.timestamp - prev.timestamp;
  if (dt == 0.0) throw ZeroDt("zero time step at frame " + std::to_string(t));
  const Vec3d compensated = transform_point(previous_to_current(prev, cur), b->center);
  return (a->center - compensated) / dt;
}

double compensated_lateral(const ActionInput& in) {
  const Vec3d dc = in.center - in.previous_center;
  const double d_lat = dc.dot(right_axis(in.previous_yaw));
  const double d_fwd = dc.dot(forward_axis(in.previous_yaw));
  const double dtheta = normalize_angle(in.yaw - in.previous_yaw);
  // Expected drift of a turn is -d_fwd*sin(dtheta) along the right axis.
  return d_lat + d_fwd * std::sin(dtheta);
}

ActionSet actions_from_input(const ActionInput& in, const ThresholdSet& th) {
  ActionSet out;
  const bool stopped = is_static_category(in.category) || in.velocity.norm() < th.eps_v;
  if (stopped) out.insert(Action::kStopped);
  if (!in.has_previous) return out;
  if (!stopped) {
    const double angle = planar_angle_between(in.velocity, forward_axis(in.yaw));
    if (angle < kPi<double> / 3) out.insert(Action::kMovingForward);
    if (angle > 2 * kPi<double> / 3) out.insert(Action::kMovingBackward);
  }
  const double dtheta = normalize_angle(in.yaw - in.previous_yaw);
  if (std::abs(dtheta) > kPi<double> / 2) {
    out.insert(Action::kUTurn);
  } else if (dtheta > kPi<double> / 12) {
    out.insert(Action::kTurnLeft);
  } else if (dtheta < -kPi<double> / 12) {
    out.insert(Action::kTurnRight);
  }
  const double lateral = compensated_lateral(in);
  if (std::abs(lateral) > th.eps_lane) {
    out.insert(lateral > 0 ? Action::kLaneChangeRight : Action::kLaneChangeLeft);
  }
  const auto& h = in.speed_history;
  if (h.size() >= 4) {
    const double a0 = h[0] - h[1], a1 = h[1] - h[2], a2 = h[2] - h[3];
    if (a0 > th.eps_a && a1 > th.eps_a && a2 > th.eps_a) out.insert(Action::kAccelerate);
    if (a0 < -th.eps_a && a1 < -th.eps_a && a2 < -th.eps_a) out.insert(Action::kDecelerate);
  }
  return out;
}

namespace {

int track_index(const std::vector<ObjectNode>& frame, const std::optional<std::string>& track) {
  if (!track) return -2;
  for (const auto& n : frame) {
    if (n.track_id == track) return n.i;
  }
  return -2;
}

}  // namespace

std::vector<ActionSet> classify_actions(const Scene& scene, const SceneGraph& graph, int t,
                                        const ThresholdSet& th) {
  std::vector<ActionSet> out;
  const auto& frame = graph.nodes[t];
  for (const ObjectNode& n : frame) {
    ActionInput in;
    in.category = n.category;
    in.velocity = n.velocity;
    in.yaw = n.yaw;
    in.center = n.center;
    if (t > 0) {
      const int p = track_index(graph.nodes[t - 1], n.track_id);
      if (p >= 0) {
        const ObjectNode& prev = graph.nodes[t - 1][p];
        const Mat4d rel = previous_to_current(scene.frames[t - 1], scene.frames[t]);
        in.has_previous = true;
        in.previous_center = transform_point(rel, prev.center);
        in.previous_yaw = normalize_angle(prev.yaw + yaw_of(rel));
      }
    }
    for (int k = 0; k < 4 && t - k >= 0; ++k) {
      const int idx = k == 0 ? n.i : track_index(graph.nodes[t - k], n.track_id);
      if (idx < 0) break;
      const ObjectNode& h = graph.nodes[t - k][idx];
      if (h.velocity_source == VelocitySource::kUnknown) break;
      in.speed_history.push_back(h.velocity.norm());
    }
    out.push_back(actions_from_input(in, th));
  }
  return out;
}

std::optional<Interaction> classify_interaction(const ObjectNode& src, const ObjectNode& dst,
                                                ActionSet src_actions, ActionSet dst_actions,
                                                std::optional<double> previous_distance,
                                                const ThresholdSet& th) {
  const Vec3d rel = src.center - dst.center;
  const double distance = rel.norm();
  if (!(distance < th.delta_int)) return std::nullopt;
  const double dphi = std::abs(normalize_angle(src.yaw - dst.yaw));
  const bool same = dphi < kPi<double> / 6;
  const bool opposite = dphi > 5 * kPi<double> / 6;
  const bool perpendicular = std::abs(dphi - kPi<double> / 2) < kPi<double> / 9;
  const bool src_moving = !src_actions.contains(Action::kStopped);
  const bool dst_moving = !dst_actions.contains(Action::kStopped);
  const bool lane_changing = src_actions.contains(Action::kLaneChangeLeft) ||
                             src_actions.contains(Action::kLaneChangeRight);
  const double v_src = src.velocity.norm();
  const double v_dst = dst.velocity.norm();
  const double d_fwd = rel.dot(forward_axis(dst.yaw));
  const double d_lat = std::abs(rel.dot(right_axis(dst.yaw)));
  const bool same_lane = d_lat < th.same_lane;
  const bool faster = v_src > v_dst + th.overtake_margin;

  if (same) {
    if (d_fwd > th.longitudinal_offset) {
      if (same_lane && src_moving && dst_moving) return Interaction::kLead;
      if (faster && lane_changing) return Interaction::kOvertake;
      if (faster && !same_lane) return Interaction::kPassing;
      return std::nullopt;
    }
    if (d_fwd < -th.longitudinal_offset) {
      if (same_lane && src_moving && dst_moving) return Interaction::kFollow;
      return std::nullopt;
    }
    if (!same_lane && src_moving && dst_moving && std::abs(v_src - v_dst) < th.comoving_band) {
      return Interaction::kCoMoving;
    }
    return std::nullopt;
  }
  if (opposite && src_moving && dst_moving && previous_distance &&
      distance < *previous_distance) {
    return Interaction::kApproaching;
  }
  if ((opposite || perpendicular) && src_moving && distance < th.crossing_proximity) {
    return Interaction::kCrossing;
  }
  return std::nullopt;
}

std::vector<Edge> link_temporal(const Scene& scene) {
  std::vector<Edge> out;
  for (std::size_t t = 0; t + 1 < scene.frames.size(); ++t) {
    std::unordered_map<std::string, int> next;
    const auto& nf = scene.frames[t + 1].objects;
    for (int j = static_cast<int>(nf.size()) - 1; j >= 0; --j) {
      if (nf[j].track_id) next[*nf[j].track_id] = j;
    }
    const auto& cf = scene.frames[t].objects;
    for (int i = 0; i < static_cast<int>(cf.size()); ++i) {
      if (!cf[i].track_id) continue;
      auto it = next.find(*cf[i].track_id);
      if (it == next.end()) continue;
      out.push_back({EdgeKind::kTemporal, {static_cast<int>(t), i},
                     {static_cast<int>(t) + 1, it->second}, 0});
    }
  }
  return out;
}

SceneGraph build_graph(const Scene& scene, const ThresholdSet& th) {
  if (!scene.calibrated) throw InvariantError("calibrated", "graph requires a calibrated scene");
  th.validate();
  SceneGraph g;
  g.scene_id = scene.scene_id;
  g.thresholds = th;
  g.temporal_disabled = !has_track_ids(scene);
  const auto& order = canonical_camera_order(scene.metadata.source);
  const int frames = static_cast<int>(scene.frames.size());
  g.nodes.resize(frames);
  for (int t = 0; t < frames; ++t) {
    const Frame& f = scene.frames[t];
    ObjectNode ego;
    ego.t = t;
    ego.i = kEgoIndex;
    ego.track_id = "ego";
    ego.category = scene.metadata.ego_type == EgoType::kTruck ? Category::kTruck : Category::kCar;
    ego.size = ego_size(scene.metadata.ego_type);
    ego.velocity_source = VelocitySource::kUnknown;
    g.ego.push_back(ego);
    for (int i = 0; i < static_cast<int>(f.objects.size()); ++i) {
      const ObjectAnnotation& o = f.objects[i];
      ObjectNode n;
      n.t = t;
      n.i = i;
      n.track_id = o.track_id;
      n.category = o.category;
      n.center = o.center;
      n.size = o.size;
      n.yaw = o.yaw;
      for (const auto& cam : order) {
        const Projection* p = o.projection_in(cam);
        if (p && p->visibility >= th.visibility_view) n.cameras.push_back(cam);
      }
      for (const auto& p : o.projections) n.max_visibility = std::max(n.max_visibility, p.visibility);
      n.in_frustum = !o.projections.empty();
      const bool tracked_before =
          t > 0 && o.track_id && find_track(scene.frames[t - 1], *o.track_id) != nullptr;
      if (tracked_before) {
        try {
          n.velocity = estimate_velocity(scene, t, *o.track_id);
        } catch (const Error& e) {
          throw Error("frames[" + std::to_string(t) + "].objects[" + std::to_string(i) +
                      "]: " + e.what());
        }
        n.velocity_source = VelocitySource::kEstimated;
      } else if (o.velocity) {
        n.velocity = *o.velocity;
        n.velocity_source = VelocitySource::kNative;
      }
      g.nodes[t].push_back(std::move(n));
    }
  }

  std::vector<Edge> edges;
  for (int t = 0; t < frames; ++t) {
    const auto& fn = g.nodes[t];
    const int n = static_cast<int>(fn.size());
    for (int a = -1; a < n; ++a) {
      const ObjectNode& src = a < 0 ? g.ego[t] : fn[a];
      for (int b = -1; b < n; ++b) {
        if (a == b) continue;
        const ObjectNode& dst = b < 0 ? g.ego[t] : fn[b];
        if (auto r = classify_relation(src, dst, th)) {
          edges.push_back({EdgeKind::kRelation, {t, a}, {t, b}, static_cast<int>(*r)});
        }
      }
    }
  }
  std::vector<std::vector<ActionSet>> actions(frames);
  for (int t = 0; t < frames; ++t) {
    actions[t] = classify_actions(scene, g, t, th);
    for (int i = 0; i < static_cast<int>(actions[t].size()); ++i) {
      for (Action a : actions[t][i].labels()) {
        edges.push_back({EdgeKind::kAction, {t, i}, {t, i}, static_cast<int>(a)});
      }
    }
  }
  for (int t = 1; t < frames; ++t) {
    const auto& fn = g.nodes[t];
    const int n = static_cast<int>(fn.size());
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        std::optional<double> previous;
        const int pa = track_index(g.nodes[t - 1], fn[a].track_id);
        const int pb = track_index(g.nodes[t - 1], fn[b].track_id);
        if (pa >= 0 && pb >= 0) {
          previous = (g.nodes[t - 1][pa].center - g.nodes[t - 1][pb].center).norm();
        }
        auto m = classify_interaction(fn[a], fn[b], actions[t][a], actions[t][b], previous, th);
        if (!m) continue;
        edges.push_back({EdgeKind::kInteraction, {t, a}, {t, b}, static_cast<int>(*m)});
        if (*m == Interaction::kOvertake) {
          edges.push_back({EdgeKind::kInteraction, {t, b}, {t, a},
                           static_cast<int>(Interaction::kYielding)});
        }
      }
    }
  }
  if (!g.temporal_disabled) {
    for (const Edge& e : link_temporal(scene)) edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  g.edges = std::move(edges);
  g.index();
  return g;
}

namespace {

json vec_json(const Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3d vec_from(const json& j) { return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()}; }

json node_json(const ObjectNode& n) {
  return {{"t", n.t},
          {"i", n.i},
          {"track_id", n.track_id ? json(*n.track_id) : json(nullptr)},
          {"category", to_string(n.category)},
          {"center", vec_json(n.center)},
          {"size", vec_json(n.size)},
          {"yaw", n.yaw},
          {"velocity", vec_json(n.velocity)},
          {"velocity_source", to_string(n.velocity_source)},
          {"cameras", n.cameras},
          {"max_visibility", n.max_visibility},
          {"in_frustum", n.in_frustum}};
}

ObjectNode node_from(const json& j) {
  ObjectNode n;
  n.t = j.at("t").get<int>();
  n.i = j.at("i").get<int>();
  if (!j.at("track_id").is_null()) n.track_id = j["track_id"].get<std::string>();
  n.category = *enum_from_string<Category>(j.at("category").get<std::string>());
  n.center = vec_from(j.at("center"));
  n.size = vec_from(j.at("size"));
  n.yaw = j.at("yaw").get<double>();
  n.velocity = vec_from(j.at("velocity"));
  n.velocity_source = *enum_from_string<VelocitySource>(j.at("velocity_source").get<std::string>());
  n.cameras = j.at("cameras").get<std::vector<std::string>>();
  n.max_visibility = j.at("max_visibility").get<double>();
  n.in_frustum = j.at("in_frustum").get<bool>();
  return n;
}

std::string label_name(const Edge& e) {
  switch (e.kind) {
    case EdgeKind::kRelation:
      return to_string(static_cast<Relation>(e.label));
    case EdgeKind::kAction:
      return to_string(static_cast<Action>(e.label));
    case EdgeKind::kInteraction:
      return to_string(static_cast<Interaction>(e.label));
    case EdgeKind::kTemporal:
      return "next";
  }
  return "";
}

json edge_json(const Edge& e) {
  return {{"kind", to_string(e.kind)},
          {"src", {e.src.t, e.src.i}},
          {"dst", {e.dst.t, e.dst.i}},
          {"label", label_name(e)}};
}

Edge edge_from(const json& j) {
  Edge e;
  e.kind = *enum_from_string<EdgeKind>(j.at("kind").get<std::string>());
  e.src = {j.at("src")[0].get<int>(), j.at("src")[1].get<int>()};
  e.dst = {j.at("dst")[0].get<int>(), j.at("dst")[1].get<int>()};
  const std::string label = j.at("label").get<std::string>();
  std::optional<int> v;
  switch (e.kind) {
    case EdgeKind::kRelation:
      if (auto r = enum_from_string<Relation>(label)) v = static_cast<int>(*r);
      break;
    case EdgeKind::kAction:
      if (auto a = enum_from_string<Action>(label)) v = static_cast<int>(*a);
      break;
    case EdgeKind::kInteraction:
      if (auto m = enum_from_string<Interaction>(label)) v = static_cast<int>(*m);
      break;
    case EdgeKind::kTemporal:
      v = 0;
      break;
  }
  if (!v) throw SchemaError("edges.label", "unknown label '" + label + "'");
  e.label = *v;
  return e;
}

}  // namespace

json graph_to_json(const SceneGraph& g) {
  json nodes = json::array();
  for (std::size_t t = 0; t < g.nodes.size(); ++t) {
    nodes.push_back(node_json(g.ego[t]));
    for (const auto& n : g.nodes[t]) nodes.push_back(node_json(n));
  }
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back(edge_json(e));
  return {{"scene_id", g.scene_id},
          {"num_frames", g.nodes.size()},
          {"temporal_disabled", g.temporal_disabled},
          {"thresholds", g.thresholds.to_json()},
          {"nodes", nodes},
          {"edges", edges}};
}

SceneGraph graph_from_json(const json& j) {
  SceneGraph g;
  g.scene_id = j.at("scene_id").get<std::string>();
  g.temporal_disabled = j.at("temporal_disabled").get<bool>();
  g.thresholds = ThresholdSet::from_json(j.at("thresholds"));
  const std::size_t frames = j.at("num_frames").get<std::size_t>();
  g.nodes.resize(frames);
  g.ego.resize(frames);
  for (const auto& nj : j.at("nodes")) {
    ObjectNode n = node_from(nj);
    if (n.t < 0 || n.t >= static_cast<int>(frames)) throw SchemaError("nodes.t", "out of range");
    if (n.i == kEgoIndex) {
      g.ego[n.t] = n;
    } else {
      if (n.i != static_cast<int>(g.nodes[n.t].size())) {
        throw SchemaError("nodes.i", "nodes must be dense and ordered");
      }
      g.nodes[n.t].push_back(n);
    }
  }
  for (const auto& ej : j.at("edges")) g.edges.push_back(edge_from(ej));
  std::sort(g.edges.begin(), g.edges.end());
  g.index();
  return g;
}

// One node or edge per line so exports diff cleanly.
std::string serialize_graph(const SceneGraph& g) {
  const json doc = graph_to_json(g);
  std::ostringstream out;
  out << "{\"scene_id\":" << doc["scene_id"].dump() << ",\"num_frames\":" << doc["num_frames"]
      << ",\"temporal_disabled\":" << doc["temporal_disabled"].dump()
      << ",\"thresholds\":" << doc["thresholds"].dump() << ",\n\"nodes\":[";
  bool first = true;
  for (const auto& n : doc["nodes"]) {
    out << (first ? "\n" : ",\n") << n.dump();
    first = false;
  }
  out << "],\n\"edges\":[";
  first = true;
  for (const auto& e : doc["edges"]) {
    out << (first ? "\n" : ",\n") << e.dump();
    first = false;
  }
  out << "]}\n";
  return out.str();
}

}  // namespace drivescene
