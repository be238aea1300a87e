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

#include "drivescene/qa.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "drivescene/errors.h"
#include "drivescene/rng.h"

namespace drivescene {

template <>
const std::vector<std::string>& enum_names<Ability>() {
  static const std::vector<std::string> names = {"Const", "Unders", "Reas"};
  return names;
}

template <>
const std::vector<std::string>& enum_names<Task>() {
  static const std::vector<std::string> names = {
      "scene_construction",      "perspective_camera_matching", "ego_rotation",
      "camera_ordering",         "leave_one_camera_out",        "multi_step_reasoning",
      "allocentric_imagination", "spatial_compatibility",       "multiview_object_matching",
      "multiview_depth_awareness", "relative_direction",        "relative_distance",
      "distance_absolute",       "counting_absolute",           "event_ordering",
      "trajectory_reasoning",    "occlusion_awareness",         "object_manipulation",
      "action_reasoning",        "interaction_reasoning",
  };
  return names;
}

Ability ability_of(Task task) {
  if (task <= Task::kLeaveOneCameraOut) return Ability::kConst;
  if (task <= Task::kCountingAbsolute) return Ability::kUnders;
  return Ability::kReas;
}

bool is_numeric_task(Task task) {
  return task == Task::kDistanceAbsolute || task == Task::kCountingAbsolute;
}

bool is_temporal_task(Task task) { return task >= Task::kEventOrdering; }

const std::string& interaction_definition_prompt() {
  static const std::string text =
      "Know that the definition of interactions are:\n"
      "- LEAD: Object-1 is leading Object-2\n"
      "- FOLLOW: Object-1 is following Object-2\n"
      "- OVERTAKE: Object-1 is overtaking the lane of Object-2\n"
      "- PASSING: Object-1 is passing the lane of Object-2 in the same direction\n"
      "- CO_MOVING: Object-1 is co-moving with Object-2 in the same direction\n"
      "- APPROACHING: Object-1 is approaching Object-2 in the opposite direction\n"
      "- CROSSING: Object-1 is crossing the lane of Object-2 in the opposite direction\n"
      "- YIELDING: Object-1 is yielding to Object-2; Object-1 is stopped while Object-2 is moving";
  return text;
}

// ---------------------------------------------------------------------------
// Text forms

const std::string& relation_phrase(Relation r) {
  static const std::vector<std::string> p = {
      "in front of you",        "behind you",              "on your left",
      "on your right",          "ahead and to your left",  "ahead and to your right",
      "behind and to your left", "behind and to your right",
  };
  return p[static_cast<std::size_t>(r)];
}

const std::string& relation_short_phrase(Relation r) {
  static const std::vector<std::string> p = {"ahead",      "behind",      "left",        "right",
                                             "ahead left", "ahead right", "behind left", "behind right"};
  return p[static_cast<std::size_t>(r)];
}

const std::string& cardinal_phrase(Relation r) {
  if (static_cast<int>(r) > static_cast<int>(Relation::kRightOf)) {
    throw InvariantError("relation", "not a cardinal relation: " + to_string(r));
  }
  return relation_phrase(r);
}

const std::string& action_phrase(Action a) {
  static const std::vector<std::string> p = {
      "stopped",        "moving forward",     "moving backward",     "turning left",
      "turning right",  "making a U-turn",    "changing lane left",  "changing lane right",
      "accelerating",   "decelerating",
  };
  return p[static_cast<std::size_t>(a)];
}

const std::string& action_event_phrase(Action a) {
  static const std::vector<std::string> p = {
      "stops",          "moves forward",      "moves backward",          "turns left",
      "turns right",    "makes a U-turn",     "changes lane to the left", "changes lane to the right",
      "accelerates",    "decelerates",
  };
  return p[static_cast<std::size_t>(a)];
}

const std::string& interaction_phrase(Interaction m) {
  static const std::vector<std::string> p = {"leading", "following",      "overtaking", "passing",
                                             "co-moving with", "approaching", "crossing", "yielding to"};
  return p[static_cast<std::size_t>(m)];
}

std::string category_plural(Category c) {
  static const std::vector<std::string> p = {"cars",     "trucks",   "pedestrians",  "cyclists",
                                             "traffic cones", "barriers", "other objects"};
  return p[static_cast<std::size_t>(c)];
}

namespace {

std::string category_singular(Category c) {
  static const std::vector<std::string> p = {"car",   "truck",   "pedestrian",  "cyclist",
                                             "traffic cone", "barrier", "other object"};
  return p[static_cast<std::size_t>(c)];
}

}  // namespace

std::string category_count_phrase(const std::map<Category, int>& counts) {
  std::string out;
  for (const auto& [c, n] : counts) {
    if (n <= 0) continue;
    if (!out.empty()) out += ", ";
    out += std::to_string(n) + " " + (n == 1 ? category_singular(c) : category_plural(c));
  }
  return out.empty() ? "None" : out;
}

Relation rotate_relation(Relation r, int degrees) {
  if (degrees % 90 != 0) throw InvariantError("degrees", "turn must be a multiple of 90");
  // Bearing index counterclockwise from ahead, 45 degrees per step.
  static const int bearing[] = {0, 4, 2, 6, 1, 7, 3, 5};
  static const Relation by_bearing[] = {Relation::kAheadOf,    Relation::kAheadLeftOf, Relation::kLeftOf,
                                        Relation::kRearLeftOf, Relation::kBehind,      Relation::kRearRightOf,
                                        Relation::kRightOf,    Relation::kAheadRightOf};
  const int k = ((bearing[static_cast<int>(r)] - degrees / 45) % 8 + 8) % 8;
  return by_bearing[k];
}

int rotation_bin(double degrees) {
  const auto& e = rotation_bin_edges();
  if (!(degrees >= 0.0) || degrees > 180.0 + 1e-9) {
    throw InvariantError("degrees", "rotation outside [0, 180]");
  }
  for (std::size_t k = 0; k + 1 < e.size(); ++k) {
    if (degrees < e[k + 1]) return static_cast<int>(k);
  }
  return static_cast<int>(e.size()) - 2;
}

std::string rotation_bin_label(int bin) {
  const auto& e = rotation_bin_edges();
  return std::to_string(int(e.at(bin))) + "-" + std::to_string(int(e.at(bin + 1))) + " degrees";
}

double distance_bin_size(double d) {
  if (d < 10.0) return 1.0;
  if (d < 20.0) return 2.0;
  return 5.0;
}

std::string distance_bin_label(double lo, double size) {
  return std::to_string(std::lround(lo)) + "-" + std::to_string(std::lround(lo + size)) + " meters";
}

std::string expand_video(int frames) {
  std::string out;
  for (int k = 1; k <= frames; ++k) {
    if (k > 1) out += " ";
    out += "Frame " + std::to_string(k) + ": <image>";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Items

std::vector<std::string> QAItem::asset_paths() const {
  std::vector<std::string> out;
  for (const auto& a : assets) {
    for (auto& p : a.paths()) out.push_back(std::move(p));
  }
  return out;
}

std::string QAItem::content_key() const {
  nlohmann::json j = {{"q", question}, {"p", preamble}, {"o", options}, {"a", asset_paths()}};
  if (answer_index) j["i"] = *answer_index;
  if (answer_value) j["v"] = *answer_value;
  return j.dump();
}

nlohmann::json QAItem::to_json() const {
  nlohmann::json j = {{"item_id", item_id},
                      {"task", to_string(task)},
                      {"ability", to_string(ability())},
                      {"question", question}};
  if (!preamble.empty()) j["preamble"] = preamble;
  j["assets"] = nlohmann::json::array();
  for (const auto& a : assets) j["assets"].push_back(a.to_json());
  j["asset_paths"] = asset_paths();
  if (numeric()) {
    j["answer_type"] = "numeric";
    j["answer"] = answer_value.value_or(0.0);
  } else {
    j["answer_type"] = "choice";
    j["options"] = options;
    j["answer"] = answer_index.value_or(-1);
  }
  j["scene_id"] = scene_id;
  j["frames"] = {frame_begin, frame_end};
  j["certificate"] = certificate;
  j["seed"] = seed;
  j["conditions"] = conditions;
  return j;
}

QAItem QAItem::from_json(const nlohmann::json& j) {
  QAItem it;
  try {
    it.item_id = j.at("item_id").get<std::string>();
    const auto task = enum_from_string<Task>(j.at("task").get<std::string>());
    if (!task) throw SchemaError("task", "unknown task " + j.at("task").dump());
    it.task = *task;
    it.question = j.at("question").get<std::string>();
    it.preamble = j.value("preamble", std::string());
    for (const auto& a : j.at("assets")) it.assets.push_back(AssetSpec::from_json(a));
    if (it.numeric()) {
      if (!j.at("answer").is_number()) throw SchemaError("answer", "expected a number");
      it.answer_value = j.at("answer").get<double>();
    } else {
      it.options = j.at("options").get<std::vector<std::string>>();
      if (!j.at("answer").is_number_integer()) throw SchemaError("answer", "expected an option index");
      it.answer_index = j.at("answer").get<int>();
      if (*it.answer_index < 0 || *it.answer_index >= static_cast<int>(it.options.size())) {
        throw InvariantError("answer", "option index out of range");
      }
    }
    it.scene_id = j.at("scene_id").get<std::string>();
    it.frame_begin = j.at("frames").at(0).get<int>();
    it.frame_end = j.at("frames").at(1).get<int>();
    it.certificate = j.value("certificate", nlohmann::json::object());
    it.seed = j.at("seed").get<std::uint64_t>();
    it.conditions = j.value("conditions", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("item", e.what());
  }
  return it;
}

void GeneratorConfig::validate() const {
  auto need = [](bool ok, const char* field, const char* what) {
    if (!ok) throw InvariantError(field, what);
  };
  need(num_options >= 2, "num_options", "must be at least 2");
  need(rotation_gap >= 1, "rotation_gap", "must be positive");
  need(masked_sequence >= 2, "masked_sequence", "must be at least 2");
  need(clip_length >= 2, "clip_length", "must be at least 2");
  need(context_frames >= 1, "context_frames", "must be positive");
  need(future_seconds > 0, "future_seconds", "must be positive");
  need(occlusion_visibility > 0 && occlusion_visibility <= 1, "occlusion_visibility", "must be in (0, 1]");
  need(max_occluded >= 1, "max_occluded", "must be positive");
  need(p_same >= 0 && p_same <= 1, "p_same", "must be a probability");
  need(p_cross_view >= 0 && p_cross_view <= 1, "p_cross_view", "must be a probability");
  need(compat_pass < compat_max, "compat_pass", "must be below compat_max");
  need(distance_min >= 0 && distance_min < distance_max, "distance_min", "must be below distance_max");
  need(manipulation_dt > 0, "manipulation_dt", "must be positive");
  need(attempts_per_item >= 1, "attempts_per_item", "must be positive");
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"seed", seed},
          {"num_options", num_options},
          {"rotation_gap", rotation_gap},
          {"masked_sequence", masked_sequence},
          {"clip_length", clip_length},
          {"context_frames", context_frames},
          {"future_seconds", future_seconds},
          {"occlusion_visibility", occlusion_visibility},
          {"max_occluded", max_occluded},
          {"p_same", p_same},
          {"p_cross_view", p_cross_view},
          {"depth_margin", depth_margin},
          {"compat_max", compat_max},
          {"compat_pass", compat_pass},
          {"distance_min", distance_min},
          {"distance_max", distance_max},
          {"manipulation_dt", manipulation_dt},
          {"nearby_radius", nearby_radius},
          {"attempts_per_item", attempts_per_item}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  const nlohmann::json defaults = c.to_json();
  for (const auto& [k, v] : j.items()) {
    if (!defaults.contains(k)) throw SchemaError(k, "unknown generator setting");
  }
  try {
    c.seed = j.value("seed", c.seed);
    c.num_options = j.value("num_options", c.num_options);
    c.rotation_gap = j.value("rotation_gap", c.rotation_gap);
    c.masked_sequence = j.value("masked_sequence", c.masked_sequence);
    c.clip_length = j.value("clip_length", c.clip_length);
    c.context_frames = j.value("context_frames", c.context_frames);
    c.future_seconds = j.value("future_seconds", c.future_seconds);
    c.occlusion_visibility = j.value("occlusion_visibility", c.occlusion_visibility);
    c.max_occluded = j.value("max_occluded", c.max_occluded);
    c.p_same = j.value("p_same", c.p_same);
    c.p_cross_view = j.value("p_cross_view", c.p_cross_view);
    c.depth_margin = j.value("depth_margin", c.depth_margin);
    c.compat_max = j.value("compat_max", c.compat_max);
    c.compat_pass = j.value("compat_pass", c.compat_pass);
    c.distance_min = j.value("distance_min", c.distance_min);
    c.distance_max = j.value("distance_max", c.distance_max);
    c.manipulation_dt = j.value("manipulation_dt", c.manipulation_dt);
    c.nearby_radius = j.value("nearby_radius", c.nearby_radius);
    c.attempts_per_item = j.value("attempts_per_item", c.attempts_per_item);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("generator", e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

struct Ctx {
  const SceneBundle& b;
  const std::vector<SceneBundle>& pool;
  const GeneratorConfig& cfg;
  Rng& rng;

  const Scene& scene() const { return b.scene; }
  const SceneGraph& graph() const { return b.graph; }
  int frames() const { return static_cast<int>(b.scene.frames.size()); }
  int k() const { return cfg.num_options; }
};

std::string object_name(int id) { return "Object-" + std::to_string(id); }

// Replaces successive `token` occurrences with `values`.
std::string fill(std::string text, const std::string& token, const std::vector<std::string>& values) {
  std::size_t pos = 0;
  for (const auto& v : values) {
    pos = text.find(token, pos);
    if (pos == std::string::npos) throw InvariantError("template", "too few " + token + " slots");
    text.replace(pos, token.size(), v);
    pos += v.size();
  }
  return text;
}

std::string fill_objects(const std::string& tmpl, const std::vector<std::string>& names) {
  std::string out = tmpl;
  std::size_t pos = 0;
  for (const auto& n : names) {
    pos = out.find("<object-id", pos);
    if (pos == std::string::npos) throw InvariantError("template", "too few object slots");
    const std::size_t end = out.find('>', pos);
    out.replace(pos, end - pos + 1, n);
    pos += n.size();
  }
  return out;
}

std::string with_video(const std::string& tmpl, int frames) {
  return fill(tmpl, "<video>", {expand_video(frames)});
}

bool disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (const auto& x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) return false;
  }
  return true;
}

bool visible(const ObjectNode& n) { return !n.cameras.empty(); }

std::vector<int> visible_objects(const SceneGraph& g, int t) {
  std::vector<int> out;
  for (const auto& n : g.nodes[t]) {
    if (visible(n)) out.push_back(n.i);
  }
  return out;
}

nlohmann::json node_ref(const ObjectNode& n) {
  nlohmann::json j = {{"t", n.t}, {"i", n.i}, {"cameras", n.cameras}};
  if (n.track_id) j["track"] = *n.track_id;
  return j;
}

// Places `correct` among distractors in a seeded order; returns its index.
int arrange(std::vector<std::string>& options, const std::string& correct,
            std::vector<std::string> distractors, Rng& rng) {
  options = std::move(distractors);
  options.push_back(correct);
  rng.shuffle(options);
  return static_cast<int>(std::find(options.begin(), options.end(), correct) - options.begin());
}

// `need` distinct candidates other than `correct`, sampled from `pool`.
std::vector<std::string> pick_distractors(std::vector<std::string> pool, const std::string& correct,
                                          int need, Rng& rng) {
  std::vector<std::string> uniq;
  std::set<std::string> seen = {correct};
  for (auto& s : pool) {
    if (seen.insert(s).second) uniq.push_back(std::move(s));
  }
  if (static_cast<int>(uniq.size()) < need) throw NoEligibleCandidates("distractors");
  std::vector<std::string> out;
  for (std::size_t k : rng.sample(uniq.size(), need)) out.push_back(uniq[k]);
  return out;
}

AssetSpec asset(const std::string& kind, const std::string& scene_id, int frame) {
  AssetSpec a;
  a.kind = kind;
  a.scene_id = scene_id;
  a.frame = frame;
  return a;
}

const char* kYes = "Yes";
const char* kNo = "No";

void yes_no(QAItem& it, bool yes) {
  it.options = {kYes, kNo};
  it.answer_index = yes ? 0 : 1;
}

// --- Construction ----------------------------------------------------------

std::vector<const SceneBundle*> layout_matches(const Ctx& c) {
  const auto& meta = c.scene().metadata;
  if (!meta.scene_type) throw NoEligibleCandidates("scene_type");
  std::vector<const SceneBundle*> out;
  for (const auto& other : c.pool) {
    const auto& om = other.scene.metadata;
    if (other.scene.scene_id == c.scene().scene_id || om.source != meta.source) continue;
    if (!om.scene_type || om.scene_type->value != meta.scene_type->value) continue;
    out.push_back(&other);
  }
  if (static_cast<int>(out.size()) < c.k() - 1) throw NoEligibleCandidates("pool_matches");
  return out;
}

// Prompt asset plus one option asset per scene; answer is the item's own scene.
QAItem cross_scene_item(const Ctx& c, const std::string& prompt_kind, const std::string& option_kind) {
  const auto matches = layout_matches(c);
  QAItem it;
  const int t = static_cast<int>(c.rng.index(c.frames()));
  struct Entry {
    const Scene* scene;
    int frame;
  };
  std::vector<Entry> entries = {{&c.scene(), t}};
  for (std::size_t k : c.rng.sample(matches.size(), c.k() - 1)) {
    const Scene& s = matches[k]->scene;
    entries.push_back({&s, static_cast<int>(c.rng.index(s.frames.size()))});
  }
  c.rng.shuffle(entries);
  AssetSpec prompt = asset(prompt_kind, c.scene().scene_id, t);
  if (prompt_kind == "camera") prompt.camera = front_camera(c.scene().metadata.source);
  it.assets.push_back(prompt);
  nlohmann::json cert = nlohmann::json::array();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    AssetSpec a = asset(option_kind, entries[k].scene->scene_id, entries[k].frame);
    if (option_kind == "camera") a.camera = front_camera(entries[k].scene->metadata.source);
    it.assets.push_back(a);
    it.options.push_back(std::string(1, static_cast<char>('A' + k)));
    if (entries[k].scene == &c.scene()) it.answer_index = static_cast<int>(k);
    cert.push_back({{"scene_id", entries[k].scene->scene_id}, {"frame", entries[k].frame}});
  }
  it.frame_begin = it.frame_end = t;
  it.certificate = {{"options", cert}, {"scene_type", to_string(c.scene().metadata.scene_type->value)}};
  return it;
}

QAItem gen_scene_construction(const Ctx& c) {
  QAItem it = cross_scene_item(c, "multiview", "bev");
  it.question =
      "Given the current driving scene, construct a top-down perspective map of the scene and select "
      "the correct map. <image>";
  return it;
}

QAItem gen_perspective_matching(const Ctx& c) {
  QAItem it = cross_scene_item(c, "bev", "camera");
  it.question =
      "Given the top-down perspective map of a driving scene, identify which front camera view "
      "corresponds to this map.<image>";
  return it;
}

QAItem gen_ego_rotation(const Ctx& c) {
  const int g = c.cfg.rotation_gap;
  if (c.frames() <= g) throw NoEligibleCandidates("rotation_gap");
  const int t1 = static_cast<int>(c.rng.index(c.frames() - g));
  const int t2 = t1 + g;
  const Mat3d r = c.scene().frames[t2].ego_pose.block<3, 3>(0, 0) *
                  c.scene().frames[t1].ego_pose.block<3, 3>(0, 0).transpose();
  const double theta = std::abs(std::atan2(r(1, 0), r(0, 0))) * 180.0 / kPi<double>;
  const int bin = rotation_bin(theta);
  std::vector<std::string> others;
  for (int k = 0; k + 1 < static_cast<int>(rotation_bin_edges().size()); ++k) {
    if (k != bin) others.push_back(rotation_bin_label(k));
  }
  QAItem it;
  it.answer_index = arrange(it.options, rotation_bin_label(bin),
                            pick_distractors(others, rotation_bin_label(bin), c.k() - 1, c.rng), c.rng);
  for (int t : {t1, t2}) {
    AssetSpec a = asset("camera", c.scene().scene_id, t);
    a.camera = front_camera(c.scene().metadata.source);
    it.assets.push_back(a);
  }
  it.question =
      "The ego vehicle is moving through the scene. Given two front camera images from timestamp T1 "
      "and timestamp T2, what is the approximate rotation angle of the ego vehicle between these two "
      "timestamps? Timestamp T1: <image> Timestamp T2: <image>";
  it.frame_begin = t1;
  it.frame_end = t2;
  it.certificate = {{"theta_degrees", theta}, {"bin", bin}};
  return it;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k) out += sep;
    out += parts[k];
  }
  return out;
}

QAItem gen_camera_ordering(const Ctx& c) {
  const int t = static_cast<int>(c.rng.index(c.frames()));
  std::vector<std::string> cams;
  for (const auto& name : canonical_camera_order(c.scene().metadata.source)) {
    if (c.scene().frames[t].camera(name)) cams.push_back(name);
  }
  const int n = static_cast<int>(cams.size());
  long perms = 1;
  for (int k = 2; k < n; ++k) perms *= k;
  if (n < 3 || perms < c.k()) throw NoEligibleCandidates("camera_count");
  std::vector<int> order(n);
  for (int k = 0; k < n; ++k) order[k] = k;
  c.rng.shuffle(order);
  std::vector<std::string> letter_of(n);
  for (int k = 0; k < n; ++k) letter_of[order[k]] = std::string(1, static_cast<char>('A' + k));
  const std::string correct = join(letter_of, "→");
  std::set<std::string> seen = {correct};
  std::vector<std::string> distractors;
  std::vector<std::string> rest(letter_of.begin() + 1, letter_of.end());
  while (static_cast<int>(distractors.size()) < c.k() - 1) {
    c.rng.shuffle(rest);
    std::vector<std::string> seq = {letter_of[0]};
    seq.insert(seq.end(), rest.begin(), rest.end());
    const std::string s = join(seq, "→");
    if (seen.insert(s).second) distractors.push_back(s);
  }
  QAItem it;
  it.answer_index = arrange(it.options, correct, distractors, c.rng);
  AssetSpec a = asset("camera_grid", c.scene().scene_id, t);
  a.order = order;
  it.assets.push_back(a);
  it.question =
      "Given a shuffled set of camera views arranged around an autonomous vehicle, determine the "
      "correct spatial ordering of the cameras. <image> The shuffled camera views are labeled A, B, C, "
      "D, etc. in the image above. Identify the correct clockwise ordering starting from the Front "
      "camera.";
  it.frame_begin = it.frame_end = t;
  nlohmann::json lookup = nlohmann::json::object();
  for (int k = 0; k < n; ++k) lookup[std::string(1, static_cast<char>('A' + k))] = cams[order[k]];
  it.certificate = {{"order", order}, {"lookup", lookup}, {"cameras", cams}};
  return it;
}

std::map<Category, int> camera_counts(const Frame& f, const std::string& camera, double threshold) {
  std::map<Category, int> counts;
  for (const auto& o : f.objects) {
    const Projection* p = o.projection_in(camera);
    if (p && p->visibility >= threshold) ++counts[o.category];
  }
  return counts;
}

QAItem gen_leave_one_camera_out(const Ctx& c) {
  const int n = c.cfg.masked_sequence;
  if (c.frames() < n) throw NoEligibleCandidates("sequence_length");
  const int t0 = static_cast<int>(c.rng.index(c.frames() - n + 1));
  const int tf = t0 + n - 1;
  const std::string& front = front_camera(c.scene().metadata.source);
  std::vector<std::string> cams;
  for (const auto& name : canonical_camera_order(c.scene().metadata.source)) {
    if (name != front && c.scene().frames[t0].camera(name)) cams.push_back(name);
  }
  if (cams.empty()) throw NoEligibleCandidates("maskable_camera");
  const std::string masked = c.rng.pick(cams);
  const double th = c.graph().thresholds.visibility_view;
  const Frame& f = c.scene().frames[tf];
  const auto counts = camera_counts(f, masked, th);
  const std::string correct = category_count_phrase(counts);

  std::vector<std::string> pool;
  for (const auto& name : canonical_camera_order(c.scene().metadata.source)) {
    if (name != masked && f.camera(name)) pool.push_back(category_count_phrase(camera_counts(f, name, th)));
  }
  for (Category cat : enum_values<Category>()) {
    auto more = counts;
    ++more[cat];
    pool.push_back(category_count_phrase(more));
    auto it = counts.find(cat);
    if (it != counts.end()) {
      auto fewer = counts;
      --fewer[cat];
      pool.push_back(category_count_phrase(fewer));
      auto dropped = counts;
      dropped.erase(cat);
      pool.push_back(category_count_phrase(dropped));
    }
  }
  pool.push_back("None");
  QAItem it;
  it.answer_index = arrange(it.options, correct, pick_distractors(pool, correct, c.k() - 1, c.rng), c.rng);
  AssetSpec a = asset("masked", c.scene().scene_id, t0);
  a.camera = masked;
  a.length = n;
  it.assets.push_back(a);
  it.question = with_video(
      "Given this video sequence where one camera view is masked after the first frame, based on the "
      "video sequence, what objects are present in that masked camera view in the final frame? <video>",
      n);
  it.frame_begin = t0;
  it.frame_end = tf;
  nlohmann::json cj = nlohmann::json::object();
  for (const auto& [cat, k] : counts) cj[to_string(cat)] = k;
  it.certificate = {{"camera", masked}, {"final_frame", tf}, {"counts", cj}};
  return it;
}

// --- Understanding ---------------------------------------------------------

int random_frame(const Ctx& c) { return static_cast<int>(c.rng.index(c.frames())); }

QAItem gen_multi_step(const Ctx& c) {
  const int t = random_frame(c);
  const SceneGraph& g = c.graph();
  const auto vis = visible_objects(g, t);
  struct Chain {
    int target;
    int answer;
    std::string interaction;
  };
  std::vector<Chain> chains;
  for (int a : vis) {
    for (int m : vis) {
      if (m == a || !disjoint(g.nodes[t][m].cameras, g.nodes[t][a].cameras)) continue;
      if (!g.relation({t, m}, {t, a})) continue;
      const auto ego_rel = g.relation({t, kEgoIndex}, {t, m});
      if (!ego_rel) continue;
      std::string inter;
      if (*ego_rel == Relation::kAheadOf || *ego_rel == Relation::kAheadLeftOf ||
          *ego_rel == Relation::kAheadRightOf) {
        inter = "following";
      } else if (*ego_rel == Relation::kBehind || *ego_rel == Relation::kRearLeftOf ||
                 *ego_rel == Relation::kRearRightOf) {
        inter = "leading";
      } else {
        continue;
      }
      chains.push_back({m, a, inter});
    }
  }
  if (chains.empty()) throw NoEligibleCandidates("backward_chain");
  const Chain ch = c.rng.pick(chains);
  struct Maneuver {
    const char* text;
    int turn;
  };
  static const std::vector<Maneuver> maneuvers = {
      {"decelerating", 0}, {"accelerating", 0}, {"turning left", 90}, {"turning right", -90},
      {"making a U-turn", 180}};
  const Maneuver mv = c.rng.pick(maneuvers);
  const Relation raw = *g.relation({t, ch.target}, {t, ch.answer});
  const Relation query = rotate_relation(raw, mv.turn);

  std::vector<int> wrong;
  for (int o : vis) {
    if (o == ch.target || o == ch.answer) continue;
    const auto r = g.relation({t, ch.target}, {t, o});
    if (!r || rotate_relation(*r, mv.turn) != query) wrong.push_back(o);
  }
  if (static_cast<int>(wrong.size()) < c.k() - 1) throw NoEligibleCandidates("distractors");
  std::vector<int> objs = {ch.answer};
  for (std::size_t k : c.rng.sample(wrong.size(), c.k() - 1)) objs.push_back(wrong[k]);
  c.rng.shuffle(objs);

  QAItem it;
  AssetSpec a = asset("multiview", c.scene().scene_id, t);
  a.highlight = {ch.target};
  a.labels = {"1"};
  for (std::size_t k = 0; k < objs.size(); ++k) {
    a.highlight.push_back(objs[k]);
    a.labels.push_back(std::to_string(k + 2));
    it.options.push_back(object_name(static_cast<int>(k) + 2));
    if (objs[k] == ch.answer) it.answer_index = static_cast<int>(k);
  }
  it.assets.push_back(a);
  it.question = "Given the current driving scene. If the ego vehicle is " + std::string(mv.text) + " and " +
                ch.interaction + " " + object_name(1) + ". What is the object " +
                relation_short_phrase(query) + " of yourself? <image>";
  it.preamble = interaction_definition_prompt();
  it.frame_begin = it.frame_end = t;
  it.certificate = {{"target", node_ref(g.nodes[t][ch.target])},
                    {"answer", node_ref(g.nodes[t][ch.answer])},
                    {"options", objs},
                    {"turn_degrees", mv.turn},
                    {"relation", to_string(raw)},
                    {"query", to_string(query)}};
  return it;
}

// Ordered pairs of visible objects with disjoint camera sets.
std::vector<std::pair<int, int>> cross_view_pairs(const SceneGraph& g, int t, bool ordered) {
  std::vector<std::pair<int, int>> out;
  const auto vis = visible_objects(g, t);
  for (int a : vis) {
    for (int b : vis) {
      if (a == b || (!ordered && b < a)) continue;
      if (disjoint(g.nodes[t][a].cameras, g.nodes[t][b].cameras)) out.emplace_back(a, b);
    }
  }
  return out;
}

AssetSpec pair_asset(const Ctx& c, int t, int a, int b) {
  AssetSpec s = asset("multiview", c.scene().scene_id, t);
  s.highlight = {a, b};
  s.labels = {"1", "2"};
  return s;
}

nlohmann::json pair_cert(const SceneGraph& g, int t, int a, int b) {
  return {{"objects", {node_ref(g.nodes[t][a]), node_ref(g.nodes[t][b])}}};
}

QAItem gen_allocentric(const Ctx& c) {
  const int t = random_frame(c);
  const SceneGraph& g = c.graph();
  std::vector<std::tuple<int, int, Relation>> cands;
  for (auto [a, b] : cross_view_pairs(g, t, true)) {
    const auto r = g.relation({t, a}, {t, b});
    if (r && static_cast<int>(*r) <= static_cast<int>(Relation::kRightOf)) cands.emplace_back(a, b, *r);
  }
  if (cands.empty()) throw NoEligibleCandidates("cardinal_pair");
  const auto [a, b, r] = c.rng.pick(cands);
  QAItem it;
  std::vector<std::string> others;
  for (Relation x : {Relation::kAheadOf, Relation::kBehind, Relation::kLeftOf, Relation::kRightOf}) {
    if (x != r) others.push_back(cardinal_phrase(x));
  }
  it.answer_index = arrange(it.options, cardinal_phrase(r),
                            pick_distractors(others, cardinal_phrase(r), std::min(3, c.k() - 1), c.rng),
                            c.rng);
  it.assets.push_back(pair_asset(c, t, a, b));
  it.question = fill_objects(
      "Given the current driving scene. Imagine you are <object-id>. Where is <object-id> compared to "
      "you? <image>",
      {object_name(1), object_name(2)});
  it.frame_begin = it.frame_end = t;
  it.certificate = pair_cert(g, t, a, b);
  it.certificate["relation"] = to_string(r);
  return it;
}

double center_distance(const SceneGraph& g, int t, int a, int b) {
  return (g.nodes[t][a].center - g.nodes[t][b].center).norm();
}

QAItem gen_spatial_compatibility(const Ctx& c) {
  const int t = random_frame(c);
  const SceneGraph& g = c.graph();
  std::vector<std::pair<int, int>> cands;
  for (auto [a, b] : cross_view_pairs(g, t, true)) {
    if (center_distance(g, t, a, b) < c.cfg.compat_max) cands.emplace_back(a, b);
  }
  if (cands.empty()) throw NoEligibleCandidates("close_pair");
  const auto [a, b] = c.rng.pick(cands);
  const double d = center_distance(g, t, a, b);
  QAItem it;
  yes_no(it, d > c.cfg.compat_pass);
  it.assets.push_back(pair_asset(c, t, a, b));
  it.question = fill_objects(
      "Given the current driving scene. Can you drive through between <object-id> and <object-id>?<image>",
      {object_name(1), object_name(2)});
  it.frame_begin = it.frame_end = t;
  it.certificate = pair_cert(g, t, a, b);
  it.certificate["distance"] = d;
  return it;
}

QAItem gen_object_matching(const Ctx& c) {
  const SceneGraph& g = c.graph();
  auto multi_view = [&](int t) {
    std::vector<int> out;
    for (const auto& n : g.nodes[t]) {
      if (n.cameras.size() >= 2) out.push_back(n.i);
    }
    return out;
  };
  std::vector<int> both;
  for (int t = 0; t < c.frames(); ++t) {
    if (!multi_view(t).empty() && !cross_view_pairs(g, t, true).empty()) both.push_back(t);
  }
  const int t = both.empty() ? random_frame(c) : c.rng.pick(both);
  const auto multi = multi_view(t);
  const auto pairs = cross_view_pairs(g, t, true);
  const bool want_same = c.rng.bernoulli(c.cfg.p_same);
  const bool same = want_same ? !multi.empty() : pairs.empty();
  if (!same && pairs.empty()) throw NoEligibleCandidates("disjoint_pair");
  if (same && multi.empty()) throw NoEligibleCandidates("multi_view_object");

  QAItem it;
  AssetSpec a = asset("multiview", c.scene().scene_id, t);
  a.labels = {"1", "2"};
  nlohmann::json views;
  if (same) {
    const int o = c.rng.pick(multi);
    const auto& cams = g.nodes[t][o].cameras;
    const auto two = c.rng.sample(cams.size(), 2);
    a.highlight = {o, o};
    a.highlight_cameras = {cams[two[0]], cams[two[1]]};
  } else {
    const auto [p, q] = c.rng.pick(pairs);
    a.highlight = {p, q};
    a.highlight_cameras = {c.rng.pick(g.nodes[t][p].cameras), c.rng.pick(g.nodes[t][q].cameras)};
  }
  yes_no(it, same);
  it.assets.push_back(a);
  it.question = fill_objects(
      "Given the current driving scene. Are <object-id> and <object-id> the same object? <image>",
      {object_name(1), object_name(2)});
  it.frame_begin = it.frame_end = t;
  it.certificate = {{"objects", {node_ref(g.nodes[t][a.highlight[0]]), node_ref(g.nodes[t][a.highlight[1]])}},
                    {"view_cameras", a.highlight_cameras},
                    {"same", same}};
  return it;
}

QAItem gen_depth(const Ctx& c) {
  const int t = random_frame(c);
  const SceneGraph& g = c.graph();
  std::vector<std::pair<int, int>> cands;
  for (auto [a, b] : cross_view_pairs(g, t, true)) {
    const auto& na = g.nodes[t][a];
    const auto& nb = g.nodes[t][b];
    if (na.track_id && nb.track_id && *na.track_id == *nb.track_id) continue;
    if (std::abs(na.center.norm() - nb.center.norm()) > c.cfg.depth_margin) cands.emplace_back(a, b);
  }
  if (cands.empty()) throw NoEligibleCandidates("depth_margin");
  const auto [a, b] = c.rng.pick(cands);
  QAItem it;
  yes_no(it, g.nodes[t][a].center.norm() < g.nodes[t][b].center.norm());
  it.assets.push_back(pair_asset(c, t, a, b));
  it.question = fill_objects("Given the current driving scene, is <object-id> nearer to us than <object-id>? <image>",
                             {object_name(1), object_name(2)});
  it.frame_begin = it.frame_end = t;
  it.certificate = pair_cert(g, t, a, b);
  return it;
}

QAItem gen_relative_direction(const Ctx& c) {
  const int t = random_frame(c);
  const SceneGraph& g = c.graph();
  std::vector<std::pair<int, Relation>> cands;
  for (int o : visible_objects(g, t)) {
    if (auto r = g.relation({t, kEgoIndex}, {t, o})) cands.emplace_back(o, *r);
  }
  if (cands.empty()) throw NoEligibleCandidates("ego_relation");
  const auto [o, r] = c.rng.pick(cands);
  std::vector<std::string> others;
  for (Relation x : enum_values<Relation>()) {
    if (x != r) others.push_back(relation_phrase(x));
  }
  QAItem it;
  it.answer_index = arrange(it.options, relation_phrase(r),
                            pick_distractors(others, relation_phrase(r), c.k() - 1, c.rng), c.rng);
  AssetSpec a = asset("multiview", c.scene().scene_id, t);
  a.highlight = {o};
  a.labels = {"1"};
  it.assets.push_back(a);
  it.question = fill_objects("Given the current driving scene, where is <object-id> compared to us? <image>",
                             {object_name(1)});
  it.frame_begin = it.frame_end = t;
  it.certificate = {{"object", node_ref(g.nodes[t][o])}, {"relation", to_string(r)}};
  return it;
}

std::pair<int, int> distance_pair(const Ctx& c, int t) {
  std::vector<std::pair<int, int>> cands;
  for (auto [a, b] : cross_view_pairs(c.graph(), t, false)) {
    const double d = center_distance(c.graph(), t, a, b);
    if (d > c.cfg.distance_min && d < c.cfg.distance_max) cands.emplace_back(a, b);
  }
  if (cands.empty()) throw NoEligibleCandidates("distance_range");
  auto p = c.rng.pick(cands);
  if (c.rng.bernoulli(0.5)) std::swap(p.first, p.second);
  return p;
}

QAItem gen_relative_distance(const Ctx& c) {
  const int t = random_frame(c);
  const auto [a, b] = distance_pair(c, t);
  const double d = center_distance(c.graph(), t, a, b);
  const double size = distance_bin_size(d);
  const double lo = std::floor(d / size) * size;
  std::vector<double> lows = {lo};
  for (int off : {-2, -1, 1, 2}) {
    if (static_cast<int>(lows.size()) >= c.k()) break;
    if (lo + off * size > 0) lows.push_back(lo + off * size);
  }
  if (static_cast<int>(lows.size()) < c.k()) throw NoEligibleCandidates("distractors");
  std::sort(lows.begin(), lows.end());
  QAItem it;
  for (std::size_t k = 0; k < lows.size(); ++k) {
    it.options.push_back(distance_bin_label(lows[k], size));
    if (lows[k] == lo) it.answer_index = static_cast<int>(k);
  }
  it.assets.push_back(pair_asset(c, t, a, b));
  it.question = fill_objects(
      "Given the current driving scene, what is the approximate distance between <object-id> and "
      "<object-id>? <image>",
      {object_name(1), object_name(2)});
  it.frame_begin = it.frame_end = t;
  it.certificate = pair_cert(c.graph(), t, a, b);
  it.certificate["distance"] = d;
  it.certificate["bin"] = {lo, lo + size};
  return it;
}

QAItem gen_distance_absolute(const Ctx& c) {
  const int t = random_frame(c);
  const auto [a, b] = distance_pair(c, t);
  const double d = center_distance(c.graph(), t, a, b);
  QAItem it;
  it.answer_value = std::round(d * 10.0) / 10.0;
  it.assets.push_back(pair_asset(c, t, a, b));
  it.question = fill_objects(
      "Given the current driving scene, estimate the approximate distance between <object-id-1> and "
      "<object-id-1>? Provide your answer as a single numerical value in meters (e.g., 15.5). <image>",
      {object_name(1), object_name(2)});
  it.frame_begin = it.frame_end = t;
  it.certificate = pair_cert(c.graph(), t, a, b);
  it.certificate["distance"] = d;
  return it;
}

QAItem gen_counting(const Ctx& c) {
  const int t = random_frame(c);
  const Category cat = c.rng.pick(enum_values<Category>());
  int n = 0;
  for (const auto& node : c.graph().nodes[t]) {
    if (node.category == cat && visible(node)) ++n;
  }
  QAItem it;
  it.answer_value = n;
  it.assets.push_back(asset("multiview", c.scene().scene_id, t));
  it.question = "Given the current driving scene, how many " + category_plural(cat) +
                " are visible across all cameras? Provide your answer as a single numerical value (e.g., "
                "3). <image>";
  it.frame_begin = it.frame_end = t;
  it.certificate = {{"category", to_string(cat)}, {"count", n}};
  return it;
}

// --- Reasoning -------------------------------------------------------------

// Objects of the first clip frame, named by their 1-based position.
struct Clip {
  int t0 = 0;
  int t1 = 0;
  std::map<std::string, int> id_of;       // track -> id, visible first-frame objects only
  std::map<int, std::string> track_of;    // id -> track
  std::vector<std::map<std::string, int>> index_at;  // [t - t0] track -> object index

  const ObjectNode* node(const SceneGraph& g, int t, int id) const {
    if (t < t0 || t > t1) return nullptr;
    const auto& m = index_at[t - t0];
    auto it = m.find(track_of.at(id));
    return it == m.end() ? nullptr : &g.nodes[t][it->second];
  }
};

void require_tracks(const Ctx& c) {
  if (c.graph().temporal_disabled || !has_track_ids(c.scene())) throw NoEligibleCandidates("no_track_ids");
}

Clip make_clip(const Ctx& c, int t0, int t1) {
  Clip clip;
  clip.t0 = t0;
  clip.t1 = t1;
  for (const auto& n : c.graph().nodes[t0]) {
    if (n.track_id && visible(n)) {
      clip.id_of[*n.track_id] = n.i + 1;
      clip.track_of[n.i + 1] = *n.track_id;
    }
  }
  for (int t = t0; t <= t1; ++t) {
    std::map<std::string, int> m;
    for (const auto& n : c.graph().nodes[t]) {
      if (n.track_id) m[*n.track_id] = n.i;
    }
    clip.index_at.push_back(std::move(m));
  }
  return clip;
}

Clip random_clip(const Ctx& c) {
  require_tracks(c);
  const int len = c.cfg.clip_length;
  if (c.frames() < len) throw NoEligibleCandidates("clip_length");
  const int t0 = static_cast<int>(c.rng.index(c.frames() - len + 1));
  return make_clip(c, t0, t0 + len - 1);
}

// Video asset whose first frame labels the given ids (all clip objects when empty).
AssetSpec clip_video(const Ctx& c, const Clip& clip, int length, std::vector<int> ids = {},
                     std::vector<std::string> labels = {}) {
  AssetSpec a = asset("video", c.scene().scene_id, clip.t0);
  a.length = length;
  if (ids.empty()) {
    for (const auto& [id, track] : clip.track_of) {
      a.highlight.push_back(id - 1);
      a.labels.push_back(std::to_string(id));
    }
  } else {
    for (int id : ids) {
      a.highlight.push_back(id - 1);
      a.labels.push_back(labels.empty() ? std::to_string(id) : labels[a.labels.size()]);
    }
  }
  return a;
}

nlohmann::json clip_ids(const Clip& clip) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, track] : clip.track_of) j[std::to_string(id)] = track;
  return j;
}

struct Event {
  int t = 0;
  int id = 0;
  bool interaction = false;
  int label = 0;
  int other = 0;  // interaction target id
  double distance = 0.0;

  std::string text() const {
    if (!interaction) return object_name(id) + " " + action_event_phrase(static_cast<Action>(label));
    return object_name(id) + " is " + interaction_phrase(static_cast<Interaction>(label)) + " " +
           object_name(other);
  }
  auto key() const { return std::make_tuple(id, interaction, label, other); }
};

std::string sequence_text(const std::vector<Event>& seq) {
  std::vector<std::string> parts;
  for (const auto& e : seq) parts.push_back(e.text());
  return join(parts, ", then ");
}

// First onset of each action or interaction within frames [f0, f1].
std::vector<Event> event_onsets(const Ctx& c, const Clip& clip, int f0, int f1) {
  const SceneGraph& g = c.graph();
  std::vector<Event> out;
  std::set<std::tuple<int, bool, int, int>> seen;
  auto add = [&](Event e) {
    if (seen.insert(e.key()).second) out.push_back(e);
  };
  for (int t = f0; t <= f1; ++t) {
    for (const auto& [id, track] : clip.track_of) {
      const ObjectNode* n = clip.node(g, t, id);
      if (!n) continue;
      const ObjectNode* prev = clip.node(g, t - 1, id);
      for (Action a : g.actions[t][n->i].labels()) {
        if (prev && g.actions[t - 1][prev->i].contains(a)) continue;
        add({t, id, false, static_cast<int>(a), 0, n->center.norm()});
      }
    }
    auto has_edge = [&](int t2, int src, int dst, int label) {
      for (const auto& e : g.interactions[t2]) {
        if (e.src.i == src && e.dst.i == dst && e.label == label) return true;
      }
      return false;
    };
    for (const auto& e : g.interactions[t]) {
      const auto& src = g.nodes[t][e.src.i];
      const auto& dst = g.nodes[t][e.dst.i];
      if (!src.track_id || !dst.track_id) continue;
      auto si = clip.id_of.find(*src.track_id);
      auto di = clip.id_of.find(*dst.track_id);
      if (si == clip.id_of.end() || di == clip.id_of.end()) continue;
      const ObjectNode* ps = clip.node(g, t - 1, si->second);
      const ObjectNode* pd = clip.node(g, t - 1, di->second);
      if (ps && pd && has_edge(t - 1, ps->i, pd->i, e.label)) continue;
      add({t, si->second, true, e.label, di->second, src.center.norm()});
    }
  }
  return out;
}

// A sequence holds when each event first occurs in the window, in order.
bool sequence_holds(const std::vector<Event>& seq, const std::vector<Event>& onsets) {
  int last = -1;
  for (const auto& e : seq) {
    auto it = std::find_if(onsets.begin(), onsets.end(), [&](const Event& o) { return o.key() == e.key(); });
    if (it == onsets.end() || it->t <= last) return false;
    last = it->t;
  }
  return true;
}

QAItem gen_event_ordering(const Ctx& c) {
  require_tracks(c);
  const int tc = c.cfg.context_frames;
  if (c.frames() < tc + 1) throw NoEligibleCandidates("clip_length");
  const int t0 = static_cast<int>(c.rng.index(c.frames() - tc));
  const int ctx_end = t0 + tc - 1;
  const double horizon = c.scene().frames[ctx_end].timestamp + c.cfg.future_seconds + 1e-9;
  int f1 = ctx_end;
  while (f1 + 1 < c.frames() && c.scene().frames[f1 + 1].timestamp <= horizon) ++f1;
  const Clip clip = make_clip(c, t0, f1);
  const auto onsets = event_onsets(c, clip, ctx_end + 1, f1);
  if (onsets.empty()) throw NoEligibleCandidates("future_events");

  std::vector<Event> ranked = onsets;
  std::stable_sort(ranked.begin(), ranked.end(), [](const Event& a, const Event& b) {
    return std::tie(a.distance, a.t) < std::tie(b.distance, b.t);
  });
  std::vector<Event> chosen;
  std::set<int> used;
  for (const auto& e : ranked) {
    if (chosen.size() == 3) break;
    if (used.insert(e.t).second) chosen.push_back(e);
  }
  std::sort(chosen.begin(), chosen.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  const std::string correct = sequence_text(chosen);

  std::vector<std::string> pool;
  auto consider = [&](const std::vector<Event>& seq) {
    if (!sequence_holds(seq, onsets)) pool.push_back(sequence_text(seq));
  };
  std::vector<int> perm(chosen.size());
  for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = static_cast<int>(k);
  while (std::next_permutation(perm.begin(), perm.end())) {
    std::vector<Event> seq;
    for (int p : perm) seq.push_back(chosen[p]);
    consider(seq);
  }
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    const int labels = chosen[k].interaction ? int(enum_values<Interaction>().size())
                                             : int(enum_values<Action>().size());
    for (int l = 0; l < labels; ++l) {
      auto seq = chosen;
      seq[k].label = l;
      consider(seq);
    }
    for (const auto& [id, track] : clip.track_of) {
      if (id == chosen[k].other) continue;
      auto seq = chosen;
      seq[k].id = id;
      consider(seq);
    }
  }
  QAItem it;
  it.answer_index = arrange(it.options, correct, pick_distractors(pool, correct, c.k() - 1, c.rng), c.rng);
  it.assets.push_back(clip_video(c, clip, tc));
  it.question = with_video("Given this video sequence, what is the correct order of events in the next 3 seconds? <video>", tc);
  it.preamble = interaction_definition_prompt();
  it.frame_begin = t0;
  it.frame_end = f1;
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& e : chosen) ev.push_back({{"t", e.t}, {"text", e.text()}, {"distance", e.distance}});
  it.certificate = {{"events", ev}, {"future", {ctx_end + 1, f1}}, {"ids", clip_ids(clip)}};
  return it;
}

// "passed by", "occluded", or empty while the object is still visible.
std::string disappearance(const SceneGraph& g, const Clip& clip, int id, double theta) {
  const ObjectNode* first = clip.node(g, clip.t0, id);
  if (!first || first->max_visibility < theta) return "";
  const ObjectNode* last = clip.node(g, clip.t1, id);
  if (!last || !last->in_frustum) return "passed by";
  if (last->max_visibility < theta) return "occluded";
  return "";
}

QAItem gen_trajectory(const Ctx& c) {
  const Clip clip = random_clip(c);
  const double theta = c.cfg.occlusion_visibility;
  std::vector<std::string> truths;
  std::vector<std::string> pool;
  for (const auto& [id, track] : clip.track_of) {
    const std::string why = disappearance(c.graph(), clip, id, theta);
    for (const char* r : {"occluded", "passed by"}) {
      const std::string s = object_name(id) + ": " + r;
      (why == r ? truths : pool).push_back(s);
    }
  }
  if (truths.empty()) throw NoEligibleCandidates("disappeared_object");
  const std::string correct = c.rng.pick(truths);
  QAItem it;
  it.answer_index = arrange(it.options, correct, pick_distractors(pool, correct, c.k() - 1, c.rng), c.rng);
  const int len = clip.t1 - clip.t0 + 1;
  it.assets.push_back(clip_video(c, clip, len));
  it.question = with_video(
      "Given this video sequence with annotation on the first frame. Which object was present earlier "
      "but is no longer visible, and why?  <video>",
      len);
  it.frame_begin = clip.t0;
  it.frame_end = clip.t1;
  it.certificate = {{"ids", clip_ids(clip)}, {"theta_v", theta}};
  return it;
}

std::string id_list(const std::vector<int>& ids) {
  if (ids.empty()) return "None";
  std::vector<std::string> parts;
  for (int id : ids) parts.push_back(object_name(id));
  return join(parts, ", ");
}

QAItem gen_occlusion(const Ctx& c) {
  const Clip clip = random_clip(c);
  const double theta = c.cfg.occlusion_visibility;
  std::vector<int> occluded, clear;
  for (const auto& [id, track] : clip.track_of) {
    const ObjectNode* last = clip.node(c.graph(), clip.t1, id);
    if (last && last->in_frustum && last->max_visibility < theta) {
      occluded.push_back(id);
    } else if (last && last->max_visibility >= theta) {
      clear.push_back(id);
    }
  }
  if (static_cast<int>(occluded.size()) > c.cfg.max_occluded) throw NoEligibleCandidates("occluded_count");
  const std::string correct = id_list(occluded);
  std::vector<std::string> pool = {"None"};
  auto push = [&](std::vector<int> ids) {
    std::sort(ids.begin(), ids.end());
    if (static_cast<int>(ids.size()) <= c.cfg.max_occluded) pool.push_back(id_list(ids));
  };
  for (int x : clear) {
    auto more = occluded;
    more.push_back(x);
    push(more);
    push({x});
    for (std::size_t k = 0; k < occluded.size(); ++k) {
      auto swapped = occluded;
      swapped[k] = x;
      push(swapped);
    }
  }
  for (std::size_t k = 0; k < occluded.size(); ++k) {
    auto fewer = occluded;
    fewer.erase(fewer.begin() + k);
    push(fewer);
  }
  QAItem it;
  it.answer_index = arrange(it.options, correct, pick_distractors(pool, correct, c.k() - 1, c.rng), c.rng);
  const int len = clip.t1 - clip.t0 + 1;
  it.assets.push_back(clip_video(c, clip, len));
  it.question = with_video(
      "Given this video sequence with annotation on the first frame. Are there any objects occluded in "
      "the final frame? What are they? <video>",
      len);
  it.frame_begin = clip.t0;
  it.frame_end = clip.t1;
  it.certificate = {{"ids", clip_ids(clip)}, {"occluded", occluded}, {"theta_v", theta}};
  return it;
}

std::vector<std::string> cameras_seeing(const Frame& f, const Vec3d& p, Source source) {
  std::vector<std::string> out;
  for (const auto& name : canonical_camera_order(source)) {
    const CameraCalibration* cam = f.camera(name);
    if (cam && project_to_camera(p, *cam)) out.push_back(name);
  }
  return out;
}

QAItem gen_object_manipulation(const Ctx& c) {
  const Clip clip = random_clip(c);
  const SceneGraph& g = c.graph();
  const double eps_v = g.thresholds.eps_v;
  std::vector<int> moving;
  for (const auto& [id, track] : clip.track_of) {
    const ObjectNode* n = clip.node(g, clip.t1, id);
    if (n && n->velocity.head<2>().norm() > eps_v) moving.push_back(id);
  }
  if (moving.empty()) throw NoEligibleCandidates("moving_object");
  const int id = c.rng.pick(moving);
  static const std::vector<int> speeds = {5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  static const std::vector<int> rotations = {-90, -45, 0, 45, 90, 180};
  const int speed = c.rng.pick(speeds);
  const int rot = c.rng.pick(rotations);
  const ObjectNode& n = *clip.node(g, clip.t1, id);
  const Vec2d dir = n.velocity.head<2>().normalized();
  const Vec2d turned = Eigen::Rotation2Dd(rot * kPi<double> / 180.0) * dir;
  Vec3d sim = n.center;
  sim.head<2>() += turned * (speed / 3.6) * c.cfg.manipulation_dt;

  const Frame& f = c.scene().frames[clip.t1];
  const Source src = c.scene().metadata.source;
  const auto before = cameras_seeing(f, n.center, src);
  const auto after = cameras_seeing(f, sim, src);
  std::vector<std::string> exits, enters;
  for (const auto& x : before) {
    if (std::find(after.begin(), after.end(), x) == after.end()) exits.push_back(x);
  }
  for (const auto& x : after) {
    if (std::find(before.begin(), before.end(), x) == before.end()) enters.push_back(x);
  }
  std::string correct;
  nlohmann::json nearby = nullptr;
  if (after.empty()) {
    correct = "Disappears from all cameras";
  } else if (!exits.empty() && !enters.empty()) {
    correct = "Disappear from " + exits[0] + " then appear in " + enters[0];
  } else if (!enters.empty()) {
    correct = "Appear in " + enters[0];
  } else {
    int best = 0;
    double best_d = c.cfg.nearby_radius;
    for (const auto& [other, track] : clip.track_of) {
      const ObjectNode* o = clip.node(g, clip.t1, other);
      if (other == id || !o) continue;
      const double d = (o->center - sim).norm();
      if (d < best_d) {
        best_d = d;
        best = other;
      }
    }
    if (best) {
      const ObjectNode* o = clip.node(g, clip.t1, best);
      const std::string side = sim.y() > o->center.y() ? "left" : "right";
      correct = "Moving on the " + side + " side of " + object_name(best);
      nearby = {{"id", best}, {"distance", best_d}, {"side", side}};
    } else {
      correct = "Moving in " + after[0];
    }
  }

  std::vector<std::string> pool = {"Disappears from all cameras"};
  for (const auto& a : canonical_camera_order(src)) {
    if (!f.camera(a)) continue;
    pool.push_back("Appear in " + a);
    pool.push_back("Moving in " + a);
    for (const auto& b : canonical_camera_order(src)) {
      if (a != b && f.camera(b)) pool.push_back("Disappear from " + a + " then appear in " + b);
    }
  }
  for (const auto& [other, track] : clip.track_of) {
    const ObjectNode* o = clip.node(g, clip.t1, other);
    if (other == id || !o || (o->center - sim).norm() >= c.cfg.nearby_radius) continue;
    pool.push_back("Moving on the left side of " + object_name(other));
    pool.push_back("Moving on the right side of " + object_name(other));
  }
  QAItem it;
  it.answer_index = arrange(it.options, correct, pick_distractors(pool, correct, c.k() - 1, c.rng), c.rng);
  const int len = clip.t1 - clip.t0 + 1;
  it.assets.push_back(clip_video(c, clip, len));
  it.question = with_video(
      fill(fill(fill_objects("Given this video sequence, what if <object-id> rotates <degree> degrees (note: "
                             "current ego front camera is at +90 degrees) and continues with velocity: "
                             "<velocity> km/h, what would be the trajectory of it in the next 0.5 seconds? "
                             "<video>",
                             {object_name(id)}),
                "<degree>", {std::to_string(rot)}),
           "<velocity>", {std::to_string(speed)}),
      len);
  it.frame_begin = clip.t0;
  it.frame_end = clip.t1;
  it.certificate = {{"ids", clip_ids(clip)},
                    {"object", node_ref(n)},
                    {"id", id},
                    {"speed_kmh", speed},
                    {"rotation_degrees", rot},
                    {"simulated_center", {sim.x(), sim.y(), sim.z()}},
                    {"cameras_before", before},
                    {"cameras_after", after},
                    {"nearby", nearby}};
  return it;
}

// Unique most frequent action over the clip, if any.
std::optional<Action> dominant_action(const SceneGraph& g, const Clip& clip, int id) {
  std::map<Action, int> counts;
  for (int t = clip.t0; t <= clip.t1; ++t) {
    const ObjectNode* n = clip.node(g, t, id);
    if (!n) continue;
    for (Action a : g.actions[t][n->i].labels()) ++counts[a];
  }
  std::optional<Action> best;
  int top = 0;
  bool tie = false;
  for (const auto& [a, k] : counts) {
    if (k > top) {
      top = k;
      best = a;
      tie = false;
    } else if (k == top) {
      tie = true;
    }
  }
  if (tie) return std::nullopt;
  return best;
}

std::string action_listing(const std::vector<std::pair<int, Action>>& rows) {
  std::vector<std::string> parts;
  for (const auto& [id, a] : rows) parts.push_back(object_name(id) + ": " + action_phrase(a));
  return join(parts, ", ");
}

QAItem gen_action(const Ctx& c) {
  const Clip clip = random_clip(c);
  const SceneGraph& g = c.graph();
  std::vector<std::pair<int, Action>> cands;
  for (const auto& [id, track] : clip.track_of) {
    if (auto a = dominant_action(g, clip, id)) cands.emplace_back(id, *a);
  }
  if (cands.size() < 3) throw NoEligibleCandidates("tracked_objects");
  c.rng.shuffle(cands);
  std::vector<std::pair<int, Action>> chosen;
  std::vector<std::string> used_cams;
  std::vector<bool> taken(cands.size(), false);
  for (std::size_t k = 0; k < cands.size() && chosen.size() < 3; ++k) {
    const auto& cams = clip.node(g, clip.t0, cands[k].first)->cameras;
    if (disjoint(cams, used_cams)) {
      chosen.push_back(cands[k]);
      taken[k] = true;
      used_cams.insert(used_cams.end(), cams.begin(), cams.end());
    }
  }
  for (std::size_t k = 0; k < cands.size() && chosen.size() < 3; ++k) {
    if (!taken[k]) chosen.push_back(cands[k]);
  }
  std::sort(chosen.begin(), chosen.end());
  const std::string correct = action_listing(chosen);
  std::vector<std::string> pool;
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    for (Action a : enum_values<Action>()) {
      auto rows = chosen;
      rows[k].second = a;
      pool.push_back(action_listing(rows));
    }
    auto rows = chosen;
    std::swap(rows[k].second, rows[(k + 1) % rows.size()].second);
    pool.push_back(action_listing(rows));
  }
  QAItem it;
  it.answer_index = arrange(it.options, correct, pick_distractors(pool, correct, c.k() - 1, c.rng), c.rng);
  const int len = clip.t1 - clip.t0 + 1;
  std::vector<int> ids;
  for (const auto& [id, a] : chosen) ids.push_back(id);
  it.assets.push_back(clip_video(c, clip, len, ids));
  it.question = with_video("Given this video sequence, what are the actions of the three highlighted objects? <video>", len);
  it.frame_begin = clip.t0;
  it.frame_end = clip.t1;
  it.certificate = {{"ids", clip_ids(clip)}, {"objects", ids}};
  return it;
}

QAItem gen_interaction(const Ctx& c) {
  const Clip clip = random_clip(c);
  const SceneGraph& g = c.graph();
  std::map<std::pair<int, int>, std::map<Interaction, int>> counts;
  for (int t = clip.t0; t <= clip.t1; ++t) {
    for (const auto& e : g.interactions[t]) {
      const auto& s = g.nodes[t][e.src.i];
      const auto& d = g.nodes[t][e.dst.i];
      if (!s.track_id || !d.track_id) continue;
      auto si = clip.id_of.find(*s.track_id);
      auto di = clip.id_of.find(*d.track_id);
      if (si == clip.id_of.end() || di == clip.id_of.end()) continue;
      ++counts[{si->second, di->second}][static_cast<Interaction>(e.label)];
    }
  }
  struct Cand {
    int src, dst;
    Interaction m;
    int count;
  };
  std::vector<Cand> cross, same;
  for (const auto& [pair, by_label] : counts) {
    int top = 0;
    bool tie = false;
    Interaction best = Interaction::kLead;
    for (const auto& [m, k] : by_label) {
      if (k > top) {
        top = k;
        best = m;
        tie = false;
      } else if (k == top) {
        tie = true;
      }
    }
    if (tie) continue;
    const bool apart = disjoint(clip.node(g, clip.t0, pair.first)->cameras,
                                clip.node(g, clip.t0, pair.second)->cameras);
    (apart ? cross : same).push_back({pair.first, pair.second, best, top});
  }
  if (cross.empty() && same.empty()) throw NoEligibleCandidates("interaction_pair");
  const bool want_cross = c.rng.bernoulli(c.cfg.p_cross_view);
  const auto& part = (want_cross ? !cross.empty() : same.empty()) ? cross : same;
  int top = 0;
  for (const auto& x : part) top = std::max(top, x.count);
  std::vector<Cand> best;
  for (const auto& x : part) {
    if (x.count == top) best.push_back(x);
  }
  const Cand pick = c.rng.pick(best);
  auto sentence = [](Interaction m) { return object_name(1) + " is " + interaction_phrase(m) + " " + object_name(2); };
  std::vector<std::string> pool;
  for (Interaction m : enum_values<Interaction>()) pool.push_back(sentence(m));
  QAItem it;
  it.answer_index =
      arrange(it.options, sentence(pick.m), pick_distractors(pool, sentence(pick.m), c.k() - 1, c.rng), c.rng);
  const int len = clip.t1 - clip.t0 + 1;
  it.assets.push_back(clip_video(c, clip, len, {pick.src, pick.dst}, {"1", "2"}));
  it.question = with_video("Given this video sequence, what is the interaction between Object-1 and Object-2? <video>", len);
  it.preamble = interaction_definition_prompt();
  it.frame_begin = clip.t0;
  it.frame_end = clip.t1;
  it.certificate = {{"ids", clip_ids(clip)},
                    {"src", pick.src},
                    {"dst", pick.dst},
                    {"interaction", to_string(pick.m)},
                    {"count", pick.count},
                    {"cross_view", &part == &cross}};
  return it;
}

using Generator = QAItem (*)(const Ctx&);

Generator generator_for(Task task) {
  static const Generator table[] = {
      gen_scene_construction, gen_perspective_matching, gen_ego_rotation,     gen_camera_ordering,
      gen_leave_one_camera_out, gen_multi_step,        gen_allocentric,      gen_spatial_compatibility,
      gen_object_matching,    gen_depth,               gen_relative_direction, gen_relative_distance,
      gen_distance_absolute,  gen_counting,            gen_event_ordering,   gen_trajectory,
      gen_occlusion,          gen_object_manipulation, gen_action,           gen_interaction,
  };
  return table[static_cast<std::size_t>(task)];
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json conditions_of(const Scene& s) {
  const auto& m = s.metadata;
  nlohmann::json j = {{"source", to_string(m.source)}};
  j["weather"] = m.weather ? nlohmann::json(to_string(m.weather->value)) : nlohmann::json(nullptr);
  j["time_of_day"] = m.time_of_day ? nlohmann::json(to_string(m.time_of_day->value)) : nlohmann::json(nullptr);
  j["scene_type"] = m.scene_type ? nlohmann::json(to_string(m.scene_type->value)) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

QAItem generate_item(Task task, const SceneBundle& bundle, const std::vector<SceneBundle>& pool,
                     const GeneratorConfig& cfg, std::uint64_t seed) {
  if (bundle.scene.frames.empty()) throw NoEligibleCandidates("frames");
  Rng rng(seed);
  const Ctx ctx{bundle, pool, cfg, rng};
  QAItem it = generator_for(task)(ctx);
  it.task = task;
  it.seed = seed;
  it.scene_id = bundle.scene.scene_id;
  it.item_id = to_string(task) + ":" + bundle.scene.scene_id + ":" + hex64(seed);
  it.conditions = conditions_of(bundle.scene);
  return it;
}

// ---------------------------------------------------------------------------
// Corpus

Quotas default_quotas() {
  Quotas q;
  for (Task t : enum_values<Task>()) {
    switch (ability_of(t)) {
      case Ability::kConst: q[t] = 164; break;
      case Ability::kUnders: q[t] = 68; break;
      case Ability::kReas: q[t] = 50; break;
    }
  }
  return q;
}

Quotas quotas_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("quotas", "expected an object of task -> count");
  Quotas q;
  for (const auto& [k, v] : j.items()) {
    const auto t = enum_from_string<Task>(k);
    if (!t) throw SchemaError("quotas." + k, "unknown task");
    if (!v.is_number_integer() || v.get<int>() < 0) throw SchemaError("quotas." + k, "expected a count >= 0");
    q[*t] = v.get<int>();
  }
  return q;
}

bool GenerationReport::has_shortfall() const {
  for (const auto& [t, r] : tasks) {
    if (r.successes < r.quota) return true;
  }
  return false;
}

nlohmann::json GenerationReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [t, r] : tasks) {
    j[to_string(t)] = {{"quota", r.quota},
                       {"attempts", r.attempts},
                       {"successes", r.successes},
                       {"duplicates", r.duplicates},
                       {"rejections", r.rejections},
                       {"shortfall", std::max(0, r.quota - r.successes)}};
  }
  return j;
}

namespace {

void run_task(Task task, int quota, const std::vector<const SceneBundle*>& order,
              const std::vector<SceneBundle>& pool, const GeneratorConfig& cfg, std::vector<QAItem>& items,
              TaskReport& report) {
  report.quota = quota;
  if (order.empty()) return;
  const std::uint64_t base = mix_seed(cfg.seed, hash_string(to_string(task)));
  const long budget = static_cast<long>(quota) * cfg.attempts_per_item;
  std::set<std::string> seen;
  for (long a = 0; report.successes < quota && a < budget; ++a) {
    ++report.attempts;
    const SceneBundle& b = *order[a % order.size()];
    try {
      QAItem it = generate_item(task, b, pool, cfg, mix_seed(base, static_cast<std::uint64_t>(a)));
      if (!seen.insert(it.content_key()).second) {
        ++report.duplicates;
        continue;
      }
      items.push_back(std::move(it));
      ++report.successes;
    } catch (const NoEligibleCandidates& e) {
      ++report.rejections[e.constraint()];
    }
  }
}

}  // namespace

Corpus generate_all(const std::vector<SceneBundle>& pool, const Quotas& quotas, const GeneratorConfig& cfg,
                    int jobs) {
  cfg.validate();
  std::vector<const SceneBundle*> order;
  for (const auto& b : pool) order.push_back(&b);
  std::sort(order.begin(), order.end(),
            [](const SceneBundle* a, const SceneBundle* b) { return a->scene.scene_id < b->scene.scene_id; });
  std::vector<std::pair<Task, int>> work(quotas.begin(), quotas.end());
  std::vector<std::vector<QAItem>> items(work.size());
  std::vector<TaskReport> reports(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < work.size();) {
      run_task(work[k].first, work[k].second, order, pool, cfg, items[k], reports[k]);
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(work.size())));
  std::vector<std::thread> threads;
  for (int k = 1; k < n; ++k) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();

  Corpus out;
  for (std::size_t k = 0; k < work.size(); ++k) {
    out.report.tasks[work[k].first] = reports[k];
    for (auto& it : items[k]) out.items.push_back(std::move(it));
  }
  std::sort(out.items.begin(), out.items.end(), [](const QAItem& a, const QAItem& b) {
    return std::tie(a.task, a.scene_id, a.seed) < std::tie(b.task, b.scene_id, b.seed);
  });
  return out;
}

std::string serialize_corpus(const std::vector<QAItem>& items) {
  std::string out;
  for (const auto& it : items) {
    out += it.to_json().dump();
    out += '\n';
  }
  return out;
}

std::vector<QAItem> parse_corpus(std::string_view jsonl) {
  std::vector<QAItem> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(QAItem::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line_no), e.what());
    } catch (const PathError& e) {
      throw SchemaError("line " + std::to_string(line_no) + "." + e.path(), e.what());
    }
  }
  return out;
}

}  // namespace drivescene
