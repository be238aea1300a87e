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

#include "drivescene/schema.h"

#include <cmath>
#include <set>

#include "drivescene/errors.h"

namespace drivescene {

using nlohmann::json;

template <>
const std::vector<std::string>& enum_names<Source>() {
  static const std::vector<std::string> n = {"nuscenes", "waymo", "av2", "truckscenes", "once"};
  return n;
}
template <>
const std::vector<std::string>& enum_names<Weather>() {
  static const std::vector<std::string> n = {"cloudy",   "rain",  "snow",  "hail",
                                             "overcast", "clear", "sunny", "other"};
  return n;
}
template <>
const std::vector<std::string>& enum_names<TimeOfDay>() {
  static const std::vector<std::string> n = {"daytime", "nighttime", "twilight"};
  return n;
}
template <>
const std::vector<std::string>& enum_names<SceneType>() {
  static const std::vector<std::string> n = {
      "cross_intersection",     "t_intersection", "y_intersection", "skewed_intersection",
      "multi_leg_intersection", "straight_road",  "s_curve_road"};
  return n;
}
template <>
const std::vector<std::string>& enum_names<EgoType>() {
  static const std::vector<std::string> n = {"car", "truck"};
  return n;
}
template <>
const std::vector<std::string>& enum_names<Provenance>() {
  static const std::vector<std::string> n = {"source_native", "inferred", "human_verified"};
  return n;
}
template <>
const std::vector<std::string>& enum_names<Category>() {
  static const std::vector<std::string> n = {"vehicle.car", "vehicle.truck", "pedestrian",
                                             "cyclist",     "traffic_cone",  "barrier",
                                             "other"};
  return n;
}
template <>
const std::vector<std::string>& enum_names<FrameConvention>() {
  static const std::vector<std::string> n = {"camera_from_ego", "ego_from_camera"};
  return n;
}

bool is_static_category(Category c) {
  return c == Category::kTrafficCone || c == Category::kBarrier;
}

Mat4d CameraCalibration::camera_from_ego() const {
  return frame_convention == FrameConvention::kCameraFromEgo ? extrinsic
                                                             : rigid_inverse(extrinsic);
}

const Projection* ObjectAnnotation::projection_in(std::string_view camera) const {
  for (const auto& p : projections) {
    if (p.camera_name == camera) return &p;
  }
  return nullptr;
}

const CameraCalibration* Frame::camera(std::string_view name) const {
  for (const auto& c : cameras) {
    if (c.camera_name == name) return &c;
  }
  return nullptr;
}

namespace {

constexpr double kRigidTol = 1e-6;

std::string idx(const std::string& path, const char* key, std::size_t i) {
  return (path.empty() ? std::string(key) : path + "." + key) + "[" + std::to_string(i) + "]";
}

std::string at(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

// ---- typed reader (throws on first problem) ----

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(at(path, key), "missing field");
  return *it;
}

double read_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(path, "expected finite number");
  return d;
}

std::string read_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "expected string");
  return v.get<std::string>();
}

template <typename E>
E read_enum(const json& v, const std::string& path) {
  const std::string s = read_string(v, path);
  auto e = enum_from_string<E>(s);
  if (!e) throw SchemaError(path, "unknown value '" + s + "'");
  return *e;
}

template <int R, int C>
Eigen::Matrix<double, R, C> read_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != static_cast<std::size_t>(R * C)) {
    throw SchemaError(path, "expected array of " + std::to_string(R * C) + " numbers");
  }
  Eigen::Matrix<double, R, C> m;
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      m(r, c) = read_number(v[r * C + c], path + "[" + std::to_string(r * C + c) + "]");
    }
  }
  return m;
}

const json& require_array(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_array()) throw SchemaError(at(path, key), "expected array");
  return v;
}

void require_object(const json& v, const std::string& path) {
  if (!v.is_object()) throw SchemaError(path.empty() ? "$" : path, "expected object");
}

template <typename E>
std::optional<Labeled<E>> read_labeled(const json& meta, const char* key,
                                       const std::string& path) {
  auto it = meta.find(key);
  if (it == meta.end() || it->is_null()) return std::nullopt;
  const std::string p = at(path, key);
  require_object(*it, p);
  return Labeled<E>{read_enum<E>(require(*it, "value", p), at(p, "value")),
                    read_enum<Provenance>(require(*it, "provenance", p), at(p, "provenance"))};
}

CameraCalibration read_camera(const json& v, const std::string& path) {
  require_object(v, path);
  CameraCalibration c;
  c.camera_name = read_string(require(v, "camera_name", path), at(path, "camera_name"));
  c.intrinsics = read_matrix<3, 3>(require(v, "intrinsics", path), at(path, "intrinsics"));
  c.extrinsic = read_matrix<4, 4>(require(v, "extrinsic", path), at(path, "extrinsic"));
  c.frame_convention = read_enum<FrameConvention>(require(v, "frame_convention", path),
                                                  at(path, "frame_convention"));
  const json& size = require(v, "image_size", path);
  if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
      !size[1].is_number_integer()) {
    throw SchemaError(at(path, "image_size"), "expected [width, height] integers");
  }
  c.width = size[0].get<int>();
  c.height = size[1].get<int>();
  return c;
}

ObjectAnnotation read_object(const json& v, const std::string& path) {
  require_object(v, path);
  ObjectAnnotation o;
  if (auto it = v.find("track_id"); it != v.end() && !it->is_null()) {
    o.track_id = read_string(*it, at(path, "track_id"));
  }
  o.category = read_enum<Category>(require(v, "category", path), at(path, "category"));
  o.center = read_matrix<3, 1>(require(v, "center", path), at(path, "center"));
  o.size = read_matrix<3, 1>(require(v, "size", path), at(path, "size"));
  o.yaw = read_number(require(v, "yaw", path), at(path, "yaw"));
  if (auto it = v.find("velocity"); it != v.end() && !it->is_null()) {
    o.velocity = read_matrix<3, 1>(*it, at(path, "velocity"));
  }
  const json& projs = require_array(v, "projections", path);
  for (std::size_t i = 0; i < projs.size(); ++i) {
    const std::string p = idx(path, "projections", i);
    require_object(projs[i], p);
    Projection pr;
    pr.camera_name = read_string(require(projs[i], "camera_name", p), at(p, "camera_name"));
    pr.box = read_matrix<4, 1>(require(projs[i], "box", p), at(p, "box"));
    pr.visibility = read_number(require(projs[i], "visibility", p), at(p, "visibility"));
    o.projections.push_back(std::move(pr));
  }
  return o;
}

Frame read_frame(const json& v, const std::string& path) {
  require_object(v, path);
  Frame f;
  const json& fi = require(v, "frame_index", path);
  if (!fi.is_number_integer()) throw SchemaError(at(path, "frame_index"), "expected integer");
  f.frame_index = fi.get<int>();
  f.timestamp = read_number(require(v, "timestamp", path), at(path, "timestamp"));
  f.ego_pose = read_matrix<4, 4>(require(v, "ego_pose", path), at(path, "ego_pose"));
  const json& cams = require_array(v, "cameras", path);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    f.cameras.push_back(read_camera(cams[i], idx(path, "cameras", i)));
  }
  const json& objs = require_array(v, "objects", path);
  for (std::size_t i = 0; i < objs.size(); ++i) {
    f.objects.push_back(read_object(objs[i], idx(path, "objects", i)));
  }
  if (auto it = v.find("image_refs"); it != v.end() && !it->is_null()) {
    require_object(*it, at(path, "image_refs"));
    for (const auto& [k, ref] : it->items()) {
      f.image_refs[k] = read_string(ref, at(at(path, "image_refs"), k.c_str()));
    }
  }
  if (auto it = v.find("lanes"); it != v.end() && !it->is_null()) {
    if (!it->is_array()) throw SchemaError(at(path, "lanes"), "expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string lp = idx(path, "lanes", i);
      const json& line = (*it)[i];
      if (!line.is_array()) throw SchemaError(lp, "expected array of points");
      Polyline poly;
      for (std::size_t k = 0; k < line.size(); ++k) {
        poly.push_back(read_matrix<2, 1>(line[k], lp + "[" + std::to_string(k) + "]"));
      }
      f.lanes.push_back(std::move(poly));
    }
  }
  return f;
}

// ---- writer ----

template <typename Derived>
json matrix_json(const Eigen::MatrixBase<Derived>& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  }
  return a;
}

template <typename E>
json labeled_json(const std::optional<Labeled<E>>& l) {
  if (!l) return nullptr;
  return json{{"value", to_string(l->value)}, {"provenance", to_string(l->provenance)}};
}

// ---- invariant checks shared by the typed path ----

void check_camera(const CameraCalibration& c, const std::string& path) {
  if (c.camera_name.empty()) throw InvariantError(at(path, "camera_name"), "empty camera name");
  if (c.intrinsics(2, 2) != 1.0) throw InvariantError(at(path, "intrinsics"), "K[2][2] != 1");
  if (!(c.intrinsics(0, 0) > 0.0) || !(c.intrinsics(1, 1) > 0.0)) {
    throw InvariantError(at(path, "intrinsics"), "focal lengths must be positive");
  }
  if (!is_rigid(c.extrinsic, kRigidTol)) {
    throw InvariantError(at(path, "extrinsic"), "not a rigid transform");
  }
  if (c.width <= 0 || c.height <= 0) {
    throw InvariantError(at(path, "image_size"), "image size must be positive");
  }
}

void check_object(const ObjectAnnotation& o, const std::set<std::string>& cameras,
                  const std::string& path) {
  if (o.track_id && o.track_id->empty()) {
    throw InvariantError(at(path, "track_id"), "empty track id");
  }
  if (!(o.size.minCoeff() > 0.0)) throw InvariantError(at(path, "size"), "sizes must be > 0");
  if (!(o.yaw >= -kPi<double> && o.yaw <= kPi<double>)) {
    throw InvariantError(at(path, "yaw"), "yaw outside [-pi, pi]");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < o.projections.size(); ++i) {
    const Projection& p = o.projections[i];
    const std::string pp = idx(path, "projections", i);
    if (!cameras.count(p.camera_name)) {
      throw InvariantError(at(pp, "camera_name"), "unknown camera '" + p.camera_name + "'");
    }
    if (!seen.insert(p.camera_name).second) {
      throw InvariantError(at(pp, "camera_name"), "duplicate camera in projections");
    }
    if (!(p.visibility >= 0.0 && p.visibility <= 1.0)) {
      throw InvariantError(at(pp, "visibility"), "visibility outside [0, 1]");
    }
    if (!(p.box[0] <= p.box[2] && p.box[1] <= p.box[3])) {
      throw InvariantError(at(pp, "box"), "box corners out of order");
    }
  }
}

}  // namespace

void check_invariants(const Scene& scene) {
  if (scene.scene_id.empty()) throw InvariantError("scene_id", "empty scene id");
  if (scene.frames.empty()) throw InvariantError("frames", "frames must be non-empty");
  std::set<std::string> reference;
  for (std::size_t t = 0; t < scene.frames.size(); ++t) {
    const Frame& f = scene.frames[t];
    const std::string fp = idx("", "frames", t);
    if (f.frame_index < 0) throw InvariantError(at(fp, "frame_index"), "must be >= 0");
    if (t > 0) {
      const Frame& prev = scene.frames[t - 1];
      if (f.frame_index <= prev.frame_index) {
        throw InvariantError(at(fp, "frame_index"), "frame indices must increase");
      }
      if (!(f.timestamp > prev.timestamp)) {
        throw InvariantError(at(fp, "timestamp"), "timestamps must strictly increase");
      }
    }
    if (!is_rigid(f.ego_pose, kRigidTol)) {
      throw InvariantError(at(fp, "ego_pose"), "not a rigid transform");
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < f.cameras.size(); ++i) {
      check_camera(f.cameras[i], idx(fp, "cameras", i));
      if (!names.insert(f.cameras[i].camera_name).second) {
        throw InvariantError(at(idx(fp, "cameras", i), "camera_name"), "duplicate camera");
      }
    }
    if (t == 0) {
      reference = names;
    } else if (names != reference) {
      throw InvariantError(at(fp, "cameras"), "camera set differs from frames[0]");
    }
    for (const auto& [cam, ref] : f.image_refs) {
      if (!names.count(cam)) {
        throw InvariantError(at(at(fp, "image_refs"), cam.c_str()), "unknown camera");
      }
    }
    for (std::size_t i = 0; i < f.objects.size(); ++i) {
      check_object(f.objects[i], names, idx(fp, "objects", i));
    }
  }
}

Scene scene_from_json(const json& doc) {
  require_object(doc, "");
  const json& version = require(doc, "format_version", "");
  if (!version.is_string() || version.get<std::string>() != kFormatVersion) {
    throw SchemaError("format_version", "expected \"" + std::string(kFormatVersion) + "\"");
  }
  Scene s;
  s.scene_id = read_string(require(doc, "scene_id", ""), "scene_id");
  const json& cal = require(doc, "calibrated", "");
  if (!cal.is_boolean()) throw SchemaError("calibrated", "expected boolean");
  s.calibrated = cal.get<bool>();
  const json& meta = require(doc, "metadata", "");
  require_object(meta, "metadata");
  s.metadata.source = read_enum<Source>(require(meta, "source", "metadata"), "metadata.source");
  s.metadata.ego_type =
      read_enum<EgoType>(require(meta, "ego_type", "metadata"), "metadata.ego_type");
  s.metadata.weather = read_labeled<Weather>(meta, "weather", "metadata");
  s.metadata.time_of_day = read_labeled<TimeOfDay>(meta, "time_of_day", "metadata");
  s.metadata.scene_type = read_labeled<SceneType>(meta, "scene_type", "metadata");
  const json& frames = require_array(doc, "frames", "");
  for (std::size_t t = 0; t < frames.size(); ++t) {
    s.frames.push_back(read_frame(frames[t], "frames[" + std::to_string(t) + "]"));
  }
  check_invariants(s);
  return s;
}

Scene parse_canonical(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw SchemaError("$", "not a well-formed document");
  return scene_from_json(doc);
}

json scene_to_json(const Scene& scene) {
  json meta = {{"source", to_string(scene.metadata.source)},
               {"ego_type", to_string(scene.metadata.ego_type)},
               {"weather", labeled_json(scene.metadata.weather)},
               {"time_of_day", labeled_json(scene.metadata.time_of_day)},
               {"scene_type", labeled_json(scene.metadata.scene_type)}};
  json frames = json::array();
  for (const Frame& f : scene.frames) {
    json cams = json::array();
    for (const auto& c : f.cameras) {
      cams.push_back({{"camera_name", c.camera_name},
                      {"intrinsics", matrix_json(c.intrinsics)},
                      {"extrinsic", matrix_json(c.extrinsic)},
                      {"frame_convention", to_string(c.frame_convention)},
                      {"image_size", {c.width, c.height}}});
    }
    json objs = json::array();
    for (const auto& o : f.objects) {
      json projs = json::array();
      for (const auto& p : o.projections) {
        projs.push_back({{"camera_name", p.camera_name},
                         {"box", matrix_json(p.box)},
                         {"visibility", p.visibility}});
      }
      objs.push_back({{"track_id", o.track_id ? json(*o.track_id) : json(nullptr)},
                      {"category", to_string(o.category)},
                      {"center", matrix_json(o.center)},
                      {"size", matrix_json(o.size)},
                      {"yaw", o.yaw},
                      {"velocity", o.velocity ? matrix_json(*o.velocity) : json(nullptr)},
                      {"projections", projs}});
    }
    json lanes = json::array();
    for (const auto& line : f.lanes) {
      json pts = json::array();
      for (const auto& p : line) pts.push_back(matrix_json(p));
      lanes.push_back(pts);
    }
    frames.push_back({{"frame_index", f.frame_index},
                      {"timestamp", f.timestamp},
                      {"ego_pose", matrix_json(f.ego_pose)},
                      {"cameras", cams},
                      {"objects", objs},
                      {"image_refs", f.image_refs},
                      {"lanes", lanes}});
  }
  return {{"format_version", kFormatVersion},
          {"scene_id", scene.scene_id},
          {"calibrated", scene.calibrated},
          {"metadata", meta},
          {"frames", frames}};
}

std::string serialize_canonical(const Scene& scene) { return scene_to_json(scene).dump() + "\n"; }

double source_alpha(Source source) {
  switch (source) {
    case Source::kNuscenes:
      return 0.0;
    case Source::kWaymo:
    case Source::kAv2:
      return kPi<double> / 2.0;
    case Source::kOnce:
      return kPi<double>;
    case Source::kTruckscenes:
      return 3.0 * kPi<double> / 4.0;
  }
  return 0.0;
}

Scene rotate_scene(const Scene& scene, double alpha) {
  Scene out = scene;
  if (alpha == 0.0) return out;
  const Mat3d r = yaw_rotation(alpha);
  const Mat4d r4 = yaw_transform(alpha);
  const Mat4d r4_inv = yaw_transform(-alpha);
  for (Frame& f : out.frames) {
    f.ego_pose = f.ego_pose * r4_inv;
    for (auto& c : f.cameras) {
      // camera_from_ego picks up R4^-1 on the right; ego_from_camera is its inverse.
      if (c.frame_convention == FrameConvention::kCameraFromEgo) {
        c.extrinsic = c.extrinsic * r4_inv;
      } else {
        c.extrinsic = r4 * c.extrinsic;
      }
    }
    for (auto& o : f.objects) {
      o.center = r * o.center;
      o.yaw = normalize_angle(o.yaw + alpha);
      if (o.velocity) o.velocity = r * *o.velocity;
    }
    for (auto& line : f.lanes) {
      for (auto& p : line) p = r.topLeftCorner<2, 2>() * p;
    }
  }
  return out;
}

Scene calibrate_scene(const Scene& scene, std::optional<double> alpha) {
  if (scene.calibrated) throw AlreadyCalibrated(scene.scene_id);
  Scene out = rotate_scene(scene, alpha.value_or(source_alpha(scene.metadata.source)));
  out.calibrated = true;
  return out;
}

std::optional<Vec2d> project_to_camera(const Vec3d& point_ego, const CameraCalibration& cam) {
  const Vec3d p = transform_point(cam.camera_from_ego(), point_ego);
  if (!(p.z() > 0.0)) return std::nullopt;
  const Vec3d h = cam.intrinsics * p;
  const Vec2d px(h.x() / h.z(), h.y() / h.z());
  if (px.x() < 0.0 || px.y() < 0.0 || px.x() >= cam.width || px.y() >= cam.height) {
    return std::nullopt;
  }
  return px;
}

const std::vector<std::string>& canonical_camera_order(Source source) {
  static const std::vector<std::string> nuscenes = {"CAM_FRONT", "CAM_FRONT_RIGHT",
                                                    "CAM_BACK_RIGHT", "CAM_BACK",
                                                    "CAM_BACK_LEFT", "CAM_FRONT_LEFT"};
  static const std::vector<std::string> waymo = {"FRONT", "FRONT_RIGHT", "SIDE_RIGHT",
                                                 "SIDE_LEFT", "FRONT_LEFT"};
  static const std::vector<std::string> av2 = {
      "ring_front_center", "ring_front_right", "ring_side_right", "ring_rear_right",
      "ring_rear_left",    "ring_side_left",   "ring_front_left"};
  static const std::vector<std::string> truckscenes = {"CAMERA_LEFT_FRONT", "CAMERA_RIGHT_FRONT",
                                                       "CAMERA_RIGHT_BACK", "CAMERA_LEFT_BACK"};
  static const std::vector<std::string> once = {"cam01", "cam05", "cam06", "cam07",
                                                "cam08", "cam09", "cam03"};
  switch (source) {
    case Source::kNuscenes:
      return nuscenes;
    case Source::kWaymo:
      return waymo;
    case Source::kAv2:
      return av2;
    case Source::kTruckscenes:
      return truckscenes;
    case Source::kOnce:
      return once;
  }
  return nuscenes;
}

const std::string& front_camera(Source source) { return canonical_camera_order(source).front(); }

NativeAvailability native_availability(Source source) {
  switch (source) {
    case Source::kNuscenes:
      return {false, true, false};
    case Source::kAv2:
      return {false, false, false};
    case Source::kOnce:
    case Source::kTruckscenes:
    case Source::kWaymo:
      return {true, true, false};
  }
  return {};
}

bool has_track_ids(const Scene& scene) {
  for (const Frame& f : scene.frames) {
    for (const auto& o : f.objects) {
      if (o.track_id) return true;
    }
  }
  return false;
}

Vec3d ego_size(EgoType type) {
  return type == EgoType::kTruck ? Vec3d(10.0, 2.5, 3.5) : Vec3d(4.6, 1.9, 1.6);
}

}  // namespace drivescene
