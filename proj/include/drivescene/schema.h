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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drivescene/geometry.h"
#include "json.hpp"

namespace drivescene {

enum class Source { kNuscenes, kWaymo, kAv2, kTruckscenes, kOnce };
enum class Weather { kCloudy, kRain, kSnow, kHail, kOvercast, kClear, kSunny, kOther };
enum class TimeOfDay { kDaytime, kNighttime, kTwilight };
enum class SceneType {
  kCrossIntersection,
  kTIntersection,
  kYIntersection,
  kSkewedIntersection,
  kMultiLegIntersection,
  kStraightRoad,
  kSCurveRoad,
};
enum class EgoType { kCar, kTruck };
enum class Provenance { kSourceNative, kInferred, kHumanVerified };
enum class Category { kCar, kTruck, kPedestrian, kCyclist, kTrafficCone, kBarrier, kOther };
enum class FrameConvention { kCameraFromEgo, kEgoFromCamera };

// Wire names, indexed by enumerator value.
template <typename E>
const std::vector<std::string>& enum_names();

template <>
const std::vector<std::string>& enum_names<Source>();
template <>
const std::vector<std::string>& enum_names<Weather>();
template <>
const std::vector<std::string>& enum_names<TimeOfDay>();
template <>
const std::vector<std::string>& enum_names<SceneType>();
template <>
const std::vector<std::string>& enum_names<EgoType>();
template <>
const std::vector<std::string>& enum_names<Provenance>();
template <>
const std::vector<std::string>& enum_names<Category>();
template <>
const std::vector<std::string>& enum_names<FrameConvention>();

template <typename E>
const std::string& to_string(E e) {
  return enum_names<E>()[static_cast<std::size_t>(e)];
}

template <typename E>
std::optional<E> enum_from_string(std::string_view s) {
  const auto& names = enum_names<E>();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

template <typename E>
std::vector<E> enum_values() {
  std::vector<E> out;
  for (std::size_t i = 0; i < enum_names<E>().size(); ++i) out.push_back(static_cast<E>(i));
  return out;
}

bool is_static_category(Category c);

struct CameraCalibration {
  std::string camera_name;
  Mat3d intrinsics = Mat3d::Identity();
  Mat4d extrinsic = Mat4d::Identity();
  FrameConvention frame_convention = FrameConvention::kCameraFromEgo;
  int width = 0;
  int height = 0;

  Mat4d camera_from_ego() const;
};

// Axis-aligned pixel box (x0, y0, x1, y1).
struct Projection {
  std::string camera_name;
  Eigen::Vector4d box = Eigen::Vector4d::Zero();
  double visibility = 0.0;
};

struct ObjectAnnotation {
  std::optional<std::string> track_id;
  Category category = Category::kOther;
  Vec3d center = Vec3d::Zero();
  Vec3d size = Vec3d::Ones();  // length, width, height
  double yaw = 0.0;
  std::optional<Vec3d> velocity;
  std::vector<Projection> projections;

  const Projection* projection_in(std::string_view camera) const;
};

using Polyline = std::vector<Vec2d>;

struct Frame {
  int frame_index = 0;
  double timestamp = 0.0;
  Mat4d ego_pose = Mat4d::Identity();  // world-from-ego
  std::vector<CameraCalibration> cameras;
  std::vector<ObjectAnnotation> objects;
  std::map<std::string, std::string> image_refs;
  std::vector<Polyline> lanes;  // ego frame, optional

  const CameraCalibration* camera(std::string_view name) const;
};

template <typename T>
struct Labeled {
  T value;
  Provenance provenance;
  bool operator==(const Labeled&) const = default;
};

struct SceneMetadata {
  Source source = Source::kNuscenes;
  EgoType ego_type = EgoType::kCar;
  std::optional<Labeled<Weather>> weather;
  std::optional<Labeled<TimeOfDay>> time_of_day;
  std::optional<Labeled<SceneType>> scene_type;
};

struct Scene {
  std::string scene_id;
  SceneMetadata metadata;
  std::vector<Frame> frames;
  bool calibrated = false;
};

inline constexpr const char* kFormatVersion = "1";

// Canonical document I/O. Parsing throws SchemaError / InvariantError naming
// the offending path, e.g. "frames[2].objects[0].yaw".
Scene parse_canonical(std::string_view text);
Scene scene_from_json(const nlohmann::json& doc);
nlohmann::json scene_to_json(const Scene& scene);
std::string serialize_canonical(const Scene& scene);

void check_invariants(const Scene& scene);

struct ValidationIssue {
  std::string path;
  std::string message;
  bool schema = true;  // false for invariant violations
};

// Walks the raw document and reports every problem without throwing.
std::vector<ValidationIssue> validate_document(std::string_view text);

// Per-source angular offset into the reference convention.
double source_alpha(Source source);

// Rotates every geometric field about +z by alpha; ignores the calibrated flag.
Scene rotate_scene(const Scene& scene, double alpha);

// rotate_scene(alpha or source_alpha) and marks calibrated; throws AlreadyCalibrated.
Scene calibrate_scene(const Scene& scene, std::optional<double> alpha = std::nullopt);

// Pixel location of an ego-frame point, or nullopt when outside the frustum.
std::optional<Vec2d> project_to_camera(const Vec3d& point_ego, const CameraCalibration& cam);

// Canonical clockwise camera order starting from the front camera.
const std::vector<std::string>& canonical_camera_order(Source source);
const std::string& front_camera(Source source);

// Which metadata attributes a source provides natively.
struct NativeAvailability {
  bool weather = false;
  bool time_of_day = false;
  bool scene_type = false;
};
NativeAvailability native_availability(Source source);

bool has_track_ids(const Scene& scene);

// Vehicle box used for the ego when it participates in relations.
Vec3d ego_size(EgoType type);

}  // namespace drivescene
