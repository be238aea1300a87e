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

#include "drivescene/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "drivescene/rng.h"

namespace drivescene {
namespace {

constexpr int kImageWidth = 1600;
constexpr int kImageHeight = 900;
constexpr double kAnnotationRange = 60.0;

struct TrackPlan {
  Category category = Category::kCar;
  Vec3d size = Vec3d::Ones();
  Vec2d position = Vec2d::Zero();  // world
  double yaw = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double yaw_rate = 0.0;
  int turn_from = 0;
  int turn_to = 0;
  int lane_change_from = -1;
  double lane_change_speed = 0.0;  // signed, toward +left
  int birth = 0;
  int death = 1 << 20;
  int occlusion_from = -1;
  int occlusion_to = -1;
  double occlusion_factor = 1.0;
};

struct TrackState {
  Vec2d position;
  double yaw;
  Vec2d velocity;
};

Vec3d category_size(Category c, Rng& rng) {
  switch (c) {
    case Category::kCar:
      return {rng.uniform(4.2, 4.9), rng.uniform(1.8, 2.0), rng.uniform(1.4, 1.7)};
    case Category::kTruck:
      return {rng.uniform(7.0, 10.0), rng.uniform(2.4, 2.6), rng.uniform(3.0, 3.6)};
    case Category::kPedestrian:
      return {rng.uniform(0.5, 0.8), rng.uniform(0.5, 0.8), rng.uniform(1.6, 1.9)};
    case Category::kCyclist:
      return {rng.uniform(1.6, 1.9), rng.uniform(0.5, 0.7), rng.uniform(1.6, 1.8)};
    case Category::kTrafficCone:
      return {0.4, 0.4, 0.8};
    case Category::kBarrier:
      return {0.5, rng.uniform(1.5, 2.5), 1.0};
    case Category::kOther:
      return {1.0, 1.0, 1.0};
  }
  return Vec3d::Ones();
}

// Advances a plan by one frame using fine substeps.
void step(const TrackPlan& plan, int frame, double dt, TrackState& s, double& speed) {
  constexpr int kSub = 20;
  const double h = dt / kSub;
  Vec2d start = s.position;
  for (int k = 0; k < kSub; ++k) {
    const bool turning = frame >= plan.turn_from && frame < plan.turn_to;
    if (turning) s.yaw = normalize_angle(s.yaw + plan.yaw_rate * h);
    speed = std::max(0.0, speed + plan.accel * h);
    Vec2d f(std::cos(s.yaw), std::sin(s.yaw));
    Vec2d left(-std::sin(s.yaw), std::cos(s.yaw));
    s.position += speed * h * f;
    if (plan.lane_change_from >= 0 && frame >= plan.lane_change_from &&
        frame < plan.lane_change_from + 3) {
      s.position += plan.lane_change_speed * h * left;
    }
  }
  s.velocity = (s.position - start) / dt;
}

std::vector<TrackPlan> plan_tracks(Rng& rng, const SyntheticOptions& opt) {
  std::vector<TrackPlan> plans;
  const bool intersection = opt.road != SceneType::kStraightRoad && opt.road != SceneType::kSCurveRoad;
  for (int k = 0; k < opt.num_tracks; ++k) {
    TrackPlan p;
    const double roll = rng.uniform();
    if (roll < 0.45) {
      p.category = Category::kCar;
    } else if (roll < 0.55) {
      p.category = Category::kTruck;
    } else if (roll < 0.72) {
      p.category = Category::kPedestrian;
    } else if (roll < 0.80) {
      p.category = Category::kCyclist;
    } else if (roll < 0.92) {
      p.category = Category::kTrafficCone;
    } else {
      p.category = Category::kBarrier;
    }
    p.size = category_size(p.category, rng);
    const double x = rng.uniform(-35.0, 55.0);
    switch (p.category) {
      case Category::kCar:
      case Category::kTruck: {
        const double lane_roll = rng.uniform();
        if (intersection && lane_roll < 0.25) {
          // Cross traffic.
          const bool north = rng.bernoulli(0.5);
          p.position = {rng.uniform(18.0, 30.0), north ? rng.uniform(-40.0, -10.0)
                                                       : rng.uniform(10.0, 40.0)};
          p.yaw = north ? kPi<double> / 2 : -kPi<double> / 2;
          p.speed = rng.uniform(4.0, 10.0);
        } else if (lane_roll < 0.55) {
          p.position = {x, rng.bernoulli(0.5) ? 0.0 : -3.5};
          p.yaw = 0.0;
          p.speed = rng.uniform(3.0, 12.0);
        } else if (lane_roll < 0.85) {
          p.position = {x, rng.bernoulli(0.5) ? 3.5 : 7.0};
          p.yaw = kPi<double>;
          p.speed = rng.uniform(3.0, 12.0);
        } else {
          p.position = {x, -7.5};
          p.yaw = rng.bernoulli(0.8) ? 0.0 : kPi<double>;
          p.speed = 0.0;
        }
        if (p.speed > 0.0) {
          const double motion = rng.uniform();
          if (motion < 0.2) {
            p.accel = rng.bernoulli(0.5) ? 2.5 : -2.0;
          } else if (motion < 0.35) {
            p.lane_change_from = static_cast<int>(rng.index(opt.num_frames));
            p.lane_change_speed = rng.bernoulli(0.5) ? 2.6 : -2.6;
          } else if (motion < 0.5) {
            p.turn_from = static_cast<int>(rng.index(std::max(1, opt.num_frames - 4)));
            p.turn_to = p.turn_from + 3 + static_cast<int>(rng.index(4));
            p.yaw_rate = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.7, 1.2);
            p.speed = std::min(p.speed, 6.0);
          }
        }
        break;
      }
      case Category::kPedestrian: {
        const double side = rng.bernoulli(0.5) ? 10.0 : -10.0;
        p.position = {x, side + rng.uniform(-1.0, 1.0)};
        if (rng.bernoulli(0.3)) {
          p.yaw = side > 0 ? -kPi<double> / 2 : kPi<double> / 2;  // crossing
        } else {
          p.yaw = rng.bernoulli(0.5) ? 0.0 : kPi<double>;
        }
        p.speed = rng.bernoulli(0.7) ? rng.uniform(0.8, 1.6) : 0.0;
        break;
      }
      case Category::kCyclist:
        p.position = {x, -5.5};
        p.yaw = 0.0;
        p.speed = rng.uniform(3.0, 6.0);
        break;
      case Category::kTrafficCone:
      case Category::kBarrier:
      case Category::kOther:
        p.position = {x, rng.uniform(-6.5, -5.0)};
        p.yaw = rng.uniform(-0.2, 0.2);
        break;
    }
    if (rng.bernoulli(0.2)) p.birth = 1 + static_cast<int>(rng.index(opt.num_frames / 2));
    if (rng.bernoulli(0.25)) {
      p.death = opt.num_frames / 3 + static_cast<int>(rng.index(opt.num_frames / 2));
    }
    if (rng.bernoulli(0.3)) {
      p.occlusion_from = static_cast<int>(rng.index(opt.num_frames));
      p.occlusion_to = p.occlusion_from + 1 + static_cast<int>(rng.index(6));
      p.occlusion_factor = rng.uniform(0.15, 0.5);
    }
    plans.push_back(p);
  }
  return plans;
}

std::vector<std::vector<Vec2d>> world_lanes(SceneType road) {
  std::vector<std::vector<Vec2d>> lanes;
  for (double y : {-8.75, -5.25, -1.75, 1.75, 5.25, 8.75}) {
    std::vector<Vec2d> line;
    for (double x = -80.0; x <= 160.0; x += 10.0) {
      const double bend = road == SceneType::kSCurveRoad ? 6.0 * std::sin(x / 25.0) : 0.0;
      line.emplace_back(x, y + bend);
    }
    lanes.push_back(line);
  }
  if (road != SceneType::kStraightRoad && road != SceneType::kSCurveRoad) {
    for (double x : {17.0, 31.0}) {
      lanes.push_back({Vec2d(x, -80.0), Vec2d(x, 80.0)});
    }
  }
  return lanes;
}

std::string format_id(const char* fmt, int k) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, k);
  return buf;
}

}  // namespace

std::vector<CameraCalibration> make_camera_rig(Source source) {
  const auto& names = canonical_camera_order(source);
  const int n = static_cast<int>(names.size());
  const double fov = std::min(2.0, 2.0 * kPi<double> / n * 1.35);
  const double fx = (kImageWidth / 2.0) / std::tan(fov / 2.0);
  const bool ego_from_camera = source == Source::kWaymo || source == Source::kAv2;
  std::vector<CameraCalibration> rig;
  for (int k = 0; k < n; ++k) {
    const double psi = -2.0 * kPi<double> * k / n;
    const Vec3d z(std::cos(psi), std::sin(psi), 0.0);
    const Vec3d x(std::sin(psi), -std::cos(psi), 0.0);
    const Vec3d y(0.0, 0.0, -1.0);
    Mat3d r;
    r.row(0) = x.transpose();
    r.row(1) = y.transpose();
    r.row(2) = z.transpose();
    const Vec3d mount(1.2 * std::cos(psi), 1.2 * std::sin(psi), 1.6);
    CameraCalibration c;
    c.camera_name = names[k];
    c.intrinsics << fx, 0.0, kImageWidth / 2.0, 0.0, fx, kImageHeight / 2.0, 0.0, 0.0, 1.0;
    const Mat4d cam_from_ego = make_transform<double>(r, -r * mount);
    c.frame_convention =
        ego_from_camera ? FrameConvention::kEgoFromCamera : FrameConvention::kCameraFromEgo;
    c.extrinsic = ego_from_camera ? rigid_inverse(cam_from_ego) : cam_from_ego;
    c.width = kImageWidth;
    c.height = kImageHeight;
    rig.push_back(c);
  }
  return rig;
}

void annotate_projections(Frame& frame, const std::vector<double>& occlusion) {
  for (std::size_t i = 0; i < frame.objects.size(); ++i) {
    ObjectAnnotation& o = frame.objects[i];
    o.projections.clear();
    const Mat3d rot = yaw_rotation(o.yaw);
    for (const auto& cam : frame.cameras) {
      const Mat4d t = cam.camera_from_ego();
      double x0 = 1e18, y0 = 1e18, x1 = -1e18, y1 = -1e18;
      bool ok = true;
      for (int c = 0; c < 8 && ok; ++c) {
        const Vec3d local((c & 1 ? 0.5 : -0.5) * o.size.x(), (c & 2 ? 0.5 : -0.5) * o.size.y(),
                          (c & 4 ? 0.5 : -0.5) * o.size.z());
        const Vec3d p = transform_point(t, Vec3d(o.center + rot * local));
        if (p.z() < 0.1) {
          ok = false;
          break;
        }
        const Vec3d h = cam.intrinsics * p;
        x0 = std::min(x0, h.x() / h.z());
        x1 = std::max(x1, h.x() / h.z());
        y0 = std::min(y0, h.y() / h.z());
        y1 = std::max(y1, h.y() / h.z());
      }
      if (!ok) continue;
      const double full = (x1 - x0) * (y1 - y0);
      const double cx0 = std::max(0.0, x0), cy0 = std::max(0.0, y0);
      const double cx1 = std::min<double>(cam.width, x1), cy1 = std::min<double>(cam.height, y1);
      if (!(cx1 > cx0 && cy1 > cy0) || !(full > 0.0)) continue;
      const double geometric = (cx1 - cx0) * (cy1 - cy0) / full;
      Projection pr;
      pr.camera_name = cam.camera_name;
      pr.box = Eigen::Vector4d(cx0, cy0, cx1, cy1);
      pr.visibility = std::clamp(geometric * occlusion[i], 0.0, 1.0);
      o.projections.push_back(pr);
    }
  }
}

Scene make_reference_scene(Source source, const std::string& scene_id, std::uint64_t seed,
                           const SyntheticOptions& opt) {
  Rng rng(seed);
  Scene scene;
  scene.scene_id = scene_id;
  scene.calibrated = true;
  scene.metadata.source = source;
  scene.metadata.ego_type = source == Source::kTruckscenes ? EgoType::kTruck : EgoType::kCar;
  const NativeAvailability native = native_availability(source);
  if (native.weather) {
    const auto values = enum_values<Weather>();
    scene.metadata.weather = Labeled<Weather>{values[rng.index(values.size())],
                                              Provenance::kSourceNative};
  }
  if (native.time_of_day) {
    const auto values = enum_values<TimeOfDay>();
    scene.metadata.time_of_day = Labeled<TimeOfDay>{values[rng.index(values.size())],
                                                    Provenance::kSourceNative};
  }

  const std::vector<CameraCalibration> rig = make_camera_rig(source);
  std::vector<TrackPlan> plans = plan_tracks(rng, opt);
  const auto lanes = world_lanes(opt.road);

  // Ego motion.
  const double ego_speed = rng.uniform(2.0, 9.0);
  double ego_yaw_rate = 0.0;
  int ego_turn_from = 0, ego_turn_to = 0;
  if (opt.road == SceneType::kSCurveRoad) {
    ego_yaw_rate = rng.uniform(-0.3, 0.3);
    ego_turn_to = opt.num_frames;
  } else if (opt.road != SceneType::kStraightRoad) {
    ego_yaw_rate = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.2, 0.7);
    ego_turn_from = static_cast<int>(rng.index(std::max(1, opt.num_frames / 2)));
    ego_turn_to = ego_turn_from + 4 + static_cast<int>(rng.index(4));
  }
  TrackPlan ego_plan;
  ego_plan.speed = ego_speed;
  ego_plan.yaw_rate = ego_yaw_rate;
  ego_plan.turn_from = ego_turn_from;
  ego_plan.turn_to = ego_turn_to;
  TrackState ego{Vec2d::Zero(), 0.0, Vec2d::Zero()};
  double ego_v = ego_speed;

  std::vector<TrackState> states;
  std::vector<double> speeds;
  for (const auto& p : plans) {
    states.push_back({p.position, p.yaw, Vec2d::Zero()});
    speeds.push_back(p.speed);
  }

  for (int k = 0; k < opt.num_frames; ++k) {
    if (k > 0) {
      step(ego_plan, k - 1, opt.dt, ego, ego_v);
      for (std::size_t j = 0; j < plans.size(); ++j) step(plans[j], k - 1, opt.dt, states[j], speeds[j]);
    }
    Frame f;
    f.frame_index = k;
    f.timestamp = 1000.0 + opt.dt * k;
    f.ego_pose = make_transform<double>(yaw_rotation(ego.yaw),
                                        Vec3d(ego.position.x(), ego.position.y(), 0.0));
    f.cameras = rig;
    const Mat4d ego_from_world = rigid_inverse(f.ego_pose);
    std::vector<double> occlusion;
    for (std::size_t j = 0; j < plans.size(); ++j) {
      const TrackPlan& p = plans[j];
      if (k < p.birth || k >= p.death) continue;
      const Vec3d world(states[j].position.x(), states[j].position.y(), p.size.z() / 2.0);
      const Vec3d local = transform_point(ego_from_world, world);
      if (local.head<2>().norm() > kAnnotationRange) continue;
      ObjectAnnotation o;
      if (opt.track_ids) o.track_id = format_id("trk-%03d", static_cast<int>(j));
      o.category = p.category;
      o.center = local;
      o.size = p.size;
      o.yaw = normalize_angle(states[j].yaw - ego.yaw);
      if (opt.native_velocity && k == 0) {
        // Track starts from its planned speed before the first step.
        const Vec2d v0 = p.speed * Vec2d(std::cos(p.yaw), std::sin(p.yaw));
        o.velocity = transform_vector(ego_from_world, Vec3d(v0.x(), v0.y(), 0.0));
      } else if (opt.native_velocity) {
        const Vec2d v = states[j].velocity;
        o.velocity = transform_vector(ego_from_world, Vec3d(v.x(), v.y(), 0.0));
      }
      f.objects.push_back(o);
      occlusion.push_back(k >= p.occlusion_from && k < p.occlusion_to ? p.occlusion_factor : 1.0);
    }
    annotate_projections(f, occlusion);
    for (const auto& cam : rig) {
      f.image_refs[cam.camera_name] =
          "images/" + scene_id + "/" + std::to_string(k) + "/" + cam.camera_name + ".png";
    }
    if (opt.lanes) {
      for (const auto& line : lanes) {
        Polyline pl;
        for (const auto& w : line) {
          const Vec3d l = transform_point(ego_from_world, Vec3d(w.x(), w.y(), 0.0));
          pl.push_back(l.head<2>());
        }
        f.lanes.push_back(pl);
      }
    }
    scene.frames.push_back(std::move(f));
  }
  return scene;
}

Scene to_source_convention(const Scene& reference) {
  Scene raw = rotate_scene(reference, -source_alpha(reference.metadata.source));
  raw.calibrated = false;
  return raw;
}

std::vector<FixtureScene> make_fixture_pool(std::uint64_t seed) {
  struct Plan {
    Source source;
    SceneType major;
    SceneType minor;
  };
  const Plan plans[] = {
      {Source::kNuscenes, SceneType::kCrossIntersection, SceneType::kStraightRoad},
      {Source::kWaymo, SceneType::kStraightRoad, SceneType::kSCurveRoad},
      {Source::kAv2, SceneType::kCrossIntersection, SceneType::kTIntersection},
      {Source::kTruckscenes, SceneType::kStraightRoad, SceneType::kCrossIntersection},
      {Source::kOnce, SceneType::kStraightRoad, SceneType::kSCurveRoad},
  };
  std::vector<FixtureScene> pool;
  for (const Plan& plan : plans) {
    for (int k = 0; k < 5; ++k) {
      SyntheticOptions opt;
      opt.road = k < 4 ? plan.major : plan.minor;
      opt.track_ids = plan.source != Source::kOnce;
      opt.native_velocity = plan.source == Source::kNuscenes || plan.source == Source::kOnce;
      const std::string id = to_string(plan.source) + format_id("-%04d", k);
      const std::uint64_t s = mix_seed(seed, hash_string(id));
      pool.push_back({to_source_convention(make_reference_scene(plan.source, id, s, opt)),
                      opt.road});
    }
  }
  return pool;
}

}  // namespace drivescene
