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


// Independent oracles for relation and interaction labelling, shared by the
// unit tests and the acceptance binary.
#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "drivescene/graph.h"

namespace drivescene::oracle {

inline constexpr double kPiD = kPi<double>;

inline ObjectNode node_at(double x, double y, double yaw, Vec3d size = Vec3d(4, 2, 1.5)) {
  ObjectNode n;
  n.center = Vec3d(x, y, 0.0);
  n.yaw = yaw;
  n.size = size;
  return n;
}


// Independent oracle: rotate into the source frame with Eigen, then band each axis.
inline std::optional<Relation> relation_oracle(const ObjectNode& src, const ObjectNode& dst,
                                        double delta) {
  const Eigen::Vector2d d = (dst.center - src.center).head<2>();
  const Eigen::Vector2d local = Eigen::Rotation2Dd(-src.yaw) * d;
  const double fwd = local.x();
  const double left = local.y();
  auto band = [delta](double v) -> int {
    if (v > delta) return 1;
    if (v < -delta) return -1;
    if (std::abs(v) < delta) return 0;
    return 9;  // exactly on a boundary
  };
  static const std::map<std::pair<int, int>, Relation> table = {
      {{1, 0}, Relation::kAheadOf},      {{-1, 0}, Relation::kBehind},
      {{0, 1}, Relation::kLeftOf},       {{0, -1}, Relation::kRightOf},
      {{1, 1}, Relation::kAheadLeftOf},  {{1, -1}, Relation::kAheadRightOf},
      {{-1, 1}, Relation::kRearLeftOf},  {{-1, -1}, Relation::kRearRightOf}};
  auto it = table.find({band(fwd), band(left)});
  if (it == table.end()) return std::nullopt;
  return it->second;
}


inline ObjectNode mover(double x, double y, double yaw, double speed) {
  ObjectNode n = node_at(x, y, yaw);
  n.velocity = speed * forward_axis(yaw);
  return n;
}

inline ActionSet acts(bool stopped, bool lane_change = false) {
  ActionSet s;
  if (stopped) s.insert(Action::kStopped);
  if (lane_change) s.insert(Action::kLaneChangeLeft);
  return s;
}


// Rule table: first matching row wins. Wildcards are -1.
struct Row {
  int direction;  // 0 same, 1 opposite, 2 perpendicular, 3 other
  int zone;       // 0 ahead, 1 behind, 2 beside
  int same_lane, src_moving, dst_moving, lane_change, faster, similar_speed, shrinking, close;
  std::optional<Interaction> label;
};

inline std::optional<Interaction> table_oracle(const ObjectNode& src, const ObjectNode& dst,
                                        ActionSet sa, ActionSet da, std::optional<double> prev,
                                        const ThresholdSet& th) {
  const Eigen::Vector3d rel = src.center - dst.center;
  if (!(rel.norm() < th.delta_int)) return std::nullopt;
  const Eigen::Vector2d local = Eigen::Rotation2Dd(-dst.yaw) * rel.head<2>();
  const Eigen::Vector2d hs(std::cos(src.yaw), std::sin(src.yaw));
  const Eigen::Vector2d hd(std::cos(dst.yaw), std::sin(dst.yaw));
  const double dphi = std::atan2(std::abs(hs.x() * hd.y() - hs.y() * hd.x()), hs.dot(hd));
  int direction = 3;
  if (dphi < kPiD / 6) direction = 0;
  else if (dphi > 5 * kPiD / 6) direction = 1;
  else if (std::abs(dphi - kPiD / 2) < kPiD / 9) direction = 2;
  const int zone = local.x() > 1.0 ? 0 : (local.x() < -1.0 ? 1 : 2);
  const double vs = src.velocity.norm(), vd = dst.velocity.norm();
  const int f[] = {
      std::abs(local.y()) < 2.0,
      !sa.contains(Action::kStopped),
      !da.contains(Action::kStopped),
      sa.contains(Action::kLaneChangeLeft) || sa.contains(Action::kLaneChangeRight),
      vs > vd + 0.5,
      std::abs(vs - vd) < 1.0,
      prev.has_value() && rel.norm() < *prev,
      rel.norm() < 10.0,
  };
  static const std::vector<Row> rows = {
      {0, 0, 1, 1, 1, -1, -1, -1, -1, -1, Interaction::kLead},
      {0, 0, -1, -1, -1, 1, 1, -1, -1, -1, Interaction::kOvertake},
      {0, 0, 0, -1, -1, 0, 1, -1, -1, -1, Interaction::kPassing},
      {0, 0, -1, -1, -1, -1, -1, -1, -1, -1, std::nullopt},
      {0, 1, 1, 1, 1, -1, -1, -1, -1, -1, Interaction::kFollow},
      {0, 1, -1, -1, -1, -1, -1, -1, -1, -1, std::nullopt},
      {0, 2, 0, 1, 1, -1, -1, 1, -1, -1, Interaction::kCoMoving},
      {0, 2, -1, -1, -1, -1, -1, -1, -1, -1, std::nullopt},
      {1, -1, -1, 1, 1, -1, -1, -1, 1, -1, Interaction::kApproaching},
      {1, -1, -1, 1, -1, -1, -1, -1, -1, 1, Interaction::kCrossing},
      {2, -1, -1, 1, -1, -1, -1, -1, -1, 1, Interaction::kCrossing},
  };
  for (const Row& r : rows) {
    if (r.direction != direction) continue;
    if (r.zone != -1 && r.zone != zone) continue;
    const int want[] = {r.same_lane, r.src_moving, r.dst_moving, r.lane_change,
                        r.faster,    r.similar_speed, r.shrinking, r.close};
    bool ok = true;
    for (int k = 0; k < 8; ++k) ok = ok && (want[k] == -1 || want[k] == f[k]);
    if (ok) return r.label;
  }
  return std::nullopt;
}

}  // namespace drivescene::oracle
