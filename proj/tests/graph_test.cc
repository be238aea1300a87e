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

#include <cmath>
#include <map>
#include <tuple>

#include <gtest/gtest.h>

#include "drivescene/errors.h"
#include "drivescene/rng.h"
#include "drivescene/synthetic.h"
#include "graph_oracles.h"
#include "test_scenes.h"

namespace drivescene {
namespace {

using testing::box;
using testing::empty_frame;
using testing::scene_of;
using oracle::acts;
using oracle::kPiD;
using oracle::mover;
using oracle::node_at;
using oracle::relation_oracle;
using oracle::table_oracle;

TEST(LocalProjection, HandExamples) {
  LocalOffset a = local_projection(node_at(0, 0, 0), node_at(5, 0, 0));
  EXPECT_DOUBLE_EQ(a.s, 5.0);
  EXPECT_DOUBLE_EQ(a.u, 0.0);
  LocalOffset b = local_projection(node_at(0, 0, kPiD / 2), node_at(0, 5, 0));
  EXPECT_NEAR(b.s, 5.0, 1e-12);
  EXPECT_NEAR(b.u, 0.0, 1e-12);
  // A point to the left has negative u.
  EXPECT_LT(local_projection(node_at(0, 0, 0), node_at(0, 3, 0)).u, 0.0);
}

TEST(LocalProjection, PreservesPlanarNorm) {
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    ObjectNode a = node_at(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-kPiD, kPiD));
    ObjectNode b = node_at(rng.uniform(-50, 50), rng.uniform(-50, 50), 0);
    b.center.z() = rng.uniform(-2, 2);
    const LocalOffset o = local_projection(a, b);
    EXPECT_NEAR(std::hypot(o.s, o.u), (b.center - a.center).head<2>().norm(), 1e-9);
    EXPECT_DOUBLE_EQ(o.w, b.center.z() - a.center.z());
  }
}

TEST(AdaptiveThreshold, ExamplesAndMonotone) {
  ThresholdSet th;
  EXPECT_DOUBLE_EQ(adaptive_threshold(node_at(0, 0, 0, Vec3d(4, 2, 1.5)), th), 1.5);
  EXPECT_DOUBLE_EQ(adaptive_threshold(node_at(0, 0, 0, Vec3d(0.4, 0.4, 1)), th), 1.0);
  Rng rng(2);
  for (int k = 0; k < 1000; ++k) {
    const double l = rng.uniform(0.1, 12), w = rng.uniform(0.1, 4);
    const double dl = rng.uniform(0, 3), dw = rng.uniform(0, 3);
    const double base = adaptive_threshold(node_at(0, 0, 0, Vec3d(l, w, 1)), th);
    EXPECT_LE(base, adaptive_threshold(node_at(0, 0, 0, Vec3d(l + dl, w, 1)), th));
    EXPECT_LE(base, adaptive_threshold(node_at(0, 0, 0, Vec3d(l, w + dw, 1)), th));
  }
}

TEST(ClassifyRelation, HandExamples) {
  EXPECT_EQ(relation_from_offset(10, 0, 2), Relation::kAheadOf);
  EXPECT_EQ(relation_from_offset(10, -10, 2), Relation::kAheadLeftOf);
  EXPECT_EQ(relation_from_offset(1, 1, 2), std::nullopt);
  EXPECT_EQ(relation_from_offset(10, 2, 2), std::nullopt);  // on the band edge
}

TEST(ClassifyRelation, MatchesBandOracle) {
  Rng rng(3);
  ThresholdSet th;
  std::map<int, int> seen;
  for (int k = 0; k < 10000; ++k) {
    const Vec3d size(rng.uniform(0.3, 10), rng.uniform(0.3, 3), 1.5);
    const bool snap = k % 10 == 0;
    ObjectNode src = node_at(rng.uniform(-20, 20), rng.uniform(-20, 20),
                             snap ? 0.0 : rng.uniform(-kPiD, kPiD), size);
    const double delta = adaptive_threshold(src, th);
    ObjectNode dst = node_at(src.center.x() + rng.uniform(-8, 8), src.center.y() + rng.uniform(-8, 8), 0);
    if (snap) {
      // Exact boundary coordinates are representable with yaw = 0.
      dst.center.x() = src.center.x() + (rng.bernoulli(0.5) ? delta : -delta);
    }
    const auto got = classify_relation(src, dst, th);
    ASSERT_EQ(got, relation_oracle(src, dst, delta)) << k;
    seen[got ? static_cast<int>(*got) : -1]++;
  }
  EXPECT_EQ(seen.size(), 9u);
}

TEST(ClassifyRelation, CardinalAntisymmetryBySign) {
  Rng rng(4);
  ThresholdSet th;
  for (int k = 0; k < 2000; ++k) {
    ObjectNode a = node_at(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-kPiD, kPiD));
    ObjectNode b = node_at(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-kPiD, kPiD));
    if (classify_relation(a, b, th) == Relation::kAheadOf) {
      // b ahead along a's heading; a projects behind in a frame sharing a's heading.
      ObjectNode b_aligned = b;
      b_aligned.yaw = a.yaw;
      EXPECT_LT(local_projection(b_aligned, a).s, 0.0);
    }
  }
}

Mat4d pose(double x, double y, double yaw) {
  return make_transform<double>(yaw_rotation(yaw), Vec3d(x, y, 0));
}

TEST(EstimateVelocity, StaticPointUnderEgoTranslation) {
  Frame a = empty_frame(0, 0.0, pose(0, 0, 0));
  Frame b = empty_frame(1, 0.5, pose(2, 0, 0));
  a.objects.push_back(box("p", Category::kCar, Vec3d(10, 1, 0), 0));
  b.objects.push_back(box("p", Category::kCar, Vec3d(8, 1, 0), 0));
  const Scene s = scene_of({a, b});
  EXPECT_LT(estimate_velocity(s, 1, "p").norm(), 1e-9);
}

TEST(EstimateVelocity, FiniteDifferenceAndErrors) {
  Frame a = empty_frame(0, 0.0);
  Frame b = empty_frame(1, 0.5);
  a.objects.push_back(box("p", Category::kCar, Vec3d(10, 1, 0), 0));
  b.objects.push_back(box("p", Category::kCar, Vec3d(11, 1, 0), 0));
  Scene s = scene_of({a, b});
  EXPECT_LT((estimate_velocity(s, 1, "p") - Vec3d(2, 0, 0)).norm(), 1e-12);
  EXPECT_THROW(estimate_velocity(s, 1, "q"), MissingTrack);
  EXPECT_THROW(estimate_velocity(s, 0, "p"), MissingTrack);
  s.frames[1].timestamp = 0.0;
  EXPECT_THROW(estimate_velocity(s, 1, "p"), ZeroDt);
}

TEST(EstimateVelocity, InvariantUnderJointRigidMotion) {
  Rng rng(6);
  for (int k = 0; k < 200; ++k) {
    Frame a = empty_frame(0, 0.0, pose(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3, 3)));
    Frame b = empty_frame(1, 0.5, pose(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3, 3)));
    // World positions then expressed per frame.
    const Vec3d wa(rng.uniform(-30, 30), rng.uniform(-30, 30), 0);
    const Vec3d wb = wa + Vec3d(rng.uniform(-3, 3), rng.uniform(-3, 3), 0);
    a.objects.push_back(box("p", Category::kCar, transform_point(rigid_inverse(a.ego_pose), wa), 0));
    b.objects.push_back(box("p", Category::kCar, transform_point(rigid_inverse(b.ego_pose), wb), 0));
    const double speed = estimate_velocity(scene_of({a, b}), 1, "p").norm();
    EXPECT_NEAR(speed, (wb - wa).norm() / 0.5, 1e-9);
    // Apply one world rigid motion to both poses: ego-frame coordinates are unchanged.
    const Mat4d w = pose(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-3, 3));
    Frame a2 = a, b2 = b;
    a2.ego_pose = w * a.ego_pose;
    b2.ego_pose = w * b.ego_pose;
    EXPECT_NEAR(estimate_velocity(scene_of({a2, b2}), 1, "p").norm(), speed, 1e-9);
  }
}

TEST(Actions, StaticCategoryIsStopped) {
  ActionInput in;
  in.category = Category::kTrafficCone;
  in.velocity = Vec3d(3, 0, 0);
  ActionSet s = actions_from_input(in, {});
  EXPECT_TRUE(s.contains(Action::kStopped));
  EXPECT_EQ(s.labels().size(), 1u);
}

ActionInput moving(double yaw, double prev_yaw) {
  ActionInput in;
  in.category = Category::kCar;
  in.velocity = 5.0 * forward_axis(yaw);
  in.yaw = yaw;
  in.has_previous = true;
  in.previous_yaw = prev_yaw;
  in.previous_center = -2.5 * forward_axis(yaw);
  return in;
}

TEST(Actions, TurnThresholds) {
  const double twenty = 20.0 * kPiD / 180.0;
  ActionSet s = actions_from_input(moving(twenty, 0.0), {});
  EXPECT_TRUE(s.contains(Action::kTurnLeft));
  EXPECT_TRUE(s.contains(Action::kMovingForward));
  EXPECT_TRUE(actions_from_input(moving(-twenty, 0.0), {}).contains(Action::kTurnRight));
  ActionSet small = actions_from_input(moving(0.1, 0.0), {});
  EXPECT_FALSE(small.contains(Action::kTurnLeft) || small.contains(Action::kTurnRight));
  ActionSet u = actions_from_input(moving(2.0, 0.0), {});
  EXPECT_TRUE(u.contains(Action::kUTurn));
  EXPECT_FALSE(u.contains(Action::kTurnLeft));
}

TEST(Actions, FirstFrameOnlyStoppedLabels) {
  ActionInput in;
  in.category = Category::kCar;
  in.velocity = Vec3d(5, 0, 0);
  EXPECT_TRUE(actions_from_input(in, {}).empty());
  in.velocity = Vec3d(0.1, 0, 0);
  EXPECT_EQ(actions_from_input(in, {}).labels(), std::vector<Action>{Action::kStopped});
}

TEST(Actions, BackwardMotion) {
  ActionInput in = moving(0.0, 0.0);
  in.velocity = Vec3d(-3, 0.2, 0);
  in.previous_center = Vec3d(1.5, 0, 0);
  EXPECT_TRUE(actions_from_input(in, {}).contains(Action::kMovingBackward));
}

TEST(Actions, ConstantAccelerationTrack) {
  // Native speeds 0,1,2,3 over four frames.
  std::vector<Frame> frames;
  for (int k = 0; k < 4; ++k) {
    Frame f = empty_frame(k, 0.5 * k);
    const double xs[] = {10.0, 10.5, 11.5, 13.0};
    ObjectAnnotation o = box("a", Category::kCar, Vec3d(xs[k], 0, 0), 0);
    o.velocity = Vec3d(k, 0, 0);
    f.objects.push_back(o);
    frames.push_back(f);
  }
  // Finite differences of the positions reproduce the native speeds.
  const SceneGraph g = build_graph(scene_of(frames));
  EXPECT_FALSE(g.actions[2][0].contains(Action::kAccelerate));
  EXPECT_TRUE(g.actions[3][0].contains(Action::kAccelerate));
  EXPECT_FALSE(g.actions[3][0].contains(Action::kDecelerate));
}

TEST(Actions, AccelerationNeedsThreeIntervals) {
  ActionInput in = moving(0, 0);
  in.speed_history = {3, 2, 1};
  EXPECT_FALSE(actions_from_input(in, {}).contains(Action::kAccelerate));
  in.speed_history = {3, 2, 1, 0};
  EXPECT_TRUE(actions_from_input(in, {}).contains(Action::kAccelerate));
  in.speed_history = {0, 1, 2, 3};
  EXPECT_TRUE(actions_from_input(in, {}).contains(Action::kDecelerate));
  in.speed_history = {3, 2, 1.8, 0};
  EXPECT_FALSE(actions_from_input(in, {}).contains(Action::kAccelerate));
}

TEST(Actions, LaneChangeSign) {
  ActionInput in = moving(0, 0);
  in.center = Vec3d(0, 0, 0);
  in.previous_center = Vec3d(-2.5, 1.5, 0);  // moved 1.5 m to the right
  EXPECT_TRUE(actions_from_input(in, {}).contains(Action::kLaneChangeRight));
  in.previous_center = Vec3d(-2.5, -1.5, 0);
  EXPECT_TRUE(actions_from_input(in, {}).contains(Action::kLaneChangeLeft));
}

TEST(Actions, CircularArcIsNotALaneChange) {
  // Chord of length L at heading change dtheta leaves |residual| <= L*|dtheta|/2.
  Rng rng(8);
  for (int k = 0; k < 2000; ++k) {
    const double radius = rng.uniform(4.0, 60.0);
    const double dtheta = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.0, 0.6);
    const double yaw0 = rng.uniform(-kPiD, kPiD);
    const double sign = dtheta >= 0 ? 1.0 : -1.0;
    // Centre of the turning circle lies to the left for positive dtheta.
    const Vec3d centre = sign * radius * Vec3d(-std::sin(yaw0), std::cos(yaw0), 0);
    const Vec3d p0 = Vec3d::Zero();
    const Vec3d p1 = centre + yaw_rotation(dtheta) * (p0 - centre);
    ActionInput in;
    in.category = Category::kCar;
    in.has_previous = true;
    in.previous_center = p0;
    in.previous_yaw = yaw0;
    in.center = p1;
    in.yaw = normalize_angle(yaw0 + dtheta);
    in.velocity = 3.0 * forward_axis(in.yaw);
    const double chord = (p1 - p0).norm();
    const double residual = compensated_lateral(in);
    ASSERT_LE(std::abs(residual), chord * std::abs(dtheta) / 2 + 1e-9);
    if (chord * std::abs(dtheta) / 2 < 1.0) {
      ActionSet s = actions_from_input(in, {});
      ASSERT_FALSE(s.contains(Action::kLaneChangeLeft) || s.contains(Action::kLaneChangeRight));
    }
  }
}

TEST(ClassifyInteraction, HandExamples) {
  ThresholdSet th;
  EXPECT_EQ(classify_interaction(mover(5, 0, 0, 5), mover(0, 0, 0, 5), acts(false), acts(false),
                                 std::nullopt, th),
            Interaction::kLead);
  EXPECT_EQ(classify_interaction(mover(0, 0, 0, 5), mover(5, 0, 0, 5), acts(false), acts(false),
                                 std::nullopt, th),
            Interaction::kFollow);
  EXPECT_EQ(classify_interaction(mover(12, 3.5, kPiD, 5), mover(0, 0, 0, 5), acts(false),
                                 acts(false), 14.0, th),
            Interaction::kApproaching);
  EXPECT_EQ(classify_interaction(mover(5, 3.5, 0, 9), mover(0, 0, 0, 5), acts(false, true),
                                 acts(false), std::nullopt, th),
            Interaction::kOvertake);
  EXPECT_EQ(classify_interaction(mover(5, 3.5, 0, 9), mover(0, 0, 0, 5), acts(false),
                                 acts(false), std::nullopt, th),
            Interaction::kPassing);
  EXPECT_EQ(classify_interaction(mover(0.5, 3.5, 0, 5.2), mover(0, 0, 0, 5), acts(false),
                                 acts(false), std::nullopt, th),
            Interaction::kCoMoving);
  EXPECT_EQ(classify_interaction(mover(3, 4, kPiD / 2, 3), mover(0, 0, 0, 5), acts(false),
                                 acts(false), std::nullopt, th),
            Interaction::kCrossing);
  EXPECT_EQ(classify_interaction(mover(40, 0, 0, 5), mover(0, 0, 0, 5), acts(false), acts(false),
                                 std::nullopt, th),
            std::nullopt);
}

TEST(ClassifyInteraction, MatchesRuleTable) {
  Rng rng(9);
  ThresholdSet th;
  std::map<int, int> seen;
  for (int k = 0; k < 5000; ++k) {
    const double yd = rng.uniform(-kPiD, kPiD);
    const double offsets[] = {0.0, kPiD, kPiD / 2, -kPiD / 2, rng.uniform(-kPiD, kPiD)};
    const double ys = normalize_angle(yd + offsets[rng.index(5)] + rng.uniform(-0.2, 0.2));
    const double range = rng.bernoulli(0.7) ? 12.0 : 35.0;
    ObjectNode dst = mover(rng.uniform(-5, 5), rng.uniform(-5, 5), yd,
                           rng.bernoulli(0.2) ? 0.0 : rng.uniform(0, 12));
    ObjectNode src = mover(dst.center.x() + rng.uniform(-range, range),
                           dst.center.y() + rng.uniform(-range / 3, range / 3), ys,
                           rng.bernoulli(0.2) ? 0.0 : rng.uniform(0, 12));
    const ActionSet sa = acts(src.velocity.norm() < 0.5, rng.bernoulli(0.3));
    const ActionSet da = acts(dst.velocity.norm() < 0.5);
    std::optional<double> prev;
    if (rng.bernoulli(0.7)) prev = (src.center - dst.center).norm() + rng.uniform(-2, 2);
    const auto got = classify_interaction(src, dst, sa, da, prev, th);
    ASSERT_EQ(got, table_oracle(src, dst, sa, da, prev, th)) << k;
    seen[got ? static_cast<int>(*got) : -1]++;
  }
  // Every label except Yielding (added by the graph builder) is exercised.
  EXPECT_EQ(seen.size(), 8u);
}

TEST(LinkTemporal, CountsAndPairingOracle) {
  std::vector<Frame> frames;
  for (int k = 0; k < 4; ++k) {
    Frame f = empty_frame(k, 0.5 * k);
    f.objects.push_back(box("a", Category::kCar, Vec3d(10, 0, 0), 0));
    frames.push_back(f);
  }
  EXPECT_EQ(link_temporal(scene_of(frames)).size(), 3u);

  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Frame> fs;
    std::map<std::string, std::vector<int>> present;
    for (int k = 0; k < 10; ++k) {
      Frame f = empty_frame(k, 0.5 * k);
      for (int j = 0; j < 6; ++j) {
        if (rng.bernoulli(0.6)) {
          const std::string id = "t" + std::to_string(j);
          f.objects.push_back(box(id, Category::kCar, Vec3d(5 + 3 * j, 0, 0), 0));
          present[id].push_back(k);
        }
      }
      fs.push_back(f);
    }
    std::size_t expected = 0;
    for (const auto& [id, ks] : present) {
      int segments = 0;
      for (std::size_t q = 0; q < ks.size(); ++q) segments += (q == 0 || ks[q] != ks[q - 1] + 1);
      expected += ks.size() - segments;
    }
    const Scene s = scene_of(fs);
    const auto edges = link_temporal(s);
    ASSERT_EQ(edges.size(), expected);
    for (const Edge& e : edges) {
      EXPECT_EQ(e.dst.t, e.src.t + 1);
      EXPECT_EQ(s.frames[e.src.t].objects[e.src.i].track_id, s.frames[e.dst.t].objects[e.dst.i].track_id);
    }
  }
}

TEST(LinkTemporal, NoTracksDisablesTemporal) {
  std::vector<Frame> frames;
  for (int k = 0; k < 3; ++k) {
    Frame f = empty_frame(k, 0.5 * k);
    f.objects.push_back(box("", Category::kCar, Vec3d(10, 0, 0), 0));
    frames.push_back(f);
  }
  const Scene s = scene_of(frames, Source::kOnce);
  EXPECT_TRUE(link_temporal(s).empty());
  const SceneGraph g = build_graph(s);
  EXPECT_TRUE(g.temporal_disabled);
  for (const Edge& e : g.edges) EXPECT_NE(e.kind, EdgeKind::kTemporal);
}

TEST(BuildGraph, EmptyScene) {
  const SceneGraph g = build_graph(scene_of({empty_frame(0, 0.0)}));
  EXPECT_EQ(g.num_nodes(), 0u);
  EXPECT_TRUE(g.edges.empty());
}

TEST(BuildGraph, RequiresCalibration) {
  Scene s = scene_of({empty_frame(0, 0.0)});
  s.calibrated = false;
  EXPECT_THROW(build_graph(s), InvariantError);
}

TEST(BuildGraph, TwoObjectSceneExactEdges) {
  // Car A leads car B in the ego lane; both drive at 4 m/s while ego is parked.
  Frame f0 = empty_frame(0, 0.0);
  Frame f1 = empty_frame(1, 0.5);
  f0.objects.push_back(box("A", Category::kCar, Vec3d(20, 0, 0), 0));
  f0.objects.push_back(box("B", Category::kCar, Vec3d(10, 0, 0), 0));
  f1.objects.push_back(box("A", Category::kCar, Vec3d(22, 0, 0), 0));
  f1.objects.push_back(box("B", Category::kCar, Vec3d(12, 0, 0), 0));
  const SceneGraph g = build_graph(scene_of({f0, f1}));
  std::vector<Edge> expected;
  for (int t = 0; t < 2; ++t) {
    const auto R = [](Relation r) { return static_cast<int>(r); };
    expected.push_back({EdgeKind::kRelation, {t, -1}, {t, 0}, R(Relation::kAheadOf)});
    expected.push_back({EdgeKind::kRelation, {t, -1}, {t, 1}, R(Relation::kAheadOf)});
    expected.push_back({EdgeKind::kRelation, {t, 0}, {t, -1}, R(Relation::kBehind)});
    expected.push_back({EdgeKind::kRelation, {t, 0}, {t, 1}, R(Relation::kBehind)});
    expected.push_back({EdgeKind::kRelation, {t, 1}, {t, -1}, R(Relation::kBehind)});
    expected.push_back({EdgeKind::kRelation, {t, 1}, {t, 0}, R(Relation::kAheadOf)});
  }
  // Frame 0 has no velocity: both stopped. Frame 1 moves forward at 4 m/s.
  const auto A = [](Action a) { return static_cast<int>(a); };
  expected.push_back({EdgeKind::kAction, {0, 0}, {0, 0}, A(Action::kStopped)});
  expected.push_back({EdgeKind::kAction, {0, 1}, {0, 1}, A(Action::kStopped)});
  expected.push_back({EdgeKind::kAction, {1, 0}, {1, 0}, A(Action::kMovingForward)});
  expected.push_back({EdgeKind::kAction, {1, 1}, {1, 1}, A(Action::kMovingForward)});
  expected.push_back({EdgeKind::kInteraction, {1, 0}, {1, 1}, static_cast<int>(Interaction::kLead)});
  expected.push_back({EdgeKind::kInteraction, {1, 1}, {1, 0}, static_cast<int>(Interaction::kFollow)});
  expected.push_back({EdgeKind::kTemporal, {0, 0}, {1, 0}, 0});
  expected.push_back({EdgeKind::kTemporal, {0, 1}, {1, 1}, 0});
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(g.edges, expected);
}

TEST(BuildGraph, OvertakeHasReciprocalYielding) {
  Frame f0 = empty_frame(0, 0.0);
  Frame f1 = empty_frame(1, 0.5);
  f0.objects.push_back(box("fast", Category::kCar, Vec3d(14, 0, 0), 0));
  f0.objects.push_back(box("slow", Category::kCar, Vec3d(10, 0, 0), 0));
  // fast moves 5 m forward and 2.5 m left; slow moves 1 m.
  f1.objects.push_back(box("fast", Category::kCar, Vec3d(19, 2.5, 0), 0));
  f1.objects.push_back(box("slow", Category::kCar, Vec3d(11, 0, 0), 0));
  const SceneGraph g = build_graph(scene_of({f0, f1}));
  EXPECT_TRUE(g.actions[1][0].contains(Action::kLaneChangeLeft));
  bool overtake = false, yield = false;
  for (const Edge& e : g.interactions[1]) {
    overtake |= e.label == static_cast<int>(Interaction::kOvertake) && e.src.i == 0;
    yield |= e.label == static_cast<int>(Interaction::kYielding) && e.src.i == 1 && e.dst.i == 0;
  }
  EXPECT_TRUE(overtake);
  EXPECT_TRUE(yield);
}

TEST(BuildGraph, DeterministicAndRoundTrips) {
  for (const auto& fx : make_fixture_pool(3)) {
    if (fx.scene.metadata.source != Source::kAv2) continue;
    const Scene s = calibrate_scene(fx.scene);
    const SceneGraph a = build_graph(s);
    const SceneGraph b = build_graph(s);
    const std::string text = serialize_graph(a);
    EXPECT_EQ(text, serialize_graph(b));
    const SceneGraph back = graph_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(serialize_graph(back), text);
    EXPECT_EQ(back.actions, a.actions);
  }
}

TEST(BuildGraph, EdgeDisciplineOnFixturePool) {
  std::size_t overtakes = 0;
  for (const auto& fx : make_fixture_pool(5)) {
    const SceneGraph g = build_graph(calibrate_scene(fx.scene));
    for (const Edge& e : g.edges) {
      switch (e.kind) {
        case EdgeKind::kAction:
          ASSERT_EQ(e.src, e.dst);
          break;
        case EdgeKind::kRelation:
        case EdgeKind::kInteraction:
          ASSERT_NE(e.src, e.dst);
          ASSERT_EQ(e.src.t, e.dst.t);
          break;
        case EdgeKind::kTemporal:
          ASSERT_EQ(e.dst.t, e.src.t + 1);
          break;
      }
      // Endpoints exist.
      g.node(e.src);
      g.node(e.dst);
      if (e.kind == EdgeKind::kInteraction && e.label == static_cast<int>(Interaction::kOvertake)) {
        ++overtakes;
        bool found = false;
        for (const Edge& y : g.interactions[e.src.t]) {
          found |= y.src == e.dst && y.dst == e.src && y.label == static_cast<int>(Interaction::kYielding);
        }
        ASSERT_TRUE(found);
      }
    }
  }
  (void)overtakes;
}

}  // namespace
}  // namespace drivescene
