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
#include <string>
#include <vector>

#include "drivescene/schema.h"

namespace drivescene {

struct SyntheticOptions {
  int num_frames = 16;
  double dt = 0.5;
  int num_tracks = 18;
  SceneType road = SceneType::kStraightRoad;
  bool track_ids = true;
  bool native_velocity = false;
  bool lanes = true;
};

// Ring of cameras in canonical clockwise order, reference convention.
std::vector<CameraCalibration> make_camera_rig(Source source);

// Fills `frame.objects[*].projections` from box geometry and the rig.
// `occlusion` scales the geometric visibility of each object (same length as objects).
void annotate_projections(Frame& frame, const std::vector<double>& occlusion);

// Randomized scene in the reference convention (calibrated = true).
Scene make_reference_scene(Source source, const std::string& scene_id, std::uint64_t seed,
                           const SyntheticOptions& options);

// The same scene expressed in the source's own convention (calibrated = false).
Scene to_source_convention(const Scene& reference);

struct FixtureScene {
  Scene scene;         // source convention, uncalibrated
  SceneType road;      // layout the scene was drawn with
};

// The shipped fixture pool: five scenes per source.
std::vector<FixtureScene> make_fixture_pool(std::uint64_t seed);

}  // namespace drivescene
