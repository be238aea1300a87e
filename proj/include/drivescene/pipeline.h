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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drivescene/graph.h"
#include "drivescene/metadata.h"
#include "drivescene/qa.h"
#include "drivescene/render.h"
#include "drivescene/schema.h"

namespace drivescene {

// Calibrates (unless already calibrated), completes metadata and builds the graph.
SceneBundle prepare_scene(const Scene& raw, const MetadataClients& clients, const ThresholdSet& th = {});

// The synthetic fixture pool, prepared with its stub metadata tables.
std::vector<SceneBundle> fixture_bundles(std::uint64_t seed, const ThresholdSet& th = {});

// BEV and front camera at frame 0, shown when reviewing scene metadata.
std::vector<AssetSpec> metadata_review_assets(const Scene& scene);

// Renders each spec under `root` at its paths(); files already present are
// kept. Returns the number of images written.
int write_assets(const Scene& scene, const std::vector<AssetSpec>& specs, const TileOptions& opts,
                 const std::filesystem::path& root);

// Runs fn(0..n-1) on up to `jobs` threads. The first exception is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// Settings shared by the stages. Every key is optional; unknown keys throw
// SchemaError.
struct PipelineConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  ThresholdSet thresholds;
  Quotas quotas = default_quotas();
  GeneratorConfig generator;
  int tile_width = 240;

  static PipelineConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Stage files: one canonical scene per <scene_id>.json, one graph export per
// <scene_id>.json in a separate directory, corpus as JSONL.
std::vector<std::filesystem::path> json_files(const std::filesystem::path& dir);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
Scene read_scene_file(const std::filesystem::path& path);
std::vector<Scene> read_scene_dir(const std::filesystem::path& dir, int jobs = 1);
void write_scene_dir(const std::filesystem::path& dir, const std::vector<Scene>& scenes);
std::vector<SceneBundle> read_bundles(const std::filesystem::path& scene_dir, const std::filesystem::path& graph_dir,
                                      int jobs = 1);

// Writes the fixture pool and its stub classifier tables (stubs.json).
void synth_stage(const std::filesystem::path& out, std::uint64_t seed);
// Validates every document; throws ValidationFailed listing all problems.
int ingest_stage(const std::filesystem::path& in, const std::filesystem::path& out, int jobs = 1);
// nullopt alpha picks each scene's source offset.
int calibrate_stage(const std::filesystem::path& in, const std::filesystem::path& out, std::optional<double> alpha,
                    int jobs = 1);
struct MetadataStageResult {
  int scenes = 0;
  std::map<std::string, std::map<std::string, std::string>> errors;  // scene -> attribute -> message
};
MetadataStageResult complete_metadata_stage(const std::filesystem::path& in, const std::filesystem::path& out,
                                            const MetadataClients& clients, int jobs = 1);
int build_graph_stage(const std::filesystem::path& in, const std::filesystem::path& out, const ThresholdSet& th,
                      int jobs = 1);
// Writes corpus.jsonl-style output and a JSON generation report.
Corpus generate_qa_stage(const std::filesystem::path& scenes, const std::filesystem::path& graphs,
                         const std::filesystem::path& corpus_out, const std::filesystem::path& report_out,
                         const PipelineConfig& cfg);
// Renders every asset the corpus references, plus metadata review assets.
int render_stage(const std::filesystem::path& scenes, const std::filesystem::path& corpus,
                 const std::filesystem::path& out, const TileOptions& opts, int jobs = 1);

// synth -> ingest -> calibrate -> complete-metadata -> build-graph -> generate-qa
// under `work`; returns the generated corpus.
Corpus run_fixture_pipeline(const std::filesystem::path& work, const PipelineConfig& cfg);

}  // namespace drivescene
