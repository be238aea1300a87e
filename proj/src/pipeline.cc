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

#include "drivescene/pipeline.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <set>
#include <thread>

#include "drivescene/errors.h"
#include "drivescene/synthetic.h"

namespace drivescene {

SceneBundle prepare_scene(const Scene& raw, const MetadataClients& clients, const ThresholdSet& th) {
  const Scene calibrated = raw.calibrated ? raw : calibrate_scene(raw);
  SceneBundle b;
  b.scene = complete_metadata(calibrated, clients).scene;
  b.graph = build_graph(b.scene, th);
  return b;
}

std::vector<SceneBundle> fixture_bundles(std::uint64_t seed, const ThresholdSet& th) {
  const auto pool = make_fixture_pool(seed);
  StubTables tables = fixture_stub_tables(pool);
  const MetadataClients clients{&tables.similarity, &tables.map_label};
  std::vector<SceneBundle> out;
  for (const auto& fx : pool) out.push_back(prepare_scene(fx.scene, clients, th));
  return out;
}

std::vector<AssetSpec> metadata_review_assets(const Scene& scene) {
  AssetSpec bev;
  bev.kind = "bev";
  bev.scene_id = scene.scene_id;
  AssetSpec front;
  front.kind = "camera";
  front.scene_id = scene.scene_id;
  front.camera = front_camera(scene.metadata.source);
  return {bev, front};
}

int write_assets(const Scene& scene, const std::vector<AssetSpec>& specs, const TileOptions& opts,
                 const std::filesystem::path& root) {
  int written = 0;
  for (const auto& spec : specs) {
    const auto paths = spec.paths();
    const bool all_present = std::all_of(paths.begin(), paths.end(),
                                         [&](const std::string& p) { return std::filesystem::exists(root / p); });
    if (all_present) continue;
    const auto images = render_asset(scene, spec, opts);
    if (images.size() != paths.size()) {
      throw InvariantError("assets", spec.kind + " rendered " + std::to_string(images.size()) + " images for " +
                                         std::to_string(paths.size()) + " paths");
    }
    for (std::size_t k = 0; k < paths.size(); ++k) {
      if (std::filesystem::exists(root / paths[k])) continue;
      write_png(root / paths[k], images[k]);
      ++written;
    }
  }
  return written;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  const int threads_wanted = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::thread> threads;
  for (int k = 1; k < threads_wanted; ++k) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("config", "expected an object");
  PipelineConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "seed") {
      if (!v.is_number_unsigned()) throw SchemaError("seed", "expected a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (k == "jobs") {
      if (!v.is_number_integer() || v.get<int>() < 1) throw SchemaError("jobs", "expected a positive integer");
      c.jobs = v.get<int>();
    } else if (k == "thresholds") {
      c.thresholds = ThresholdSet::from_json(v);
    } else if (k == "quotas") {
      c.quotas = quotas_from_json(v);
    } else if (k == "generator") {
      c.generator = GeneratorConfig::from_json(v);
    } else if (k == "tile_width") {
      if (!v.is_number_integer() || v.get<int>() < 16) throw SchemaError("tile_width", "expected an integer >= 16");
      c.tile_width = v.get<int>();
    } else {
      throw SchemaError(k, "unknown key");
    }
  }
  return c;
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json q = nlohmann::json::object();
  for (const auto& [t, n] : quotas) q[to_string(t)] = n;
  return {{"seed", seed},
          {"jobs", jobs},
          {"thresholds", thresholds.to_json()},
          {"quotas", q},
          {"generator", generator.to_json()},
          {"tile_width", tile_width}};
}

std::vector<std::filesystem::path> json_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "stubs.json") {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("cannot write " + path.string());
}

Scene read_scene_file(const std::filesystem::path& path) {
  try {
    return parse_canonical(read_text(path));
  } catch (const PathError& e) {
    throw ValidationFailed(path.string() + ": " + e.what());
  }
}

std::vector<Scene> read_scene_dir(const std::filesystem::path& dir, int jobs) {
  const auto files = json_files(dir);
  std::vector<Scene> out(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t k) { out[k] = read_scene_file(files[k]); });
  return out;
}

void write_scene_dir(const std::filesystem::path& dir, const std::vector<Scene>& scenes) {
  std::filesystem::create_directories(dir);
  for (const auto& s : scenes) write_text(dir / (s.scene_id + ".json"), serialize_canonical(s));
}

std::vector<SceneBundle> read_bundles(const std::filesystem::path& scene_dir, const std::filesystem::path& graph_dir,
                                      int jobs) {
  std::vector<Scene> scenes = read_scene_dir(scene_dir, jobs);
  std::vector<SceneBundle> out(scenes.size());
  parallel_for(scenes.size(), jobs, [&](std::size_t k) {
    const auto path = graph_dir / (scenes[k].scene_id + ".json");
    if (!std::filesystem::exists(path)) throw Error("missing graph export " + path.string());
    try {
      out[k].graph = graph_from_json(nlohmann::json::parse(read_text(path)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationFailed(path.string() + ": " + e.what());
    } catch (const PathError& e) {
      throw ValidationFailed(path.string() + ": " + e.what());
    }
    out[k].scene = std::move(scenes[k]);
  });
  return out;
}

void synth_stage(const std::filesystem::path& out, std::uint64_t seed) {
  const auto pool = make_fixture_pool(seed);
  std::vector<Scene> scenes;
  for (const auto& fx : pool) scenes.push_back(fx.scene);
  write_scene_dir(out, scenes);
  write_text(out / "stubs.json", fixture_stub_tables(pool).to_json().dump(1) + "\n");
}

int ingest_stage(const std::filesystem::path& in, const std::filesystem::path& out, int jobs) {
  const auto files = json_files(in);
  std::vector<std::vector<std::string>> problems(files.size());
  std::vector<std::optional<Scene>> scenes(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t k) {
    const std::string text = read_text(files[k]);
    for (const auto& issue : validate_document(text)) {
      problems[k].push_back(files[k].string() + ": " + issue.path + ": " + issue.message);
    }
    if (problems[k].empty()) scenes[k] = parse_canonical(text);
  });
  std::string report;
  std::set<std::string> ids;
  for (std::size_t k = 0; k < files.size(); ++k) {
    for (const auto& p : problems[k]) report += p + "\n";
    if (scenes[k] && !ids.insert(scenes[k]->scene_id).second) {
      report += files[k].string() + ": scene_id: duplicate " + scenes[k]->scene_id + "\n";
    }
  }
  if (!report.empty()) throw ValidationFailed(report);
  std::vector<Scene> ok;
  for (auto& s : scenes) ok.push_back(std::move(*s));
  write_scene_dir(out, ok);
  return static_cast<int>(ok.size());
}

int calibrate_stage(const std::filesystem::path& in, const std::filesystem::path& out, std::optional<double> alpha,
                    int jobs) {
  auto scenes = read_scene_dir(in, jobs);
  parallel_for(scenes.size(), jobs, [&](std::size_t k) {
    try {
      scenes[k] = calibrate_scene(scenes[k], alpha);
    } catch (const AlreadyCalibrated& e) {
      throw ValidationFailed(scenes[k].scene_id + ".json: " + e.what());
    }
  });
  write_scene_dir(out, scenes);
  return static_cast<int>(scenes.size());
}

MetadataStageResult complete_metadata_stage(const std::filesystem::path& in, const std::filesystem::path& out,
                                            const MetadataClients& clients, int jobs) {
  auto scenes = read_scene_dir(in, jobs);
  std::vector<std::map<std::string, std::string>> errors(scenes.size());
  parallel_for(scenes.size(), jobs, [&](std::size_t k) {
    auto r = complete_metadata(scenes[k], clients, default_bev_ref(scenes[k]));
    scenes[k] = std::move(r.scene);
    errors[k] = std::move(r.errors);
  });
  write_scene_dir(out, scenes);
  MetadataStageResult res;
  res.scenes = static_cast<int>(scenes.size());
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    if (!errors[k].empty()) res.errors[scenes[k].scene_id] = errors[k];
  }
  return res;
}

int build_graph_stage(const std::filesystem::path& in, const std::filesystem::path& out, const ThresholdSet& th,
                      int jobs) {
  const auto scenes = read_scene_dir(in, jobs);
  std::filesystem::create_directories(out);
  parallel_for(scenes.size(), jobs, [&](std::size_t k) {
    write_text(out / (scenes[k].scene_id + ".json"), serialize_graph(build_graph(scenes[k], th)));
  });
  return static_cast<int>(scenes.size());
}

Corpus generate_qa_stage(const std::filesystem::path& scenes, const std::filesystem::path& graphs,
                         const std::filesystem::path& corpus_out, const std::filesystem::path& report_out,
                         const PipelineConfig& cfg) {
  const auto bundles = read_bundles(scenes, graphs, cfg.jobs);
  GeneratorConfig gen = cfg.generator;
  gen.seed = cfg.seed;
  Corpus c = generate_all(bundles, cfg.quotas, gen, cfg.jobs);
  write_text(corpus_out, serialize_corpus(c.items));
  write_text(report_out, c.report.to_json().dump(1) + "\n");
  return c;
}

int render_stage(const std::filesystem::path& scenes, const std::filesystem::path& corpus,
                 const std::filesystem::path& out, const TileOptions& opts, int jobs) {
  const auto all = read_scene_dir(scenes, jobs);
  std::map<std::string, std::vector<AssetSpec>> specs;
  for (const auto& s : all) specs[s.scene_id] = metadata_review_assets(s);
  if (!corpus.empty()) {
    for (const auto& it : parse_corpus(read_text(corpus))) {
      auto& v = specs[it.scene_id];
      for (const auto& a : it.assets) {
        if (std::find(v.begin(), v.end(), a) == v.end()) v.push_back(a);
      }
    }
  }
  std::vector<int> written(all.size(), 0);
  parallel_for(all.size(), jobs, [&](std::size_t k) {
    written[k] = write_assets(all[k], specs[all[k].scene_id], opts, out);
  });
  int total = 0;
  for (int w : written) total += w;
  return total;
}

Corpus run_fixture_pipeline(const std::filesystem::path& work, const PipelineConfig& cfg) {
  synth_stage(work / "raw", cfg.seed);
  ingest_stage(work / "raw", work / "ingested", cfg.jobs);
  calibrate_stage(work / "ingested", work / "calibrated", std::nullopt, cfg.jobs);
  StubTables stubs = StubTables::from_json(nlohmann::json::parse(read_text(work / "raw" / "stubs.json")));
  const MetadataClients clients{&stubs.similarity, &stubs.map_label};
  complete_metadata_stage(work / "calibrated", work / "scenes", clients, cfg.jobs);
  build_graph_stage(work / "scenes", work / "graphs", cfg.thresholds, cfg.jobs);
  return generate_qa_stage(work / "scenes", work / "graphs", work / "corpus.jsonl", work / "report.json", cfg);
}

}  // namespace drivescene
