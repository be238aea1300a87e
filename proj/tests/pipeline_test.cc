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


#include <gtest/gtest.h>
#include <sys/wait.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "drivescene/errors.h"
#include "drivescene/pipeline.h"
#include "drivescene/scoring.h"
#include "drivescene/verification.h"

namespace drivescene {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> n{0};
    path_ = fs::temp_directory_path() / ("pipeline_test_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& p) const { return (path_ / p).string(); }

 private:
  fs::path path_;
};

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult cli(const std::string& args) {
  static std::atomic<int> n{0};
  const fs::path log = fs::temp_directory_path() / ("cli_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
  const std::string cmd = std::string(DRIVESCENE_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = read_text(log);
  fs::remove(log);
  return r;
}

std::string small_quotas(const TempDir& dir, int n) {
  nlohmann::json q = nlohmann::json::object();
  for (Task t : enum_values<Task>()) q[to_string(t)] = n;
  write_text(dir / "quotas.json", q.dump());
  return dir / "quotas.json";
}

// Every file under `a` exists under `b` with the same bytes, and vice versa.
void expect_same_tree(const fs::path& a, const fs::path& b) {
  std::set<std::string> seen;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    seen.insert(rel.string());
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(read_text(e.path()), read_text(b / rel)) << rel;
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) EXPECT_TRUE(seen.count(fs::relative(e.path(), b).string())) << e.path();
  }
}

TEST(Cli, FullRunIsDeterministicAndCoversAllTasks) {
  TempDir dir;
  const CliResult a = cli("run --work " + (dir / "a") + " --seed 7");
  ASSERT_EQ(a.code, 0) << a.output;
  const CliResult b = cli("run --work " + (dir / "b") + " --seed 7 --jobs 3");
  ASSERT_EQ(b.code, 0) << b.output;
  expect_same_tree(dir.path() / "a", dir.path() / "b");
  const auto items = parse_corpus(read_text(dir.path() / "a" / "corpus.jsonl"));
  std::set<Task> tasks;
  for (const auto& it : items) tasks.insert(it.task);
  EXPECT_EQ(tasks.size(), enum_values<Task>().size());
  const CliResult c = cli("run --work " + (dir / "c") + " --seed 8");
  ASSERT_EQ(c.code, 0);
  EXPECT_NE(read_text(dir.path() / "a" / "corpus.jsonl"), read_text(dir.path() / "c" / "corpus.jsonl"));
}

TEST(Cli, StageByStage) {
  TempDir dir;
  const std::string quotas = small_quotas(dir, 3);
  ASSERT_EQ(cli("synth --out " + (dir / "raw") + " --seed 7").code, 0);
  ASSERT_EQ(cli("ingest --in " + (dir / "raw") + " --out " + (dir / "ingested")).code, 0);
  ASSERT_EQ(cli("calibrate --alpha auto --in " + (dir / "ingested") + " --out " + (dir / "cal")).code, 0);

  // auto picks each scene's source offset.
  const auto raw = read_scene_dir(dir.path() / "ingested");
  const auto cal = read_scene_dir(dir.path() / "cal");
  ASSERT_EQ(raw.size(), cal.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    EXPECT_TRUE(cal[k].calibrated);
    EXPECT_EQ(serialize_canonical(cal[k]), serialize_canonical(calibrate_scene(raw[k], source_alpha(raw[k].metadata.source))));
  }

  const CliResult meta = cli("complete-metadata --in " + (dir / "cal") + " --out " + (dir / "scenes") + " --stubs " +
                       (dir / "raw/stubs.json"));
  ASSERT_EQ(meta.code, 0) << meta.output;
  for (const auto& s : read_scene_dir(dir.path() / "scenes")) {
    EXPECT_TRUE(s.metadata.weather && s.metadata.time_of_day && s.metadata.scene_type) << s.scene_id;
  }
  ASSERT_EQ(cli("build-graph --in " + (dir / "scenes") + " --out " + (dir / "graphs")).code, 0);
  const CliResult gen = cli("generate-qa --scenes " + (dir / "scenes") + " --graphs " + (dir / "graphs") + " --out " +
                      (dir / "corpus.jsonl") + " --report " + (dir / "report.json") + " --quotas " + quotas +
                      " --seed 3");
  ASSERT_EQ(gen.code, 0) << gen.output;
  const auto items = parse_corpus(read_text(dir.path() / "corpus.jsonl"));
  EXPECT_EQ(items.size(), 3 * enum_values<Task>().size());

  // Each stage is idempotent on identical inputs.
  ASSERT_EQ(cli("build-graph --in " + (dir / "scenes") + " --out " + (dir / "graphs2")).code, 0);
  expect_same_tree(dir.path() / "graphs", dir.path() / "graphs2");
  ASSERT_EQ(cli("complete-metadata --in " + (dir / "scenes") + " --out " + (dir / "scenes2") + " --stubs " +
                (dir / "raw/stubs.json"))
                .code,
            0);
  expect_same_tree(dir.path() / "scenes", dir.path() / "scenes2");

  const CliResult render = cli("render --scenes " + (dir / "scenes") + " --corpus " + (dir / "corpus.jsonl") + " --out " +
                         (dir / "assets") + " --tile-width 64");
  ASSERT_EQ(render.code, 0) << render.output;
  for (const auto& it : items) {
    for (const auto& p : it.asset_paths()) EXPECT_TRUE(fs::exists(dir.path() / "assets" / p)) << p;
  }

  // Self-answering oracle scores perfectly.
  std::vector<PredictionRecord> oracle, letter_a;
  for (const auto& it : items) {
    const std::string ans = it.numeric() ? std::to_string(*it.answer_value)
                                         : std::string(1, static_cast<char>('A' + *it.answer_index));
    oracle.push_back(make_prediction(it, "oracle", "<answer>" + ans + "</answer>"));
    letter_a.push_back(make_prediction(it, "a", "<answer>A</answer>"));
  }
  write_text(dir / "oracle.jsonl", serialize_predictions(oracle));
  write_text(dir / "a.jsonl", serialize_predictions(letter_a));
  const CliResult sc = cli("score --corpus " + (dir / "corpus.jsonl") + " --predictions " + (dir / "oracle.jsonl") +
                     " --out " + (dir / "score.json"));
  ASSERT_EQ(sc.code, 0) << sc.output;
  const auto report = nlohmann::json::parse(read_text(dir.path() / "score.json"));
  for (const auto& [task, row] : report["tasks"].items()) {
    if (row["accuracy"].is_number()) EXPECT_DOUBLE_EQ(row["accuracy"].get<double>(), 100.0) << task;
    if (row["rmse"].is_number()) EXPECT_NEAR(row["rmse"].get<double>(), 0.0, 1e-6) << task;
  }
  EXPECT_NEAR(report["unders_rmse"].get<double>(), 0.0, 1e-6);

  const CliResult k = cli("kappa --corpus " + (dir / "corpus.jsonl") + " --a " + (dir / "oracle.jsonl") + " --b " +
                    (dir / "oracle.jsonl") + " --out " + (dir / "kappa.json"));
  ASSERT_EQ(k.code, 0) << k.output;
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(read_text(dir.path() / "kappa.json"))["All"]["kappa"].get<double>(), 1.0);
  EXPECT_EQ(cli("kappa --corpus " + (dir / "corpus.jsonl") + " --a " + (dir / "oracle.jsonl") + " --b " +
                (dir / "a.jsonl"))
                .code,
            0);

  // Export replays a verdict log written by the service.
  {
    ServiceData data{read_bundles(dir.path() / "scenes", dir.path() / "graphs"), items, dir.path() / "assets"};
    VerificationStore store(std::move(data), dir.path() / "verdicts.jsonl");
    for (int j = 0; j < 4; ++j) {
      VerificationRecord r;
      r.target = items[j].item_id;
      r.annotator_id = "ann";
      r.criterion_flags = CriterionFlags{};
      if (j == 3) {
        r.verdict = Verdict::kReject;
        r.criterion_flags->plausible = false;
      }
      r.submitted_at = 5;
      store.submit_verdict(r);
    }
  }
  const CliResult ex = cli("export --corpus " + (dir / "corpus.jsonl") + " --scenes " + (dir / "scenes") + " --graphs " +
                     (dir / "graphs") + " --log " + (dir / "verdicts.jsonl") + " --out " + (dir / "accepted.jsonl") +
                     " --stats " + (dir / "stats.json"));
  ASSERT_EQ(ex.code, 0) << ex.output;
  EXPECT_EQ(parse_corpus(read_text(dir.path() / "accepted.jsonl")).size(), 3u);
  const auto stats = nlohmann::json::parse(read_text(dir.path() / "stats.json"));
  EXPECT_DOUBLE_EQ(stats["pass_rate"].get<double>(), 75.0);
  EXPECT_DOUBLE_EQ(stats["annotator_seconds"].get<double>(), 20.0);
}

TEST(Cli, ValidationFailuresExitTwo) {
  TempDir dir;
  ASSERT_EQ(cli("synth --out " + (dir / "raw")).code, 0);
  const auto files = json_files(dir.path() / "raw");
  ASSERT_FALSE(files.empty());
  auto doc = nlohmann::json::parse(read_text(files[0]));
  doc["frames"][0]["objects"][0]["yaw"] = "north";
  write_text(files[0], doc.dump());
  const CliResult r = cli("ingest --in " + (dir / "raw") + " --out " + (dir / "ok"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find(files[0].filename().string()), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("frames[0].objects[0].yaw"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(dir.path() / "ok"));

  fs::remove(files[0]);
  ASSERT_EQ(cli("calibrate --in " + (dir / "raw") + " --out " + (dir / "cal")).code, 0);
  EXPECT_EQ(cli("calibrate --in " + (dir / "cal") + " --out " + (dir / "cal2")).code, 2);
  EXPECT_EQ(cli("calibrate --alpha sideways --in " + (dir / "raw") + " --out " + (dir / "cal3")).code, 2);
  EXPECT_EQ(cli("ingest --in " + (dir / "raw")).code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  write_text(dir / "bad.json", "{\"seed\": 1, \"colour\": 2}");
  EXPECT_EQ(cli("synth --out " + (dir / "x") + " --config " + (dir / "bad.json")).code, 2);
  EXPECT_EQ(cli("ingest --in " + (dir / "missing") + " --out " + (dir / "y")).code, 1);
}

TEST(Cli, ShortfallExitsThreeAndKeepsPartialCorpus) {
  TempDir dir;
  ASSERT_EQ(cli("run --work " + (dir / "w") + " --quotas " + small_quotas(dir, 1)).code, 0);
  // Only scenes without track ids: temporal tasks cannot be met.
  fs::create_directories(dir.path() / "untracked");
  for (const auto& f : json_files(dir.path() / "w/scenes")) {
    if (!has_track_ids(read_scene_file(f))) fs::copy_file(f, dir.path() / "untracked" / f.filename());
  }
  ASSERT_FALSE(json_files(dir.path() / "untracked").empty());
  nlohmann::json q = {{"event_ordering", 2}, {"scene_construction", 2}};
  write_text(dir / "q.json", q.dump());
  const CliResult r = cli("generate-qa --scenes " + (dir / "untracked") + " --graphs " + (dir / "w/graphs") + " --out " +
                    (dir / "partial.jsonl") + " --quotas " + (dir / "q.json"));
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_NE(r.output.find("event_ordering"), std::string::npos);
  const auto items = parse_corpus(read_text(dir.path() / "partial.jsonl"));
  for (const auto& it : items) EXPECT_EQ(it.task, Task::kSceneConstruction);
  const auto report = nlohmann::json::parse(read_text(dir.path() / "partial.report.json"));
  EXPECT_EQ(report["event_ordering"]["successes"], 0);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  TempDir dir;
  PipelineConfig cfg;
  cfg.seed = 3;
  cfg.quotas = {{Task::kCameraOrdering, 4}, {Task::kCountingAbsolute, 4}};
  write_text(dir / "cfg.json", cfg.to_json().dump());
  ASSERT_EQ(cli("run --work " + (dir / "a") + " --config " + (dir / "cfg.json") + " --seed 9").code, 0);
  cfg.seed = 9;
  write_text(dir / "cfg9.json", cfg.to_json().dump());
  ASSERT_EQ(cli("run --work " + (dir / "b") + " --config " + (dir / "cfg9.json")).code, 0);
  EXPECT_EQ(read_text(dir.path() / "a/corpus.jsonl"), read_text(dir.path() / "b/corpus.jsonl"));
  EXPECT_EQ(parse_corpus(read_text(dir.path() / "a/corpus.jsonl")).size(), 8u);
}

TEST(PipelineConfig, RoundTripAndUnknownKeys) {
  PipelineConfig c;
  c.seed = 42;
  c.jobs = 3;
  c.quotas = {{Task::kEgoRotation, 2}};
  const auto back = PipelineConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_THROW(PipelineConfig::from_json({{"sead", 1}}), SchemaError);
  EXPECT_THROW(PipelineConfig::from_json({{"jobs", 0}}), SchemaError);
}

TEST(Pipeline, CliPathMatchesInMemoryBundles) {
  TempDir dir;
  PipelineConfig cfg;
  cfg.seed = 7;
  cfg.quotas = {{Task::kRelativeDirection, 5}, {Task::kEventOrdering, 5}};
  const Corpus files = run_fixture_pipeline(dir.path(), cfg);
  GeneratorConfig gen;
  gen.seed = 7;
  const Corpus mem = generate_all(fixture_bundles(7), cfg.quotas, gen);
  EXPECT_EQ(serialize_corpus(files.items), serialize_corpus(mem.items));
}

TEST(Pipeline, ParallelForPropagatesErrors) {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t k) { hit[k] = 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t k) {
                 if (k == 5) throw InvariantError("k", "boom");
               }),
               InvariantError);
}

}  // namespace
}  // namespace drivescene
