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

// Command-line front end for the pipeline stages.
//
// Exit codes: 0 success, 2 validation failure, 3 candidate shortfall (the
// partial corpus is still written), 1 anything else.

#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "drivescene/errors.h"
#include "drivescene/pipeline.h"
#include "drivescene/scoring.h"
#include "drivescene/verification.h"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace drivescene;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitShortfall = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string thresholds;
  std::string quotas;

  PipelineConfig load() const {
    PipelineConfig c;
    if (!config.empty()) c = PipelineConfig::from_json(parse_file(config));
    if (seed) c.seed = *seed;
    if (jobs) {
      if (*jobs < 1) throw SchemaError("--jobs", "must be positive");
      c.jobs = *jobs;
    }
    if (!thresholds.empty()) c.thresholds = ThresholdSet::from_json(parse_file(thresholds));
    if (!quotas.empty()) c.quotas = quotas_from_json(parse_file(quotas));
    return c;
  }

  static nlohmann::json parse_file(const std::string& path) {
    try {
      return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationFailed(path + ": " + e.what());
    }
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Pipeline configuration file (JSON)");
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--jobs", c.jobs, "Parallel workers");
  cmd->add_option("--thresholds", c.thresholds, "Threshold overrides (JSON)");
  cmd->add_option("--quotas", c.quotas, "Per-task item quotas (JSON)");
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

std::vector<QAItem> load_corpus(const std::string& path) {
  try {
    return parse_corpus(read_text(path));
  } catch (const PathError& e) {
    throw ValidationFailed(path + ": " + e.what());
  }
}

std::vector<PredictionRecord> load_predictions(const std::string& path, const std::vector<QAItem>& items) {
  try {
    return parse_predictions(read_text(path), items);
  } catch (const PathError& e) {
    throw ValidationFailed(path + ": " + e.what());
  } catch (const PairingError& e) {
    throw ValidationFailed(path + ": " + e.what());
  }
}

VerificationServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-graph QA pipeline"};
  app.require_subcommand(1);
  Common common;
  std::string in, out, alpha = "auto", stubs, similarity_url, map_url, corpus, scenes, graphs, report, preds_path,
                           preds_b, log_path, service_config, assets, static_root, stats_path, work;
  double timeout = 30.0;
  int retries = 2, min_count = 10, tile_width = 0;
  std::optional<int> port, quorum;

  auto* synth = app.add_subcommand("synth", "Write the synthetic fixture pool and its stub classifier tables");
  synth->add_option("--out", out)->required();
  add_common(synth, common);

  auto* ingest = app.add_subcommand("ingest", "Validate canonical scene documents");
  ingest->add_option("--in", in)->required();
  ingest->add_option("--out", out)->required();
  add_common(ingest, common);

  auto* calibrate = app.add_subcommand("calibrate", "Rotate scenes into the reference convention");
  calibrate->add_option("--in", in)->required();
  calibrate->add_option("--out", out)->required();
  calibrate->add_option("--alpha", alpha, "Radians, or 'auto' to use each scene's source offset");
  add_common(calibrate, common);

  auto* complete = app.add_subcommand("complete-metadata", "Fill missing weather, time of day and scene type");
  complete->add_option("--in", in)->required();
  complete->add_option("--out", out)->required();
  complete->add_option("--stubs", stubs, "Stub classifier tables (JSON)");
  complete->add_option("--similarity-url", similarity_url);
  complete->add_option("--map-url", map_url);
  complete->add_option("--timeout", timeout);
  complete->add_option("--retries", retries);
  add_common(complete, common);

  auto* graph = app.add_subcommand("build-graph", "Build scene graphs");
  graph->add_option("--in", in)->required();
  graph->add_option("--out", out)->required();
  add_common(graph, common);

  auto* render = app.add_subcommand("render", "Render assets referenced by a corpus and metadata review views");
  render->add_option("--scenes", scenes)->required();
  render->add_option("--corpus", corpus);
  render->add_option("--out", out, "Asset root (default $DRIVESCENE_ASSET_ROOT or ./assets)");
  render->add_option("--tile-width", tile_width);
  add_common(render, common);

  auto* gen = app.add_subcommand("generate-qa", "Generate the QA corpus");
  gen->add_option("--scenes", scenes)->required();
  gen->add_option("--graphs", graphs)->required();
  gen->add_option("--out", out)->required();
  gen->add_option("--report", report);
  add_common(gen, common);

  auto* score_cmd = app.add_subcommand("score", "Score a prediction file");
  score_cmd->add_option("--corpus", corpus)->required();
  score_cmd->add_option("--predictions", preds_path)->required();
  score_cmd->add_option("--out", out, "Write the JSON report here");
  score_cmd->add_option("--min-count", min_count);
  add_common(score_cmd, common);

  auto* kappa_cmd = app.add_subcommand("kappa", "Cohen's kappa between two responders");
  kappa_cmd->add_option("--corpus", corpus)->required();
  kappa_cmd->add_option("--a", preds_path)->required();
  kappa_cmd->add_option("--b", preds_b)->required();
  kappa_cmd->add_option("--out", out);
  add_common(kappa_cmd, common);

  auto add_service = [&](CLI::App* cmd) {
    cmd->add_option("--corpus", corpus)->required();
    cmd->add_option("--scenes", scenes)->required();
    cmd->add_option("--graphs", graphs)->required();
    cmd->add_option("--service-config", service_config, "Service configuration (JSON)");
    cmd->add_option("--log", log_path);
    cmd->add_option("--quorum", quorum);
    cmd->add_option("--assets", assets);
    add_common(cmd, common);
  };
  auto* serve = app.add_subcommand("serve", "Run the verification service");
  add_service(serve);
  serve->add_option("--port", port);
  serve->add_option("--static", static_root);

  auto* export_cmd = app.add_subcommand("export", "Export accepted items from a verdict log");
  add_service(export_cmd);
  export_cmd->add_option("--out", out)->required();
  export_cmd->add_option("--stats", stats_path);

  auto* run = app.add_subcommand("run", "synth, ingest, calibrate, complete-metadata, build-graph, generate-qa");
  run->add_option("--work", work)->required();
  add_common(run, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    const PipelineConfig cfg = common.load();
    if (*synth) {
      synth_stage(out, cfg.seed);
      std::cout << "wrote fixture pool to " << out << "\n";
    } else if (*ingest) {
      std::cout << "ingested " << ingest_stage(in, out, cfg.jobs) << " scenes\n";
    } else if (*calibrate) {
      std::optional<double> a;
      if (alpha != "auto") {
        char* end = nullptr;
        a = std::strtod(alpha.c_str(), &end);
        if (end == alpha.c_str() || *end || !std::isfinite(*a)) throw SchemaError("--alpha", "expected radians or auto");
      }
      std::cout << "calibrated " << calibrate_stage(in, out, a, cfg.jobs) << " scenes\n";
    } else if (*complete) {
      std::unique_ptr<StubTables> tables;
      std::unique_ptr<SimilarityClient> sim;
      std::unique_ptr<MapLabelClient> map;
      MetadataClients clients;
      if (!stubs.empty()) {
        tables = std::make_unique<StubTables>(StubTables::from_json(Common::parse_file(stubs)));
        clients = {&tables->similarity, &tables->map_label};
      }
      if (!similarity_url.empty()) {
        sim = std::make_unique<RemoteSimilarityClient>(RemoteConfig{similarity_url, timeout, retries});
        clients.similarity = sim.get();
      }
      if (!map_url.empty()) {
        map = std::make_unique<RemoteMapLabelClient>(RemoteConfig{map_url, timeout, retries});
        clients.map_label = map.get();
      }
      const auto res = complete_metadata_stage(in, out, clients, cfg.jobs);
      for (const auto& [sid, errs] : res.errors) {
        for (const auto& [field, msg] : errs) std::cerr << "warning: " << sid << ": " << field << ": " << msg << "\n";
      }
      std::cout << "completed metadata for " << res.scenes << " scenes\n";
    } else if (*graph) {
      std::cout << "built " << build_graph_stage(in, out, cfg.thresholds, cfg.jobs) << " graphs\n";
    } else if (*render) {
      TileOptions opts;
      opts.tile_width = tile_width > 0 ? tile_width : cfg.tile_width;
      const std::string root = out.empty() ? env_or("DRIVESCENE_ASSET_ROOT", "assets") : out;
      std::cout << "rendered " << render_stage(scenes, corpus, root, opts, cfg.jobs) << " images into " << root
                << "\n";
    } else if (*gen) {
      const std::string rep = report.empty() ? (fs::path(out).replace_extension(".report.json")).string() : report;
      const Corpus c = generate_qa_stage(scenes, graphs, out, rep, cfg);
      std::cout << "generated " << c.items.size() << " items\n";
      if (c.report.has_shortfall()) {
        for (const auto& [t, r] : c.report.tasks) {
          if (r.successes < r.quota) {
            std::cerr << "shortfall: " << to_string(t) << " " << r.successes << "/" << r.quota << "\n";
          }
        }
        return kExitShortfall;
      }
    } else if (*score_cmd) {
      const auto items = load_corpus(corpus);
      const auto preds = load_predictions(preds_path, items);
      const auto r = score(items, preds, min_count);
      if (!out.empty()) write_text(out, r.to_json().dump(1) + "\n");
      std::cout << r.to_text();
    } else if (*kappa_cmd) {
      const auto items = load_corpus(corpus);
      const auto a = load_predictions(preds_path, items);
      const auto b = load_predictions(preds_b, items);
      nlohmann::json j = nlohmann::json::object();
      const auto overall = cohen_kappa(a, b);
      auto row = [&](const std::string& name, const KappaResult& k) {
        j[name] = {{"kappa", k.kappa}, {"band", to_string(k.band)}, {"shared", k.shared}};
        std::printf("%-8s %7.4f %-5s (%d items)\n", name.c_str(), k.kappa, kappa_band_abbrev(k.band).c_str(),
                    k.shared);
      };
      for (const auto& [ab, k] : kappa_by_ability(items, a, b)) row(to_string(ab), k);
      row("All", overall);
      if (!out.empty()) write_text(out, j.dump(1) + "\n");
    } else if (*serve || *export_cmd) {
      ServiceConfig sc;
      if (!service_config.empty()) sc = ServiceConfig::from_json(Common::parse_file(service_config));
      sc.apply_env();
      if (port) sc.port = *port;
      if (quorum) sc.quorum = *quorum;
      if (!log_path.empty()) sc.log_path = log_path;
      if (!assets.empty()) sc.asset_root = assets;
      if (!static_root.empty()) sc.static_root = static_root;
      ServiceData data{read_bundles(scenes, graphs, cfg.jobs), load_corpus(corpus), sc.asset_root};
      VerificationStore store(std::move(data), sc.log_path, sc.quorum);
      if (*export_cmd) {
        const auto ex = store.export_accepted();
        write_text(out, ex.jsonl());
        const std::string stats = ex.stats.to_json().dump(1) + "\n";
        if (!stats_path.empty()) write_text(stats_path, stats);
        std::cout << "exported " << ex.items.size() << " items\n" << stats;
      } else {
        VerificationServer server(store, sc);
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cout << "serving on " << sc.host << ":" << sc.port << std::endl;
        server.run();
        g_server = nullptr;
      }
    } else if (*run) {
      const Corpus c = run_fixture_pipeline(work, cfg);
      std::cout << "generated " << c.items.size() << " items under " << work << "\n";
      if (c.report.has_shortfall()) return kExitShortfall;
    }
  } catch (const ValidationFailed& e) {
    std::cerr << "validation failed:\n" << e.what() << "\n";
    return kExitValidation;
  } catch (const PathError& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return kExitValidation;
  } catch (const PairingError& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
