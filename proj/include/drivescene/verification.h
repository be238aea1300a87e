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

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include "drivescene/qa.h"
#include "drivescene/scoring.h"
#include "json.hpp"

namespace drivescene {

enum class Verdict { kAccept, kReject, kEdit };
enum class QueueKind { kMetadata, kQa, kHumanEval };

template <>
const std::vector<std::string>& enum_names<Verdict>();
template <>
const std::vector<std::string>& enum_names<QueueKind>();

// The four QA review criteria. All true means the item is fine.
struct CriterionFlags {
  bool answer_correct = true;
  bool option_unique = true;
  bool plausible = true;
  bool objects_visible = true;

  bool all_true() const { return answer_correct && option_unique && plausible && objects_visible; }
  std::vector<std::string> failed() const;
  nlohmann::json to_json() const;
  static CriterionFlags from_json(const nlohmann::json& j);
};

// Targets are QA item ids or "metadata:<scene_id>:<field>" with field one of
// weather, time_of_day, scene_type.
struct MetadataTarget {
  std::string scene_id;
  std::string field;
};
std::optional<MetadataTarget> parse_metadata_target(const std::string& target);
std::string metadata_target(const std::string& scene_id, const std::string& field);

struct VerificationRecord {
  std::string target;
  Verdict verdict = Verdict::kAccept;
  std::optional<CriterionFlags> criterion_flags;  // QA targets only
  std::optional<nlohmann::json> edited_value;
  std::string annotator_id;
  double started_at = 0.0;
  double submitted_at = 0.0;

  double seconds() const { return submitted_at - started_at; }
  // Reject needs a false criterion flag; edit needs edited_value.
  void validate() const;
  nlohmann::json to_json() const;
  static VerificationRecord from_json(const nlohmann::json& j);
};

struct HumanAnswer {
  std::string item_id;
  std::string annotator_id;
  std::variant<int, double> answer;  // option index or numeric value
  double started_at = 0.0;
  double submitted_at = 0.0;

  double seconds() const { return submitted_at - started_at; }
  nlohmann::json to_json() const;
  static HumanAnswer from_json(const nlohmann::json& j);
};

struct QueueFilter {
  std::optional<Task> task;
  std::optional<Ability> ability;
  std::optional<std::string> scene_id;
  // Keys task, ability, scene_id; anything else throws BadFilter.
  static QueueFilter from_params(const std::map<std::string, std::string>& params);
  bool matches(const QAItem& item) const;
};

struct QueuePage {
  std::vector<std::string> targets;
  int total = 0;
  int offset = 0;
  std::optional<int> next_offset;
  nlohmann::json to_json() const;
};

struct QcStats {
  int items = 0;
  int reviewed = 0;  // at least one verdict
  int decided = 0;   // a reject or a quorum of accept/edit verdicts
  int accepted = 0;  // decided, every verdict accept
  int edited = 0;    // decided, passed with at least one edit
  int rejected = 0;
  std::optional<double> pass_rate;             // accepted / decided
  std::optional<double> pass_rate_with_edits;  // (accepted + edited) / decided
  std::map<std::string, int> rejections_by_criterion;
  int verdicts = 0;
  int answers = 0;
  double verdict_seconds = 0.0;
  double answer_seconds = 0.0;
  std::set<std::string> annotators;

  nlohmann::json to_json() const;
};

struct ExportResult {
  std::vector<QAItem> items;         // edits applied
  std::vector<nlohmann::json> docs;  // item JSON plus a "verification" field
  QcStats stats;
  std::string jsonl() const;
};

// Scenes the service can review, with their graphs and rendered-asset root.
struct ServiceData {
  std::vector<SceneBundle> scenes;
  std::vector<QAItem> items;
  std::filesystem::path asset_root;
};

// In-memory index over an append-only JSONL event log. Every accepted
// submission is appended before it is applied; opening a store replays the
// log. Reads share a lock, writes are serialized.
class VerificationStore {
 public:
  VerificationStore(ServiceData data, std::optional<std::filesystem::path> log_path, int quorum = 1);

  QueuePage list_queue(QueueKind kind, const std::string& annotator, const QueueFilter& filter = {},
                       int offset = 0, int limit = 50) const;
  nlohmann::json get_bundle(const std::string& target) const;

  void submit_verdict(const VerificationRecord& record);
  void submit_human_answer(const HumanAnswer& answer);

  ExportResult export_accepted(const QueueFilter& filter = {}) const;
  QcStats stats(const QueueFilter& filter = {}) const;

  std::vector<PredictionRecord> human_predictions(const std::string& annotator) const;
  std::vector<PredictionRecord> human_predictions() const;
  Scene scene(const std::string& scene_id) const;
  // Full derived state; equal after replaying the same log.
  nlohmann::json snapshot() const;
  int quorum() const { return quorum_; }

 private:
  void apply_verdict(const VerificationRecord& r);
  void apply_answer(const HumanAnswer& a);
  void check_verdict(const VerificationRecord& r) const;
  void check_answer(const HumanAnswer& a) const;
  void append(const nlohmann::json& event);
  const QAItem* item(const std::string& id) const;
  const QAItem edited_item(const QAItem& item) const;
  QcStats stats_locked(const QueueFilter& filter) const;

  ServiceData data_;
  std::optional<std::filesystem::path> log_path_;
  int quorum_;
  std::map<std::string, std::size_t> item_index_;
  std::map<std::string, std::size_t> scene_index_;
  std::vector<VerificationRecord> verdicts_;
  std::vector<HumanAnswer> answers_;
  std::map<std::string, std::map<std::string, std::size_t>> verdicts_by_target_;  // target -> annotator -> index
  std::map<std::string, std::map<std::string, std::size_t>> answers_by_item_;
  mutable std::shared_mutex mu_;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> log_path;
  int quorum = 1;
  std::filesystem::path asset_root = "assets";
  std::optional<std::filesystem::path> static_root;

  // Unknown keys throw SchemaError.
  static ServiceConfig from_json(const nlohmann::json& j);
  // DRIVESCENE_PORT, DRIVESCENE_HOST, DRIVESCENE_LOG, DRIVESCENE_QUORUM,
  // DRIVESCENE_ASSET_ROOT, DRIVESCENE_STATIC_ROOT.
  void apply_env();
};

// HTTP front end: GET /queue, GET /bundle/{target}, POST /verdict,
// POST /answer, GET /export, GET /stats, GET /assets/... and an optional
// static client at /.
class VerificationServer {
 public:
  VerificationServer(VerificationStore& store, const ServiceConfig& config);
  ~VerificationServer();

  // Binds (port 0 picks a free one) and serves on a background thread.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace drivescene
