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

#include "drivescene/verification.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "drivescene/errors.h"
#include "drivescene/graph.h"
#include "drivescene/pipeline.h"
#include "httplib.h"

namespace drivescene {

using json = nlohmann::json;

template <>
const std::vector<std::string>& enum_names<Verdict>() {
  static const std::vector<std::string> names = {"accept", "reject", "edit"};
  return names;
}

template <>
const std::vector<std::string>& enum_names<QueueKind>() {
  static const std::vector<std::string> names = {"metadata", "qa", "human_eval"};
  return names;
}

namespace {

const std::vector<std::string> kCriteria = {"answer_correct", "option_unique", "plausible", "objects_visible"};
const std::vector<std::string> kMetadataFields = {"weather", "time_of_day", "scene_type"};
const std::set<std::string> kEditableItemFields = {"question", "options", "answer_index", "answer_value"};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw SchemaError(where.empty() ? k : where + "." + k, "unknown key");
  }
}

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw SchemaError(where.empty() ? key : where + "." + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(where.empty() ? key : where + "." + key, "wrong type");
  }
}

double get_number(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw SchemaError(key, "expected a number");
  return j.at(key).get<double>();
}

template <typename E>
E get_enum(const json& j, const std::string& key) {
  const auto s = get_field<std::string>(j, key, "");
  const auto e = enum_from_string<E>(s);
  if (!e) throw SchemaError(key, "unknown value " + s);
  return *e;
}

template <typename T>
json labeled(const std::optional<Labeled<T>>& l) {
  if (!l) return nullptr;
  return {{"value", to_string(l->value)}, {"provenance", to_string(l->provenance)}};
}

json metadata_json(const SceneMetadata& m) {
  return {{"source", to_string(m.source)},
          {"ego_type", to_string(m.ego_type)},
          {"weather", labeled(m.weather)},
          {"time_of_day", labeled(m.time_of_day)},
          {"scene_type", labeled(m.scene_type)}};
}

template <typename E>
void set_verified(std::optional<Labeled<E>>& slot, const json& value, const std::string& field) {
  if (!value.is_string()) throw InvariantError("edited_value", field + " edits take a string");
  const auto e = enum_from_string<E>(value.get<std::string>());
  if (!e) throw InvariantError("edited_value", "unknown " + field + " " + value.get<std::string>());
  slot = Labeled<E>{*e, Provenance::kHumanVerified};
}

void apply_metadata_edit(SceneMetadata& m, const std::string& field, const json& value) {
  if (field == "weather") {
    set_verified(m.weather, value, field);
  } else if (field == "time_of_day") {
    set_verified(m.time_of_day, value, field);
  } else {
    set_verified(m.scene_type, value, field);
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::string> CriterionFlags::failed() const {
  std::vector<std::string> out;
  const bool v[] = {answer_correct, option_unique, plausible, objects_visible};
  for (std::size_t k = 0; k < kCriteria.size(); ++k) {
    if (!v[k]) out.push_back(kCriteria[k]);
  }
  return out;
}

json CriterionFlags::to_json() const {
  return {{"answer_correct", answer_correct},
          {"option_unique", option_unique},
          {"plausible", plausible},
          {"objects_visible", objects_visible}};
}

CriterionFlags CriterionFlags::from_json(const json& j) {
  check_keys(j, {kCriteria.begin(), kCriteria.end()}, "criterion_flags");
  CriterionFlags f;
  f.answer_correct = get_field<bool>(j, "answer_correct", "criterion_flags");
  f.option_unique = get_field<bool>(j, "option_unique", "criterion_flags");
  f.plausible = get_field<bool>(j, "plausible", "criterion_flags");
  f.objects_visible = get_field<bool>(j, "objects_visible", "criterion_flags");
  return f;
}

std::optional<MetadataTarget> parse_metadata_target(const std::string& target) {
  static const std::string prefix = "metadata:";
  if (target.rfind(prefix, 0) != 0) return std::nullopt;
  const auto colon = target.rfind(':');
  if (colon <= prefix.size()) throw NotFound("malformed metadata target " + target);
  MetadataTarget t{target.substr(prefix.size(), colon - prefix.size()), target.substr(colon + 1)};
  if (std::find(kMetadataFields.begin(), kMetadataFields.end(), t.field) == kMetadataFields.end()) {
    throw NotFound("unknown metadata field " + t.field);
  }
  return t;
}

std::string metadata_target(const std::string& scene_id, const std::string& field) {
  return "metadata:" + scene_id + ":" + field;
}

void VerificationRecord::validate() const {
  if (annotator_id.empty()) throw InvariantError("annotator_id", "required");
  if (target.empty()) throw InvariantError("target", "required");
  if (submitted_at < started_at) throw InvariantError("submitted_at", "precedes started_at");
  const bool metadata = target.rfind("metadata:", 0) == 0;
  if (metadata && criterion_flags) throw InvariantError("criterion_flags", "only QA targets carry criteria");
  if (metadata && verdict == Verdict::kReject) {
    throw InvariantError("verdict", "metadata targets are accepted or edited");
  }
  if (verdict == Verdict::kReject && (!criterion_flags || criterion_flags->all_true())) {
    throw InvariantError("criterion_flags", "reject requires at least one false criterion");
  }
  if (verdict == Verdict::kEdit && !edited_value) throw InvariantError("edited_value", "edit requires a value");
  if (verdict != Verdict::kEdit && edited_value) throw InvariantError("edited_value", "only edits carry a value");
}

json VerificationRecord::to_json() const {
  json j = {{"target", target}, {"verdict", to_string(verdict)}, {"annotator_id", annotator_id}};
  if (criterion_flags) j["criterion_flags"] = criterion_flags->to_json();
  if (edited_value) j["edited_value"] = *edited_value;
  j["started_at"] = started_at;
  j["submitted_at"] = submitted_at;
  return j;
}

VerificationRecord VerificationRecord::from_json(const json& j) {
  check_keys(j,
             {"target", "verdict", "criterion_flags", "edited_value", "annotator_id", "started_at", "submitted_at"},
             "");
  VerificationRecord r;
  r.target = get_field<std::string>(j, "target", "");
  r.verdict = get_enum<Verdict>(j, "verdict");
  if (j.contains("criterion_flags") && !j["criterion_flags"].is_null()) {
    r.criterion_flags = CriterionFlags::from_json(j["criterion_flags"]);
  }
  if (j.contains("edited_value") && !j["edited_value"].is_null()) r.edited_value = j["edited_value"];
  r.annotator_id = get_field<std::string>(j, "annotator_id", "");
  r.started_at = get_number(j, "started_at");
  r.submitted_at = get_number(j, "submitted_at");
  return r;
}

json HumanAnswer::to_json() const {
  json j = {{"item_id", item_id}, {"annotator_id", annotator_id}};
  if (std::holds_alternative<int>(answer)) {
    j["option_index"] = std::get<int>(answer);
  } else {
    j["value"] = std::get<double>(answer);
  }
  j["started_at"] = started_at;
  j["submitted_at"] = submitted_at;
  return j;
}

HumanAnswer HumanAnswer::from_json(const json& j) {
  check_keys(j, {"item_id", "annotator_id", "option_index", "value", "started_at", "submitted_at"}, "");
  HumanAnswer a;
  a.item_id = get_field<std::string>(j, "item_id", "");
  a.annotator_id = get_field<std::string>(j, "annotator_id", "");
  const bool has_index = j.contains("option_index"), has_value = j.contains("value");
  if (has_index == has_value) throw SchemaError("option_index", "give exactly one of option_index and value");
  if (has_index) {
    if (!j["option_index"].is_number_integer()) throw SchemaError("option_index", "expected an integer");
    a.answer = j["option_index"].get<int>();
  } else {
    a.answer = get_number(j, "value");
  }
  a.started_at = get_number(j, "started_at");
  a.submitted_at = get_number(j, "submitted_at");
  return a;
}

QueueFilter QueueFilter::from_params(const std::map<std::string, std::string>& params) {
  QueueFilter f;
  for (const auto& [k, v] : params) {
    if (k == "task") {
      f.task = enum_from_string<Task>(v);
      if (!f.task) throw BadFilter("unknown task " + v);
    } else if (k == "ability") {
      f.ability = enum_from_string<Ability>(v);
      if (!f.ability) throw BadFilter("unknown ability " + v);
    } else if (k == "scene_id") {
      f.scene_id = v;
    } else {
      throw BadFilter("unknown filter " + k);
    }
  }
  return f;
}

bool QueueFilter::matches(const QAItem& item) const {
  if (task && item.task != *task) return false;
  if (ability && item.ability() != *ability) return false;
  if (scene_id && item.scene_id != *scene_id) return false;
  return true;
}

json QueuePage::to_json() const {
  return {{"targets", targets},
          {"total", total},
          {"offset", offset},
          {"next_offset", next_offset ? json(*next_offset) : json(nullptr)}};
}

json QcStats::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"items", items},
          {"reviewed", reviewed},
          {"decided", decided},
          {"accepted", accepted},
          {"edited", edited},
          {"rejected", rejected},
          {"pass_rate_defined", decided > 0},
          {"pass_rate", opt(pass_rate)},
          {"pass_rate_with_edits", opt(pass_rate_with_edits)},
          {"rejections_by_criterion", rejections_by_criterion},
          {"verdicts", verdicts},
          {"answers", answers},
          {"verdict_seconds", verdict_seconds},
          {"answer_seconds", answer_seconds},
          {"annotator_seconds", verdict_seconds + answer_seconds},
          {"annotators", annotators}};
}

std::string ExportResult::jsonl() const {
  std::string out;
  for (const auto& d : docs) out += d.dump() + "\n";
  return out;
}

VerificationStore::VerificationStore(ServiceData data, std::optional<std::filesystem::path> log_path, int quorum)
    : data_(std::move(data)), log_path_(std::move(log_path)), quorum_(quorum) {
  if (quorum_ < 1) throw InvariantError("quorum", "must be at least 1");
  for (std::size_t k = 0; k < data_.items.size(); ++k) {
    if (!item_index_.emplace(data_.items[k].item_id, k).second) {
      throw InvariantError("items", "duplicate item id " + data_.items[k].item_id);
    }
  }
  for (std::size_t k = 0; k < data_.scenes.size(); ++k) scene_index_[data_.scenes[k].scene.scene_id] = k;
  if (!log_path_ || !std::filesystem::exists(*log_path_)) return;
  std::ifstream in(*log_path_);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = log_path_->string() + ":" + std::to_string(line_no);
    json ev;
    try {
      ev = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(where, e.what());
    }
    try {
      const auto kind = get_field<std::string>(ev, "event", "");
      if (kind == "verdict") {
        const auto r = VerificationRecord::from_json(ev.at("record"));
        check_verdict(r);
        apply_verdict(r);
      } else if (kind == "answer") {
        const auto a = HumanAnswer::from_json(ev.at("answer"));
        check_answer(a);
        apply_answer(a);
      } else {
        throw SchemaError("event", "unknown event " + kind);
      }
    } catch (const Error& e) {
      throw SchemaError(where, e.what());
    } catch (const json::exception& e) {
      throw SchemaError(where, e.what());
    }
  }
}

const QAItem* VerificationStore::item(const std::string& id) const {
  auto it = item_index_.find(id);
  return it == item_index_.end() ? nullptr : &data_.items[it->second];
}

void VerificationStore::check_verdict(const VerificationRecord& r) const {
  r.validate();
  if (const auto mt = parse_metadata_target(r.target)) {
    auto s = scene_index_.find(mt->scene_id);
    if (s == scene_index_.end()) throw NotFound("unknown scene " + mt->scene_id);
    if (r.edited_value) {
      SceneMetadata probe = data_.scenes[s->second].scene.metadata;
      apply_metadata_edit(probe, mt->field, *r.edited_value);
    }
  } else {
    const QAItem* it = item(r.target);
    if (!it) throw NotFound("unknown item " + r.target);
    if (r.edited_value) {
      check_keys(*r.edited_value, kEditableItemFields, "edited_value");
      QAItem probe = *it;
      try {
        if (r.edited_value->contains("question")) probe.question = r.edited_value->at("question").get<std::string>();
        if (r.edited_value->contains("options")) {
          probe.options = r.edited_value->at("options").get<std::vector<std::string>>();
        }
        if (r.edited_value->contains("answer_index")) probe.answer_index = r.edited_value->at("answer_index").get<int>();
        if (r.edited_value->contains("answer_value")) {
          probe.answer_value = r.edited_value->at("answer_value").get<double>();
        }
      } catch (const json::exception&) {
        throw InvariantError("edited_value", "wrong field type");
      }
      if (probe.numeric() != probe.options.empty()) throw InvariantError("edited_value.options", "wrong shape");
      if (!probe.numeric() &&
          (!probe.answer_index || *probe.answer_index < 0 ||
           *probe.answer_index >= static_cast<int>(probe.options.size()))) {
        throw InvariantError("edited_value.answer_index", "out of range");
      }
    }
  }
  auto t = verdicts_by_target_.find(r.target);
  if (t != verdicts_by_target_.end() && t->second.count(r.annotator_id)) {
    throw DuplicateVerdict(r.annotator_id + " already judged " + r.target);
  }
}

void VerificationStore::check_answer(const HumanAnswer& a) const {
  if (a.annotator_id.empty()) throw InvariantError("annotator_id", "required");
  if (a.submitted_at < a.started_at) throw InvariantError("submitted_at", "precedes started_at");
  const QAItem* it = item(a.item_id);
  if (!it) throw NotFound("unknown item " + a.item_id);
  if (it->numeric() != std::holds_alternative<double>(a.answer)) {
    throw AnswerTypeError(it->numeric() ? a.item_id + " takes a numeric value"
                                        : a.item_id + " takes an option index");
  }
  if (const int* idx = std::get_if<int>(&a.answer)) {
    if (*idx < 0 || *idx >= static_cast<int>(it->options.size())) {
      throw InvariantError("option_index", "out of range");
    }
  }
  auto f = answers_by_item_.find(a.item_id);
  if (f != answers_by_item_.end() && f->second.count(a.annotator_id)) {
    throw DuplicateAnswer(a.annotator_id + " already answered " + a.item_id);
  }
}

void VerificationStore::apply_verdict(const VerificationRecord& r) {
  verdicts_by_target_[r.target][r.annotator_id] = verdicts_.size();
  verdicts_.push_back(r);
  if (r.verdict != Verdict::kEdit) return;
  if (const auto mt = parse_metadata_target(r.target)) {
    apply_metadata_edit(data_.scenes[scene_index_.at(mt->scene_id)].scene.metadata, mt->field, *r.edited_value);
  }
}

void VerificationStore::apply_answer(const HumanAnswer& a) {
  answers_by_item_[a.item_id][a.annotator_id] = answers_.size();
  answers_.push_back(a);
}

void VerificationStore::append(const json& event) {
  if (!log_path_) return;
  if (log_path_->has_parent_path()) std::filesystem::create_directories(log_path_->parent_path());
  std::ofstream out(*log_path_, std::ios::app);
  out << event.dump() << "\n";
  out.flush();
  if (!out) throw Error("cannot append to " + log_path_->string());
}

void VerificationStore::submit_verdict(const VerificationRecord& record) {
  std::unique_lock lock(mu_);
  check_verdict(record);
  append({{"event", "verdict"}, {"record", record.to_json()}});
  apply_verdict(record);
}

void VerificationStore::submit_human_answer(const HumanAnswer& answer) {
  std::unique_lock lock(mu_);
  check_answer(answer);
  append({{"event", "answer"}, {"answer", answer.to_json()}});
  apply_answer(answer);
}

QueuePage VerificationStore::list_queue(QueueKind kind, const std::string& annotator, const QueueFilter& filter,
                                        int offset, int limit) const {
  if (offset < 0) throw BadFilter("offset must be non-negative");
  if (limit <= 0) throw BadFilter("limit must be positive");
  std::shared_lock lock(mu_);
  std::vector<std::string> pending;
  auto done = [&](const auto& index, const std::string& key) {
    auto f = index.find(key);
    return f != index.end() && f->second.count(annotator);
  };
  if (kind == QueueKind::kMetadata) {
    if (filter.task || filter.ability) throw BadFilter("metadata queue filters by scene_id only");
    for (const auto& [sid, k] : scene_index_) {
      if (filter.scene_id && sid != *filter.scene_id) continue;
      for (const auto& field : kMetadataFields) {
        const std::string t = metadata_target(sid, field);
        if (!done(verdicts_by_target_, t)) pending.push_back(t);
      }
    }
  } else {
    const auto& index = kind == QueueKind::kQa ? verdicts_by_target_ : answers_by_item_;
    for (const auto& [id, k] : item_index_) {
      if (filter.matches(data_.items[k]) && !done(index, id)) pending.push_back(id);
    }
  }
  QueuePage page;
  page.total = static_cast<int>(pending.size());
  page.offset = offset;
  const int end = std::min(page.total, offset + limit);
  for (int k = offset; k < end; ++k) page.targets.push_back(pending[k]);
  if (end < page.total) page.next_offset = end;
  return page;
}

namespace {

json graph_slice(const SceneGraph& g, int t0, int t1) {
  const json full = graph_to_json(g);
  json nodes = json::array(), edges = json::array();
  auto in = [&](int t) { return t >= t0 && t <= t1; };
  for (const auto& n : full["nodes"]) {
    if (in(n["t"].get<int>())) nodes.push_back(n);
  }
  for (const auto& e : full["edges"]) {
    if (in(e["src"][0].get<int>()) && in(e["dst"][0].get<int>())) edges.push_back(e);
  }
  return {{"scene_id", g.scene_id}, {"frame_begin", t0}, {"frame_end", t1}, {"nodes", nodes}, {"edges", edges}};
}

json frames_json(const Scene& s, int t0, int t1) {
  json out = json::array();
  for (int t = std::max(0, t0); t <= t1 && t < static_cast<int>(s.frames.size()); ++t) {
    out.push_back({{"frame_index", s.frames[t].frame_index},
                   {"timestamp", s.frames[t].timestamp},
                   {"image_refs", s.frames[t].image_refs}});
  }
  return out;
}

}  // namespace

json VerificationStore::get_bundle(const std::string& target) const {
  std::shared_lock lock(mu_);
  std::vector<std::string> paths;
  json b;
  if (const auto mt = parse_metadata_target(target)) {
    auto s = scene_index_.find(mt->scene_id);
    if (s == scene_index_.end()) throw NotFound("unknown scene " + mt->scene_id);
    const SceneBundle& sb = data_.scenes[s->second];
    const json meta = metadata_json(sb.scene.metadata);
    b = {{"kind", "metadata"},
         {"target", target},
         {"scene_id", mt->scene_id},
         {"field", mt->field},
         {"current", meta[mt->field]},
         {"metadata", meta},
         {"front_image_ref", front_image_ref(sb.scene)},
         {"frames", frames_json(sb.scene, 0, 0)}};
    for (const auto& spec : metadata_review_assets(sb.scene)) {
      for (auto& p : spec.paths()) paths.push_back(std::move(p));
    }
  } else {
    const QAItem* it = item(target);
    if (!it) throw NotFound("unknown item " + target);
    auto s = scene_index_.find(it->scene_id);
    if (s == scene_index_.end()) throw NotFound("unknown scene " + it->scene_id);
    const SceneBundle& sb = data_.scenes[s->second];
    b = {{"kind", "qa"},
         {"target", target},
         {"item", edited_item(*it).to_json()},
         {"frames", frames_json(sb.scene, it->frame_begin, it->frame_end)},
         {"graph", graph_slice(sb.graph, it->frame_begin, it->frame_end)},
         {"metadata", metadata_json(sb.scene.metadata)}};
    paths = it->asset_paths();
  }
  json assets = json::array();
  for (const auto& p : paths) {
    if (!std::filesystem::exists(data_.asset_root / p)) throw NotFound("missing asset " + p);
    assets.push_back({{"path", p}, {"url", "/assets/" + p}});
  }
  b["assets"] = assets;
  return b;
}

const QAItem VerificationStore::edited_item(const QAItem& base) const {
  QAItem out = base;
  auto t = verdicts_by_target_.find(base.item_id);
  if (t == verdicts_by_target_.end()) return out;
  std::vector<std::size_t> order;
  for (const auto& [a, k] : t->second) order.push_back(k);
  std::sort(order.begin(), order.end());
  for (std::size_t k : order) {
    const auto& r = verdicts_[k];
    if (r.verdict != Verdict::kEdit) continue;
    const json& e = *r.edited_value;
    if (e.contains("question")) out.question = e["question"].get<std::string>();
    if (e.contains("options")) out.options = e["options"].get<std::vector<std::string>>();
    if (e.contains("answer_index")) out.answer_index = e["answer_index"].get<int>();
    if (e.contains("answer_value")) out.answer_value = e["answer_value"].get<double>();
  }
  return out;
}

QcStats VerificationStore::stats_locked(const QueueFilter& filter) const {
  QcStats s;
  for (const auto& c : kCriteria) s.rejections_by_criterion[c] = 0;
  for (const auto& it : data_.items) {
    if (!filter.matches(it)) continue;
    ++s.items;
    auto t = verdicts_by_target_.find(it.item_id);
    if (t != verdicts_by_target_.end()) {
      ++s.reviewed;
      int rejects = 0, passes = 0, edits = 0;
      for (const auto& [a, k] : t->second) {
        const auto& r = verdicts_[k];
        if (r.verdict == Verdict::kReject) {
          ++rejects;
          for (const auto& c : r.criterion_flags->failed()) ++s.rejections_by_criterion[c];
        } else {
          ++passes;
          edits += r.verdict == Verdict::kEdit;
        }
      }
      if (rejects > 0) {
        ++s.decided;
        ++s.rejected;
      } else if (passes >= quorum_) {
        ++s.decided;
        ++(edits ? s.edited : s.accepted);
      }
    }
  }
  const bool items_only = filter.task || filter.ability;
  for (const auto& r : verdicts_) {
    if (const auto mt = parse_metadata_target(r.target)) {
      if (items_only || (filter.scene_id && mt->scene_id != *filter.scene_id)) continue;
    } else if (!filter.matches(*item(r.target))) {
      continue;
    }
    ++s.verdicts;
    s.verdict_seconds += r.seconds();
    s.annotators.insert(r.annotator_id);
  }
  for (const auto& a : answers_) {
    if (!filter.matches(*item(a.item_id))) continue;
    ++s.answers;
    s.answer_seconds += a.seconds();
    s.annotators.insert(a.annotator_id);
  }
  if (s.decided > 0) {
    s.pass_rate = 100.0 * s.accepted / s.decided;
    s.pass_rate_with_edits = 100.0 * (s.accepted + s.edited) / s.decided;
  }
  return s;
}

QcStats VerificationStore::stats(const QueueFilter& filter) const {
  std::shared_lock lock(mu_);
  return stats_locked(filter);
}

ExportResult VerificationStore::export_accepted(const QueueFilter& filter) const {
  std::shared_lock lock(mu_);
  ExportResult out;
  out.stats = stats_locked(filter);
  for (const auto& it : data_.items) {
    if (!filter.matches(it)) continue;
    auto t = verdicts_by_target_.find(it.item_id);
    if (t == verdicts_by_target_.end()) continue;
    int passes = 0;
    bool rejected = false, edited = false;
    std::vector<std::string> annotators;
    for (const auto& [a, k] : t->second) {
      const Verdict v = verdicts_[k].verdict;
      rejected |= v == Verdict::kReject;
      edited |= v == Verdict::kEdit;
      passes += v != Verdict::kReject;
      annotators.push_back(a);
    }
    if (rejected || passes < quorum_) continue;
    out.items.push_back(edited_item(it));
    json doc = out.items.back().to_json();
    doc["verification"] = {{"verdict", edited ? "edit" : "accept"}, {"annotators", annotators}, {"quorum", quorum_}};
    out.docs.push_back(std::move(doc));
  }
  return out;
}

std::vector<PredictionRecord> VerificationStore::human_predictions(const std::string& annotator) const {
  std::shared_lock lock(mu_);
  std::vector<PredictionRecord> out;
  for (const auto& a : answers_) {
    if (!annotator.empty() && a.annotator_id != annotator) continue;
    const std::string body = std::holds_alternative<int>(a.answer)
                                 ? std::string(1, static_cast<char>('A' + std::get<int>(a.answer)))
                                 : format_number(std::get<double>(a.answer));
    out.push_back(make_prediction(*item(a.item_id), a.annotator_id, "<answer>" + body + "</answer>"));
  }
  return out;
}

std::vector<PredictionRecord> VerificationStore::human_predictions() const { return human_predictions(""); }

Scene VerificationStore::scene(const std::string& scene_id) const {
  std::shared_lock lock(mu_);
  auto s = scene_index_.find(scene_id);
  if (s == scene_index_.end()) throw NotFound("unknown scene " + scene_id);
  return data_.scenes[s->second].scene;
}

json VerificationStore::snapshot() const {
  std::shared_lock lock(mu_);
  json j;
  j["verdicts"] = json::array();
  for (const auto& r : verdicts_) j["verdicts"].push_back(r.to_json());
  j["answers"] = json::array();
  for (const auto& a : answers_) j["answers"].push_back(a.to_json());
  j["metadata"] = json::object();
  for (const auto& [sid, k] : scene_index_) j["metadata"][sid] = metadata_json(data_.scenes[k].scene.metadata);
  j["stats"] = stats_locked({}).to_json();
  return j;
}

ServiceConfig ServiceConfig::from_json(const json& j) {
  check_keys(j, {"host", "port", "log_path", "quorum", "asset_root", "static_root"}, "");
  ServiceConfig c;
  if (j.contains("host")) c.host = get_field<std::string>(j, "host", "");
  if (j.contains("port")) c.port = get_field<int>(j, "port", "");
  if (j.contains("log_path")) c.log_path = get_field<std::string>(j, "log_path", "");
  if (j.contains("quorum")) c.quorum = get_field<int>(j, "quorum", "");
  if (j.contains("asset_root")) c.asset_root = get_field<std::string>(j, "asset_root", "");
  if (j.contains("static_root")) c.static_root = get_field<std::string>(j, "static_root", "");
  if (c.quorum < 1) throw InvariantError("quorum", "must be at least 1");
  return c;
}

void ServiceConfig::apply_env() {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  auto as_int = [](const std::string& name, const std::string& v) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return n;
    } catch (const std::exception&) {
      throw SchemaError(name, "expected an integer, got " + v);
    }
  };
  if (auto v = env("DRIVESCENE_HOST")) host = *v;
  if (auto v = env("DRIVESCENE_PORT")) port = as_int("DRIVESCENE_PORT", *v);
  if (auto v = env("DRIVESCENE_LOG")) log_path = *v;
  if (auto v = env("DRIVESCENE_QUORUM")) quorum = as_int("DRIVESCENE_QUORUM", *v);
  if (auto v = env("DRIVESCENE_ASSET_ROOT")) asset_root = *v;
  if (auto v = env("DRIVESCENE_STATIC_ROOT")) static_root = *v;
  if (quorum < 1) throw InvariantError("quorum", "must be at least 1");
}

struct VerificationServer::Impl {
  VerificationStore& store;
  ServiceConfig config;
  httplib::Server server;
  std::thread thread;

  Impl(VerificationStore& s, const ServiceConfig& c) : store(s), config(c) { routes(); }

  static void reply_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static std::string annotator(const httplib::Request& req) {
    if (req.has_param("annotator")) return req.get_param_value("annotator");
    return req.get_header_value("X-Annotator-Id");
  }

  // Runs a handler, mapping domain errors onto HTTP statuses.
  template <typename F>
  static void guarded(httplib::Response& res, F&& f) {
    auto fail = [&](int status, const char* kind, const std::string& msg) {
      reply_json(res, {{"error", kind}, {"message", msg}}, status);
    };
    try {
      f();
    } catch (const NotFound& e) {
      fail(404, "not_found", e.what());
    } catch (const DuplicateVerdict& e) {
      fail(409, "duplicate_verdict", e.what());
    } catch (const DuplicateAnswer& e) {
      fail(409, "duplicate_answer", e.what());
    } catch (const BadFilter& e) {
      fail(400, "bad_filter", e.what());
    } catch (const AnswerTypeError& e) {
      fail(400, "type_error", e.what());
    } catch (const InvariantError& e) {
      fail(400, "invariant", e.what());
    } catch (const SchemaError& e) {
      fail(400, "schema", e.what());
    } catch (const json::exception& e) {
      fail(400, "schema", e.what());
    } catch (const std::exception& e) {
      fail(500, "internal", e.what());
    }
  }

  static json body_json(const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw SchemaError("body", e.what());
    }
  }

  static std::map<std::string, std::string> filter_params(const httplib::Request& req,
                                                          const std::set<std::string>& skip) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : req.params) {
      if (!skip.count(k)) out[k] = v;
    }
    return out;
  }

  static int int_param(const httplib::Request& req, const char* name, int fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string v = req.get_param_value(name);
    try {
      std::size_t used = 0;
      const int n = std::stoi(v, &used);
      if (used == v.size()) return n;
    } catch (const std::exception&) {
    }
    throw BadFilter(std::string(name) + " must be an integer");
  }

  void routes() {
    server.Get("/queue", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string k = req.has_param("kind") ? req.get_param_value("kind") : "qa";
        const auto kind = enum_from_string<QueueKind>(k);
        if (!kind) throw BadFilter("unknown queue kind " + k);
        const auto filter = QueueFilter::from_params(filter_params(req, {"kind", "annotator", "offset", "limit"}));
        reply_json(res, store.list_queue(*kind, annotator(req), filter, int_param(req, "offset", 0),
                                         int_param(req, "limit", 50))
                            .to_json());
      });
    });
    server.Get(R"(/bundle/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { reply_json(res, store.get_bundle(req.matches[1].str())); });
    });
    server.Post("/verdict", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        json j = body_json(req);
        if (j.is_object() && !j.contains("annotator_id")) j["annotator_id"] = annotator(req);
        const auto r = VerificationRecord::from_json(j);
        store.submit_verdict(r);
        reply_json(res, {{"ok", true}, {"target", r.target}, {"seconds", r.seconds()}});
      });
    });
    server.Post("/answer", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        json j = body_json(req);
        if (j.is_object() && !j.contains("annotator_id")) j["annotator_id"] = annotator(req);
        const auto a = HumanAnswer::from_json(j);
        store.submit_human_answer(a);
        reply_json(res, {{"ok", true}, {"item_id", a.item_id}});
      });
    });
    server.Get("/export", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto filter = QueueFilter::from_params(filter_params(req, {}));
        res.set_content(store.export_accepted(filter).jsonl(), "application/x-ndjson");
      });
    });
    server.Get("/stats", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto filter = QueueFilter::from_params(filter_params(req, {}));
        reply_json(res, store.stats(filter).to_json());
      });
    });
    server.set_mount_point("/assets", config.asset_root.string());
    if (config.static_root) server.set_mount_point("/", config.static_root->string());
  }
};

VerificationServer::VerificationServer(VerificationStore& store, const ServiceConfig& config)
    : impl_(std::make_unique<Impl>(store, config)) {}

VerificationServer::~VerificationServer() { stop(); }

int VerificationServer::start() {
  int port = impl_->config.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->config.host);
  } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
    port = -1;
  }
  if (port < 0) throw Error("cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void VerificationServer::run() {
  if (!impl_->server.listen(impl_->config.host, impl_->config.port)) {
    throw Error("cannot listen on " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  }
}

void VerificationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace drivescene
