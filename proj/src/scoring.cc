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

#include "drivescene/scoring.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "drivescene/errors.h"

namespace drivescene {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

nlohmann::json PredictionRecord::to_json() const {
  return {{"item_id", item_id}, {"responder_id", responder_id}, {"raw_answer", raw_answer}};
}

std::optional<std::string> answer_span(std::string_view raw) {
  const std::string l = lower(raw);
  const auto open = l.rfind("<answer>");
  if (open == std::string::npos) return std::nullopt;
  const auto body = open + 8;
  const auto close = l.find("</answer>", body);
  if (close == std::string::npos) return std::nullopt;
  return trim(raw.substr(body, close - body));
}

ParsedAnswer parse_answer(const QAItem& item, std::string_view raw) {
  const auto span = answer_span(raw);
  if (!span || span->empty()) return std::monostate{};
  const std::string& s = *span;
  if (item.numeric()) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || !std::isfinite(v)) return std::monostate{};
    return v;
  }
  // "B", "(B)", "B.", "B) text", "B: text"
  std::size_t k = s[0] == '(' ? 1 : 0;
  if (k < s.size() && std::isalpha(static_cast<unsigned char>(s[k]))) {
    const std::size_t after = k + 1;
    const bool alone = after == s.size() || s[after] == '.' || s[after] == ')' || s[after] == ':';
    if (alone) {
      const int idx = std::toupper(static_cast<unsigned char>(s[k])) - 'A';
      if (idx >= 0 && idx < static_cast<int>(item.options.size())) return idx;
      return std::monostate{};
    }
  }
  const std::string ls = lower(s);
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    if (lower(item.options[i]) == ls) return static_cast<int>(i);
  }
  return std::monostate{};
}

PredictionRecord make_prediction(const QAItem& item, std::string responder, std::string raw) {
  PredictionRecord p;
  p.item_id = item.item_id;
  p.responder_id = std::move(responder);
  p.raw_answer = std::move(raw);
  p.parsed = parse_answer(item, p.raw_answer);
  return p;
}

std::vector<PredictionRecord> parse_predictions(std::string_view jsonl, const std::vector<QAItem>& items) {
  std::map<std::string, const QAItem*> by_id;
  for (const auto& it : items) by_id[it.item_id] = &it;
  std::vector<PredictionRecord> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string line = trim(jsonl.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(where, e.what());
    }
    for (const char* key : {"item_id", "responder_id", "raw_answer"}) {
      if (!j.contains(key) || !j[key].is_string()) throw SchemaError(where + "." + key, "expected a string");
    }
    auto it = by_id.find(j["item_id"].get<std::string>());
    if (it == by_id.end()) throw PairingError(where + ": unknown item " + j["item_id"].get<std::string>());
    out.push_back(make_prediction(*it->second, j["responder_id"], j["raw_answer"]));
  }
  return out;
}

std::string serialize_predictions(const std::vector<PredictionRecord>& preds) {
  std::string out;
  for (const auto& p : preds) out += p.to_json().dump() + "\n";
  return out;
}

std::vector<PredictionRecord> align_predictions(const std::vector<QAItem>& items,
                                                const std::vector<PredictionRecord>& preds) {
  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.item_id, &p).second) throw PairingError("repeated prediction for " + p.item_id);
  }
  std::vector<PredictionRecord> out;
  std::set<std::string> known;
  for (const auto& it : items) {
    known.insert(it.item_id);
    auto f = by_id.find(it.item_id);
    if (f != by_id.end()) {
      out.push_back(*f->second);
    } else {
      PredictionRecord missing;
      missing.item_id = it.item_id;
      missing.responder_id = preds.empty() ? "" : preds.front().responder_id;
      out.push_back(missing);
    }
  }
  for (const auto& p : preds) {
    if (!known.count(p.item_id)) throw PairingError("prediction for unknown item " + p.item_id);
  }
  return out;
}

namespace {

void check_pairing(const std::vector<QAItem>& items, const std::vector<PredictionRecord>& preds) {
  if (items.size() != preds.size()) {
    throw PairingError("expected " + std::to_string(items.size()) + " predictions, got " +
                       std::to_string(preds.size()));
  }
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (items[k].item_id != preds[k].item_id) {
      throw PairingError("prediction " + std::to_string(k) + " answers " + preds[k].item_id + ", not " +
                         items[k].item_id);
    }
  }
}

bool is_correct(const QAItem& it, const PredictionRecord& p) {
  const int* choice = std::get_if<int>(&p.parsed);
  return choice && it.answer_index && *choice == *it.answer_index;
}

}  // namespace

std::optional<double> exact_match_accuracy(const std::vector<QAItem>& items,
                                           const std::vector<PredictionRecord>& preds) {
  check_pairing(items, preds);
  int n = 0, correct = 0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (items[k].numeric()) continue;
    ++n;
    correct += is_correct(items[k], preds[k]);
  }
  if (n == 0) return std::nullopt;
  return 100.0 * correct / n;
}

RmseResult rmse(const std::vector<QAItem>& items, const std::vector<PredictionRecord>& preds) {
  check_pairing(items, preds);
  RmseResult r;
  double sum = 0.0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (!items[k].numeric()) continue;
    const double* v = std::get_if<double>(&preds[k].parsed);
    if (!v) {
      ++r.excluded;
      continue;
    }
    const double e = *v - *items[k].answer_value;
    sum += e * e;
    ++r.used;
  }
  if (r.used) r.value = std::sqrt(sum / r.used);
  return r;
}

template <>
const std::vector<std::string>& enum_names<KappaBand>() {
  static const std::vector<std::string> names = {"poor",     "slight",      "fair",
                                                 "moderate", "substantial", "almost_perfect"};
  return names;
}

KappaBand kappa_band(double k) {
  if (k < 0.0) return KappaBand::kPoor;
  if (k <= 0.20) return KappaBand::kSlight;
  if (k <= 0.40) return KappaBand::kFair;
  if (k <= 0.60) return KappaBand::kModerate;
  if (k <= 0.80) return KappaBand::kSubstantial;
  return KappaBand::kAlmostPerfect;
}

std::string kappa_band_abbrev(KappaBand band) {
  static const std::vector<std::string> a = {"P.", "S.", "F.", "M.", "Sub.", "A.P."};
  return a[static_cast<std::size_t>(band)];
}

KappaResult cohen_kappa(const std::vector<std::vector<double>>& table) {
  const std::size_t m = table.size();
  double n = 0.0, agree = 0.0;
  std::vector<double> rows(m, 0.0), cols(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (table[i].size() != m) throw InvariantError("table", "contingency table must be square");
    for (std::size_t j = 0; j < m; ++j) {
      if (table[i][j] < 0) throw InvariantError("table", "negative count");
      n += table[i][j];
      rows[i] += table[i][j];
      cols[j] += table[i][j];
    }
    agree += table[i][i];
  }
  if (n <= 0) throw InvariantError("table", "no shared items");
  const double po = agree / n;
  double pe = 0.0;
  for (std::size_t i = 0; i < m; ++i) pe += rows[i] * cols[i];
  pe /= n * n;
  KappaResult r;
  // Both responders constant on the same category: agreement is perfect.
  r.kappa = pe >= 1.0 ? 1.0 : (po - pe) / (1.0 - pe);
  r.band = kappa_band(r.kappa);
  r.shared = static_cast<int>(std::lround(n));
  return r;
}

namespace {

std::map<std::string, int> choice_categories(const std::vector<PredictionRecord>& preds) {
  std::map<std::string, int> out;
  for (const auto& p : preds) {
    if (std::holds_alternative<double>(p.parsed)) continue;
    const int c = std::holds_alternative<int>(p.parsed) ? std::get<int>(p.parsed) : -1;
    if (!out.emplace(p.item_id, c).second) throw PairingError("repeated prediction for " + p.item_id);
  }
  return out;
}

}  // namespace

KappaResult cohen_kappa(const std::vector<PredictionRecord>& a, const std::vector<PredictionRecord>& b) {
  const auto ca = choice_categories(a);
  const auto cb = choice_categories(b);
  std::map<int, std::size_t> index;
  std::vector<std::pair<int, int>> pairs;
  for (const auto& [id, x] : ca) {
    auto f = cb.find(id);
    if (f == cb.end()) continue;
    pairs.emplace_back(x, f->second);
    index.emplace(x, 0);
    index.emplace(f->second, 0);
  }
  if (pairs.empty()) throw PairingError("no shared items between responders");
  std::size_t k = 0;
  for (auto& [cat, i] : index) i = k++;
  std::vector<std::vector<double>> table(index.size(), std::vector<double>(index.size(), 0.0));
  for (const auto& [x, y] : pairs) table[index[x]][index[y]] += 1.0;
  return cohen_kappa(table);
}

std::map<Ability, KappaResult> kappa_by_ability(const std::vector<QAItem>& items,
                                                const std::vector<PredictionRecord>& a,
                                                const std::vector<PredictionRecord>& b) {
  std::map<std::string, Ability> ability;
  for (const auto& it : items) ability[it.item_id] = it.ability();
  std::map<Ability, std::vector<PredictionRecord>> sa, sb;
  for (const auto& p : a) {
    if (auto f = ability.find(p.item_id); f != ability.end()) sa[f->second].push_back(p);
  }
  for (const auto& p : b) {
    if (auto f = ability.find(p.item_id); f != ability.end()) sb[f->second].push_back(p);
  }
  std::map<Ability, KappaResult> out;
  for (const auto& [ab, pa] : sa) {
    try {
      out[ab] = cohen_kappa(pa, sb[ab]);
    } catch (const PairingError&) {
      // No shared choice items for this ability.
    }
  }
  return out;
}

double ability_average(double const_acc, double unders_acc, std::optional<double> unders_rmse, double reas_acc) {
  return (const_acc + unders_acc - unders_rmse.value_or(0.0) + reas_acc) / 3.0;
}

double rmse_tolerance(Task task) {
  if (task == Task::kCountingAbsolute) return 10.0;
  if (task == Task::kDistanceAbsolute) return 25.0;
  throw InvariantError("task", to_string(task) + " is not scored by RMSE");
}

double rescale_rmse_for_plot(double rmse_value, double tolerance) {
  if (!(tolerance > 0)) throw InvariantError("tolerance", "must be positive");
  if (rmse_value < 0) throw InvariantError("rmse", "must be non-negative");
  return std::clamp((tolerance - rmse_value) / tolerance * 100.0, 0.0, 100.0);
}

std::vector<ConditionRow> condition_breakdown(const std::vector<QAItem>& items,
                                              const std::vector<PredictionRecord>& preds, int min_count) {
  check_pairing(items, preds);
  std::vector<ConditionRow> out;
  for (const char* dim : {"weather", "time_of_day", "scene_type", "source"}) {
    std::map<std::string, ConditionRow> rows;
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (items[k].numeric()) continue;
      const auto& c = items[k].conditions;
      const std::string value = c.contains(dim) && c[dim].is_string() ? c[dim].get<std::string>() : "other";
      ConditionRow& r = rows[value];
      r.dimension = dim;
      r.value = value;
      ++r.items;
      r.correct += is_correct(items[k], preds[k]);
    }
    for (auto& [v, r] : rows) {
      r.accuracy = 100.0 * r.correct / r.items;
      r.low_count = r.items < min_count;
      out.push_back(r);
    }
  }
  return out;
}

MetricsReport score(const std::vector<QAItem>& items, const std::vector<PredictionRecord>& preds,
                    int min_condition_count) {
  const auto aligned = align_predictions(items, preds);
  MetricsReport r;
  r.responder_id = preds.empty() ? "" : preds.front().responder_id;
  std::map<Task, std::pair<std::vector<QAItem>, std::vector<PredictionRecord>>> by_task;
  std::vector<QAItem> numeric_items;
  std::vector<PredictionRecord> numeric_preds;
  for (std::size_t k = 0; k < items.size(); ++k) {
    by_task[items[k].task].first.push_back(items[k]);
    by_task[items[k].task].second.push_back(aligned[k]);
    if (items[k].numeric()) {
      numeric_items.push_back(items[k]);
      numeric_preds.push_back(aligned[k]);
    }
  }
  std::map<Ability, std::vector<double>> per_ability;
  for (const auto& [task, v] : by_task) {
    TaskScore ts;
    ts.items = static_cast<int>(v.first.size());
    for (const auto& p : v.second) ts.unparsed += std::holds_alternative<std::monostate>(p.parsed);
    if (is_numeric_task(task)) {
      ts.rmse = rmse(v.first, v.second).value;
      if (ts.rmse) ts.rescaled = rescale_rmse_for_plot(*ts.rmse, rmse_tolerance(task));
    } else {
      ts.accuracy = exact_match_accuracy(v.first, v.second);
      per_ability[ability_of(task)].push_back(*ts.accuracy);
    }
    r.tasks[task] = ts;
  }
  for (const auto& [ab, accs] : per_ability) {
    double sum = 0.0;
    for (double a : accs) sum += a;
    r.ability_accuracy[ab] = sum / accs.size();
  }
  if (!numeric_items.empty()) r.unders_rmse = rmse(numeric_items, numeric_preds).value;
  auto acc = [&](Ability a) { return r.ability_accuracy.count(a) ? r.ability_accuracy.at(a) : 0.0; };
  r.average = ability_average(acc(Ability::kConst), acc(Ability::kUnders), r.unders_rmse, acc(Ability::kReas));
  r.conditions = condition_breakdown(items, aligned, min_condition_count);
  return r;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string fmt(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j = {{"responder_id", responder_id}};
  j["tasks"] = nlohmann::json::object();
  for (const auto& [t, s] : tasks) {
    j["tasks"][to_string(t)] = {{"ability", to_string(ability_of(t))},
                                {"items", s.items},
                                {"accuracy", opt(s.accuracy)},
                                {"rmse", opt(s.rmse)},
                                {"rescaled", opt(s.rescaled)},
                                {"unparsed", s.unparsed}};
  }
  j["abilities"] = nlohmann::json::object();
  for (const auto& [a, v] : ability_accuracy) j["abilities"][to_string(a)] = v;
  j["unders_rmse"] = opt(unders_rmse);
  j["average"] = average;
  j["conditions"] = nlohmann::json::array();
  for (const auto& c : conditions) {
    j["conditions"].push_back({{"dimension", c.dimension},
                               {"value", c.value},
                               {"items", c.items},
                               {"correct", c.correct},
                               {"accuracy", c.accuracy},
                               {"low_count", c.low_count}});
  }
  return j;
}

std::string MetricsReport::to_text() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-28s %-7s %6s %9s %8s %9s %8s\n", "task", "ability", "items", "accuracy",
                "rmse", "rescaled", "unparsed");
  out += buf;
  for (const auto& [t, s] : tasks) {
    std::snprintf(buf, sizeof buf, "%-28s %-7s %6d %9s %8s %9s %8d\n", to_string(t).c_str(),
                  to_string(ability_of(t)).c_str(), s.items, fmt(s.accuracy).c_str(), fmt(s.rmse).c_str(),
                  fmt(s.rescaled).c_str(), s.unparsed);
    out += buf;
  }
  out += "\n";
  for (const auto& [a, v] : ability_accuracy) {
    std::snprintf(buf, sizeof buf, "%-12s %8.2f\n", to_string(a).c_str(), v);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-12s %8s\n%-12s %8.2f\n\n", "Unders RMSE", fmt(unders_rmse).c_str(), "Avg",
                average);
  out += buf;
  for (const auto& c : conditions) {
    std::snprintf(buf, sizeof buf, "%-12s %-20s %6d %8.2f%s\n", c.dimension.c_str(), c.value.c_str(), c.items,
                  c.accuracy, c.low_count ? "  (low count)" : "");
    out += buf;
  }
  return out;
}

}  // namespace drivescene
