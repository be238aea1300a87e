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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "drivescene/qa.h"
#include "json.hpp"

namespace drivescene {

// Option index or numeric value; monostate when the answer cannot be parsed.
using ParsedAnswer = std::variant<std::monostate, int, double>;

struct PredictionRecord {
  std::string item_id;
  std::string responder_id;
  std::string raw_answer;
  ParsedAnswer parsed;

  nlohmann::json to_json() const;  // item_id, responder_id, raw_answer
};

// Text between the last <answer> and its </answer>, trimmed.
std::optional<std::string> answer_span(std::string_view raw);

// Choice items accept an option letter (A, B, ...) or the exact option text;
// numeric items accept a leading decimal number. Only the answer span is read.
ParsedAnswer parse_answer(const QAItem& item, std::string_view raw);

PredictionRecord make_prediction(const QAItem& item, std::string responder, std::string raw);

// JSONL of {item_id, responder_id, raw_answer}; parsed fields are filled from `items`.
std::vector<PredictionRecord> parse_predictions(std::string_view jsonl, const std::vector<QAItem>& items);
std::string serialize_predictions(const std::vector<PredictionRecord>& preds);

// One prediction per item, in item order. Unknown or repeated ids throw
// PairingError; missing ones become unparseable records.
std::vector<PredictionRecord> align_predictions(const std::vector<QAItem>& items,
                                                const std::vector<PredictionRecord>& preds);

// Parallel inputs; preds[k] must answer items[k] (PairingError otherwise).
// Numeric items are skipped. nullopt when no choice item is present.
std::optional<double> exact_match_accuracy(const std::vector<QAItem>& items,
                                           const std::vector<PredictionRecord>& preds);

struct RmseResult {
  std::optional<double> value;
  int used = 0;
  int excluded = 0;  // unparseable numeric answers
};
RmseResult rmse(const std::vector<QAItem>& items, const std::vector<PredictionRecord>& preds);

enum class KappaBand { kPoor, kSlight, kFair, kModerate, kSubstantial, kAlmostPerfect };
template <>
const std::vector<std::string>& enum_names<KappaBand>();
KappaBand kappa_band(double kappa);
std::string kappa_band_abbrev(KappaBand band);  // "S.", "F.", "M." ...

struct KappaResult {
  double kappa = 0.0;
  KappaBand band = KappaBand::kPoor;
  int shared = 0;
};

// Square contingency table of counts; rows are responder A's categories.
KappaResult cohen_kappa(const std::vector<std::vector<double>>& table);
// Over choice items answered by both; unparseable is its own category.
KappaResult cohen_kappa(const std::vector<PredictionRecord>& a, const std::vector<PredictionRecord>& b);
std::map<Ability, KappaResult> kappa_by_ability(const std::vector<QAItem>& items,
                                                const std::vector<PredictionRecord>& a,
                                                const std::vector<PredictionRecord>& b);

// (const + unders - unders_rmse + reas) / 3; a missing RMSE counts as 0.
double ability_average(double const_acc, double unders_acc, std::optional<double> unders_rmse,
                       double reas_acc);

double rmse_tolerance(Task task);  // counting 10, distance 25
// (tolerance - rmse) / tolerance * 100, clamped to [0, 100].
double rescale_rmse_for_plot(double rmse, double tolerance);

struct ConditionRow {
  std::string dimension;  // weather, time_of_day, scene_type, source
  std::string value;      // "other" when unknown
  int items = 0;
  int correct = 0;
  double accuracy = 0.0;
  bool low_count = false;
};
std::vector<ConditionRow> condition_breakdown(const std::vector<QAItem>& items,
                                              const std::vector<PredictionRecord>& preds, int min_count = 10);

struct TaskScore {
  int items = 0;
  std::optional<double> accuracy;
  std::optional<double> rmse;
  std::optional<double> rescaled;
  int unparsed = 0;
};

struct MetricsReport {
  std::string responder_id;
  std::map<Task, TaskScore> tasks;
  std::map<Ability, double> ability_accuracy;  // mean over the ability's choice tasks
  std::optional<double> unders_rmse;           // pooled over numeric items
  double average = 0.0;
  std::vector<ConditionRow> conditions;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

MetricsReport score(const std::vector<QAItem>& items, const std::vector<PredictionRecord>& preds,
                    int min_condition_count = 10);

}  // namespace drivescene
