#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bolt/corpus.hpp"

namespace bolt {

/// (conversation_id, utterance_index)
using UtteranceKey = std::pair<std::string, int>;
using LabelMap = std::map<UtteranceKey, LabelSet>;

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// One-vs-rest counts per code. Throws DataError when the prediction and
/// gold utterance sets differ.
std::map<std::string, Confusion> per_class_confusion(const LabelMap& preds, const LabelMap& golds,
                                                     const std::vector<std::string>& codes);

struct MacroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

double precision(const Confusion& c);  // 0 when tp + fp == 0
double recall(const Confusion& c);     // 0 when tp + fn == 0
double f1(const Confusion& c);         // 0 when P + R == 0
double accuracy(const Confusion& c);   // (tp + tn) / n

/// Unweighted mean over every class passed in. With `drop_unsupported`,
/// classes without gold support (tp + fn == 0) are skipped.
MacroScores macro_prf(const std::map<std::string, Confusion>& confusions, bool drop_unsupported = false);

struct SplitMetrics {
  double macro_p = 0.0;
  double macro_r = 0.0;
  double macro_f1 = 0.0;
};

struct ClassScores {
  double f1 = 0.0;
  double accuracy = 0.0;
};

struct SplitFailure {
  int split = 0;
  std::string error;
};

struct SplitReport {
  std::vector<SplitMetrics> per_split;
  SplitMetrics mean;
  SplitMetrics std;  // sample std across successful splits
  std::map<std::string, ClassScores> per_class;  // averaged over successful splits
  std::vector<SplitFailure> failures;
};

/// Classifier under evaluation: receives the training split (few-shot pool)
/// and the test split, returns predicted labels for every test item.
using ClassifyFn =
    std::function<LabelMap(const std::vector<AnnotatedUtterance>& train, const std::vector<AnnotatedUtterance>& test)>;

/// Repeated random train/test evaluation; split i shuffles with base_seed + i.
SplitReport run_split_evaluation(const ClassifyFn& classify, const std::vector<AnnotatedUtterance>& annotated,
                                 const std::vector<std::string>& codes, int n_splits = 5, double ratio = 0.6,
                                 std::int64_t base_seed = 0, bool drop_unsupported = false);

/// Each code is included independently with probability 1/|codes|.
LabelMap random_baseline(const std::vector<AnnotatedUtterance>& test, const std::vector<std::string>& codes,
                         std::uint64_t seed);

LabelMap gold_labels(const std::vector<AnnotatedUtterance>& items);

nlohmann::ordered_json to_json(const SplitReport& report);
SplitReport split_report_from_json(const nlohmann::json& doc);

}  // namespace bolt
