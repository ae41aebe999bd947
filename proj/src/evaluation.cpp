#include "bolt/evaluation.hpp"

#include <cmath>

#include <fmt/format.h>

#include "bolt/detail/rng.hpp"
#include "bolt/stats.hpp"

namespace bolt {

std::map<std::string, Confusion> per_class_confusion(const LabelMap& preds, const LabelMap& golds,
                                                     const std::vector<std::string>& codes) {
  if (preds.size() != golds.size()) {
    throw DataError(fmt::format("prediction set covers {} utterances, gold set {}", preds.size(), golds.size()));
  }
  std::map<std::string, Confusion> out;
  for (const auto& code : codes) out[code];
  auto p = preds.begin();
  for (auto g = golds.begin(); g != golds.end(); ++g, ++p) {
    if (p->first != g->first) {
      throw DataError(fmt::format("utterance {}#{} has no matching prediction", g->first.first, g->first.second));
    }
    for (auto& [code, c] : out) {
      const bool predicted = p->second.contains(code);
      const bool gold = g->second.contains(code);
      if (predicted && gold) ++c.tp;
      else if (predicted) ++c.fp;
      else if (gold) ++c.fn;
      else ++c.tn;
    }
  }
  return out;
}

double precision(const Confusion& c) {
  return c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const Confusion& c) {
  return c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f1(const Confusion& c) {
  const double p = precision(c);
  const double r = recall(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double accuracy(const Confusion& c) {
  const auto n = c.tp + c.fp + c.fn + c.tn;
  return n == 0 ? 0.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
}

MacroScores macro_prf(const std::map<std::string, Confusion>& confusions, bool drop_unsupported) {
  MacroScores m;
  std::size_t n = 0;
  for (const auto& [code, c] : confusions) {
    if (drop_unsupported && c.tp + c.fn == 0) continue;
    m.precision += precision(c);
    m.recall += recall(c);
    m.f1 += f1(c);
    ++n;
  }
  if (n == 0) return {};
  m.precision /= static_cast<double>(n);
  m.recall /= static_cast<double>(n);
  m.f1 /= static_cast<double>(n);
  return m;
}

LabelMap gold_labels(const std::vector<AnnotatedUtterance>& items) {
  LabelMap out;
  for (const auto& item : items) out[{item.conversation_id, item.utterance_index}] = item.labels;
  return out;
}

SplitReport run_split_evaluation(const ClassifyFn& classify, const std::vector<AnnotatedUtterance>& annotated,
                                 const std::vector<std::string>& codes, int n_splits, double ratio,
                                 std::int64_t base_seed, bool drop_unsupported) {
  if (n_splits < 1) throw PreconditionError("n_splits must be >= 1");
  if (codes.empty()) throw PreconditionError("evaluation needs at least one class");
  SplitReport report;
  std::map<std::string, std::pair<double, double>> class_sums;
  for (int i = 0; i < n_splits; ++i) {
    auto [train, test] = split_annotated(annotated, ratio, static_cast<std::uint64_t>(base_seed + i));
    if (test.empty()) throw PreconditionError(fmt::format("split {} has an empty test set", i));
    try {
      const LabelMap preds = classify(train, test);
      const auto confusions = per_class_confusion(preds, gold_labels(test), codes);
      const MacroScores m = macro_prf(confusions, drop_unsupported);
      report.per_split.push_back({m.precision, m.recall, m.f1});
      for (const auto& [code, c] : confusions) {
        class_sums[code].first += f1(c);
        class_sums[code].second += accuracy(c);
      }
    } catch (const std::exception& e) {
      report.failures.push_back({i, e.what()});
    }
  }
  const std::size_t ok = report.per_split.size();
  if (ok == 0) return report;
  std::vector<double> ps, rs, fs;
  for (const auto& s : report.per_split) {
    ps.push_back(s.macro_p);
    rs.push_back(s.macro_r);
    fs.push_back(s.macro_f1);
  }
  report.mean = {stats::mean(ps), stats::mean(rs), stats::mean(fs)};
  report.std = {stats::sample_std(ps), stats::sample_std(rs), stats::sample_std(fs)};
  for (const auto& [code, sums] : class_sums) {
    report.per_class[code] = {sums.first / static_cast<double>(ok), sums.second / static_cast<double>(ok)};
  }
  return report;
}

LabelMap random_baseline(const std::vector<AnnotatedUtterance>& test, const std::vector<std::string>& codes,
                         std::uint64_t seed) {
  detail::Rng rng(seed);
  const double p = codes.empty() ? 0.0 : 1.0 / static_cast<double>(codes.size());
  LabelMap out;
  for (const auto& item : test) {
    LabelSet& labels = out[{item.conversation_id, item.utterance_index}];
    for (const auto& code : codes) {
      if (rng.unit() < p) labels.insert(code);
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const SplitReport& r) {
  auto metrics = [](const SplitMetrics& m) {
    return nlohmann::ordered_json{{"macro_p", m.macro_p}, {"macro_r", m.macro_r}, {"macro_f1", m.macro_f1}};
  };
  nlohmann::ordered_json doc;
  doc["table_kind"] = "classifier_eval";
  doc["per_split"] = nlohmann::ordered_json::array();
  for (const auto& s : r.per_split) doc["per_split"].push_back(metrics(s));
  doc["mean"] = metrics(r.mean);
  doc["std"] = metrics(r.std);
  doc["per_class"] = nlohmann::ordered_json::object();
  for (const auto& [code, s] : r.per_class) doc["per_class"][code] = {{"f1", s.f1}, {"accuracy", s.accuracy}};
  doc["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : r.failures) doc["failures"].push_back({{"split", f.split}, {"error", f.error}});
  return doc;
}

SplitReport split_report_from_json(const nlohmann::json& doc) {
  auto metrics = [](const nlohmann::json& m) {
    return SplitMetrics{m.at("macro_p").get<double>(), m.at("macro_r").get<double>(), m.at("macro_f1").get<double>()};
  };
  try {
    SplitReport r;
    for (const auto& s : doc.at("per_split")) r.per_split.push_back(metrics(s));
    r.mean = metrics(doc.at("mean"));
    r.std = metrics(doc.at("std"));
    for (const auto& [code, s] : doc.at("per_class").items()) {
      r.per_class[code] = {s.at("f1").get<double>(), s.at("accuracy").get<double>()};
    }
    for (const auto& f : doc.at("failures")) r.failures.push_back({f.at("split").get<int>(), f.at("error").get<std::string>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed classifier evaluation document: ") + e.what());
  }
}

}  // namespace bolt
