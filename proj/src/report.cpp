#include "bolt/report.hpp"

#include <cmath>

#include <fmt/format.h>

#include "bolt/detail/json_number.hpp"

namespace bolt {

using detail::json_number;
using detail::json_number_from;

std::string_view to_string(Format format) {
  switch (format) {
    case Format::csv: return "csv";
    case Format::json: return "json";
    case Format::markdown: return "markdown";
  }
  return "csv";
}

std::string_view to_string(TableKind kind) {
  switch (kind) {
    case TableKind::frequency_diff: return "frequency_diff";
    case TableKind::temporal_diff: return "temporal_diff";
    case TableKind::adaptability_diff: return "adaptability_diff";
    case TableKind::lexicon_diff: return "lexicon_diff";
    case TableKind::classifier_eval: return "classifier_eval";
    case TableKind::modulation: return "modulation";
    case TableKind::corpus_stats: return "corpus_stats";
  }
  return "frequency_diff";
}

Format format_from_string(std::string_view text) {
  for (Format f : {Format::csv, Format::json, Format::markdown}) {
    if (to_string(f) == text) return f;
  }
  throw DataError(fmt::format("unknown format '{}' (expected csv|json|markdown)", text));
}

TableKind table_kind_from_string(std::string_view text) {
  for (TableKind k : {TableKind::frequency_diff, TableKind::temporal_diff, TableKind::adaptability_diff,
                      TableKind::lexicon_diff, TableKind::classifier_eval, TableKind::modulation,
                      TableKind::corpus_stats}) {
    if (to_string(k) == text) return k;
  }
  throw DataError(fmt::format("unknown table kind '{}'", text));
}

TableKind table_kind_for(Measure measure) {
  switch (measure) {
    case Measure::frequency_pct: return TableKind::frequency_diff;
    case Measure::first_turn:
    case Measure::mean_position: return TableKind::temporal_diff;
    case Measure::conditional_pct: return TableKind::adaptability_diff;
    case Measure::lexicon_pct: return TableKind::lexicon_diff;
  }
  return TableKind::frequency_diff;
}

TableKind kind_of(const ReportDocument& document) {
  struct Visitor {
    TableKind operator()(const ComparisonDocument& d) const { return d.kind; }
    TableKind operator()(const ClassifierEvalDocument&) const { return TableKind::classifier_eval; }
    TableKind operator()(const ModulationDocument&) const { return TableKind::modulation; }
    TableKind operator()(const CorpusStatsDocument&) const { return TableKind::corpus_stats; }
  };
  return std::visit(Visitor{}, document);
}

ModulationRow modulation_row(const ModulationResult& r) {
  return {r.model_id, r.spec.target_code, r.spec.direction, r.baseline.mean_freq, r.modulated.mean_freq,
          r.delta,    r.p,                r.significant,      r.reference_freq};
}

std::string format_signed(double value, int decimals) {
  if (std::isnan(value)) return "n/a";
  if (std::isinf(value)) return value > 0 ? "+inf" : "-inf";
  std::string text = fmt::format("{:.{}f}", std::fabs(value), decimals);
  if (text.find_first_not_of("0.") == std::string::npos) return text;
  return (value > 0 ? "+" : "-") + text;
}

std::string format_p(double p) {
  if (std::isnan(p)) return "n/a";
  if (p < 1e-3) return fmt::format("{:.2e}", p);
  return fmt::format("{:.3f}", p);
}

namespace {

std::string fixed(double value, int decimals) {
  if (std::isnan(value)) return "n/a";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::string text = fmt::format("{:.{}f}", value, decimals);
  if (text.front() == '-' && text.find_first_not_of("-0.") == std::string::npos) text.erase(0, 1);
  return text;
}

std::string format_df(double df) {
  if (std::isnan(df)) return "n/a";
  if (df == std::floor(df)) return fmt::format("{:.0f}", df);
  return fmt::format("{:.2f}", df);
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string md_field(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

class Grid {
 public:
  explicit Grid(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_field(cells[i]);
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  std::string markdown() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      out += '|';
      for (const auto& c : cells) out += ' ' + md_field(c) + " |";
      out += '\n';
    };
    line(header_);
    out += '|';
    for (std::size_t i = 0; i < header_.size(); ++i) out += " --- |";
    out += '\n';
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string display(const std::string& behavior, const Taxonomy& taxonomy) {
  const BehaviorCode* code = taxonomy.find(behavior);
  return code ? code->display_name : behavior;
}

std::string flag(const ComparisonRow& row) {
  if (!row.significant) return "ns";
  return row.mean_diff > 0 ? "+" : "-";
}

Grid comparison_grid(const ComparisonDocument& doc, const Taxonomy& taxonomy, bool markdown) {
  const bool adaptability = doc.kind == TableKind::adaptability_diff;
  const int decimals = doc.kind == TableKind::lexicon_diff ? 3 : 2;
  std::vector<std::string> header;
  if (adaptability) header.push_back("client_behavior");
  for (const char* h : {"behavior", "group", "baseline", "mean_diff", "std", "t", "df", "p", "significant"}) {
    header.emplace_back(h);
  }
  if (markdown) header.emplace_back("flag");
  Grid grid(header);
  for (const auto& table : doc.tables) {
    for (const auto& row : table.rows) {
      std::vector<std::string> cells;
      if (adaptability) cells.push_back(row.condition ? display(*row.condition, taxonomy) : "");
      cells.push_back(display(row.behavior, taxonomy));
      cells.push_back(table.compare_group);
      cells.push_back(table.baseline_group);
      cells.push_back(format_signed(row.mean_diff, decimals));
      cells.push_back(fixed(row.std, decimals));
      cells.push_back(fixed(row.t, 3));
      cells.push_back(format_df(row.df));
      cells.push_back(format_p(row.p));
      cells.push_back(row.significant ? "significant" : "ns");
      if (markdown) cells.push_back(flag(row));
      grid.add(std::move(cells));
    }
  }
  return grid;
}

Grid classifier_grid(const ClassifierEvalDocument& doc, const Taxonomy& taxonomy) {
  Grid grid({"section", "name", "precision", "recall", "f1", "accuracy"});
  auto pct = [](double x) { return fixed(100.0 * x, 2); };
  const auto& r = doc.report;
  for (std::size_t i = 0; i < r.per_split.size(); ++i) {
    const auto& s = r.per_split[i];
    grid.add({"split", std::to_string(i), pct(s.macro_p), pct(s.macro_r), pct(s.macro_f1), ""});
  }
  grid.add({"summary", "mean", pct(r.mean.macro_p), pct(r.mean.macro_r), pct(r.mean.macro_f1), ""});
  grid.add({"summary", "std", pct(r.std.macro_p), pct(r.std.macro_r), pct(r.std.macro_f1), ""});
  for (const auto& code : taxonomy.codes()) {
    auto it = r.per_class.find(code.id);
    if (it == r.per_class.end()) continue;
    grid.add({"class", code.display_name, "", "", pct(it->second.f1), pct(it->second.accuracy)});
  }
  for (const auto& [name, scores] : r.per_class) {
    if (taxonomy.find(name)) continue;
    grid.add({"class", name, "", "", pct(scores.f1), pct(scores.accuracy)});
  }
  return grid;
}

Grid modulation_grid(const ModulationDocument& doc, const Taxonomy& taxonomy) {
  Grid grid({"model", "behavior", "direction", "change", "original", "modulated", "delta", "p", "significant",
             "reference"});
  for (const auto& row : doc.rows) {
    grid.add({row.model_id, display(row.target, taxonomy), std::string(to_string(row.direction)),
              fmt::format("{}% → {}%", fixed(row.original, 1), fixed(row.modulated, 1)), fixed(row.original, 2),
              fixed(row.modulated, 2), format_signed(row.delta, 2), format_p(row.p),
              row.significant ? "significant" : "ns", row.reference ? fixed(*row.reference, 2) : ""});
  }
  return grid;
}

Grid corpus_stats_grid(const CorpusStatsDocument& doc) {
  Grid grid({"speaker", "n_conversations", "n_utterances", "words_mean", "words_std"});
  const auto& s = doc.stats;
  for (auto [name, sp] : {std::pair{"therapist", &s.therapist}, std::pair{"client", &s.client}}) {
    grid.add({name, std::to_string(s.n_conversations), std::to_string(sp->n_utterances), fixed(sp->words_mean, 2),
              fixed(sp->words_std, 2)});
  }
  return grid;
}

nlohmann::ordered_json speaker_json(const SpeakerStats& s) {
  return {{"n_utterances", s.n_utterances}, {"words_mean", json_number(s.words_mean)},
          {"words_std", json_number(s.words_std)}};
}

SpeakerStats speaker_from_json(const nlohmann::json& j) {
  return {j.at("n_utterances").get<std::size_t>(), json_number_from(j.at("words_mean")),
          json_number_from(j.at("words_std"))};
}

}  // namespace

std::string render(const ReportDocument& document, const RenderSpec& spec, const Taxonomy& taxonomy) {
  const TableKind kind = kind_of(document);
  if (spec.table_kind && *spec.table_kind != kind) {
    throw DataError(fmt::format("document is a {} table, not {}", to_string(kind), to_string(*spec.table_kind)));
  }
  if (const auto* cmp = std::get_if<ComparisonDocument>(&document)) {
    for (const auto& t : cmp->tables) {
      if (table_kind_for(t.measure) != cmp->kind) {
        throw DataError(fmt::format("{} table holds a {} comparison", to_string(cmp->kind), to_string(t.measure)));
      }
    }
  }
  if (spec.format == Format::json) return to_json(document).dump(2) + "\n";
  const bool markdown = spec.format == Format::markdown;
  struct Visitor {
    const Taxonomy& taxonomy;
    bool markdown;
    Grid operator()(const ComparisonDocument& d) const { return comparison_grid(d, taxonomy, markdown); }
    Grid operator()(const ClassifierEvalDocument& d) const { return classifier_grid(d, taxonomy); }
    Grid operator()(const ModulationDocument& d) const { return modulation_grid(d, taxonomy); }
    Grid operator()(const CorpusStatsDocument& d) const { return corpus_stats_grid(d); }
  };
  Grid grid = std::visit(Visitor{taxonomy, markdown}, document);
  return markdown ? grid.markdown() : grid.csv();
}

nlohmann::ordered_json to_json(const ReportDocument& document) {
  nlohmann::ordered_json doc;
  doc["table_kind"] = to_string(kind_of(document));
  if (const auto* cmp = std::get_if<ComparisonDocument>(&document)) {
    doc["tables"] = nlohmann::ordered_json::array();
    for (const auto& t : cmp->tables) doc["tables"].push_back(to_json(t));
  } else if (const auto* ev = std::get_if<ClassifierEvalDocument>(&document)) {
    doc["label"] = ev->label;
    doc["report"] = to_json(ev->report);
  } else if (const auto* mod = std::get_if<ModulationDocument>(&document)) {
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : mod->rows) {
      doc["rows"].push_back({
          {"model_id", r.model_id},
          {"target", r.target},
          {"direction", to_string(r.direction)},
          {"original", json_number(r.original)},
          {"modulated", json_number(r.modulated)},
          {"delta", json_number(r.delta)},
          {"p", json_number(r.p)},
          {"significant", r.significant},
          {"reference", r.reference ? json_number(*r.reference) : nlohmann::ordered_json(nullptr)},
      });
    }
  } else if (const auto* st = std::get_if<CorpusStatsDocument>(&document)) {
    doc["label"] = st->label;
    doc["n_conversations"] = st->stats.n_conversations;
    doc["conversations_by_quality"] = st->stats.conversations_by_quality;
    doc["therapist"] = speaker_json(st->stats.therapist);
    doc["client"] = speaker_json(st->stats.client);
  }
  return doc;
}

ReportDocument report_document_from_json(const nlohmann::json& doc) {
  try {
    const TableKind kind = table_kind_from_string(doc.at("table_kind").get<std::string>());
    switch (kind) {
      case TableKind::classifier_eval:
        return ClassifierEvalDocument{doc.at("label").get<std::string>(), split_report_from_json(doc.at("report"))};
      case TableKind::modulation: {
        ModulationDocument out;
        for (const auto& r : doc.at("rows")) {
          ModulationRow row;
          row.model_id = r.at("model_id").get<std::string>();
          row.target = r.at("target").get<std::string>();
          const auto direction = r.at("direction").get<std::string>();
          if (direction != "increase" && direction != "decrease") throw DataError("bad direction " + direction);
          row.direction = direction == "increase" ? Direction::increase : Direction::decrease;
          row.original = json_number_from(r.at("original"));
          row.modulated = json_number_from(r.at("modulated"));
          row.delta = json_number_from(r.at("delta"));
          row.p = json_number_from(r.at("p"));
          row.significant = r.at("significant").get<bool>();
          if (!r.at("reference").is_null()) row.reference = json_number_from(r.at("reference"));
          out.rows.push_back(std::move(row));
        }
        return out;
      }
      case TableKind::corpus_stats: {
        CorpusStatsDocument out;
        out.label = doc.at("label").get<std::string>();
        out.stats.n_conversations = doc.at("n_conversations").get<std::size_t>();
        out.stats.conversations_by_quality =
            doc.at("conversations_by_quality").get<std::map<std::string, std::size_t>>();
        out.stats.therapist = speaker_from_json(doc.at("therapist"));
        out.stats.client = speaker_from_json(doc.at("client"));
        return out;
      }
      default: {
        ComparisonDocument out;
        out.kind = kind;
        for (const auto& t : doc.at("tables")) out.tables.push_back(comparison_table_from_json(t));
        return out;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report document: ") + e.what());
  }
}

}  // namespace bolt
