#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bolt/analytics.hpp"
#include "bolt/corpus.hpp"
#include "bolt/evaluation.hpp"
#include "bolt/modulation.hpp"
#include "bolt/taxonomy.hpp"

namespace bolt {

enum class Format { csv, json, markdown };
enum class TableKind {
  frequency_diff,
  temporal_diff,
  adaptability_diff,
  lexicon_diff,
  classifier_eval,
  modulation,
  corpus_stats,
};

std::string_view to_string(Format format);
std::string_view to_string(TableKind kind);
Format format_from_string(std::string_view text);
TableKind table_kind_from_string(std::string_view text);

/// Kind implied by a comparison table's measure.
TableKind table_kind_for(Measure measure);

/// One or more comparison tables of the same kind (e.g. one per model, or
/// per dataset plus pooled).
struct ComparisonDocument {
  TableKind kind = TableKind::frequency_diff;
  std::vector<ComparisonTable> tables;
};

struct ModulationRow {
  std::string model_id;
  std::string target;
  Direction direction = Direction::increase;
  double original = 0.0;   // percent
  double modulated = 0.0;  // percent
  double delta = 0.0;
  double p = 1.0;
  bool significant = false;
  std::optional<double> reference;  // high-quality human frequency

  friend bool operator==(const ModulationRow&, const ModulationRow&) = default;
};

ModulationRow modulation_row(const ModulationResult& result);

struct ModulationDocument {
  std::vector<ModulationRow> rows;
};

struct ClassifierEvalDocument {
  std::string label;  // e.g. "therapist multi_def_ex"
  SplitReport report;
};

struct CorpusStatsDocument {
  std::string label;
  CorpusStats stats;
};

using ReportDocument = std::variant<ComparisonDocument, ClassifierEvalDocument, ModulationDocument, CorpusStatsDocument>;

TableKind kind_of(const ReportDocument& document);

struct RenderSpec {
  Format format = Format::csv;
  std::optional<TableKind> table_kind;  // when set, must match the document
};

/// Deterministic rendering: fixed column order, 2 decimals for percents and
/// turn differences (3 for lexicon rates), p with 3 decimals or scientific
/// notation below 1e-3. Significance is a text column (+, -, ns).
std::string render(const ReportDocument& document, const RenderSpec& spec,
                   const Taxonomy& taxonomy = Taxonomy::builtin());

nlohmann::ordered_json to_json(const ReportDocument& document);
ReportDocument report_document_from_json(const nlohmann::json& doc);

/// "+29.22", "-1.56", "0.00"
std::string format_signed(double value, int decimals);
std::string format_p(double p);

}  // namespace bolt
