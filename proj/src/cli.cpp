#include "bolt/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bolt/analytics.hpp"
#include "bolt/classification.hpp"
#include "bolt/config.hpp"
#include "bolt/corpus.hpp"
#include "bolt/errors.hpp"
#include "bolt/evaluation.hpp"
#include "bolt/lexicon.hpp"
#include "bolt/modulation.hpp"
#include "bolt/report.hpp"
#include "bolt/simulation.hpp"

namespace bolt {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::optional<int> max_parallel;
  std::string out_path;
  std::string format = "csv";
};

// Everything a subcommand needs after parsing.
class Context {
 public:
  Context(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {
    if (!g_.config_path.empty()) config_ = load_config(g_.config_path);
  }

  const AppConfig& config() const { return config_; }
  std::int64_t seed() const { return g_.seed.value_or(config_.seed.value_or(0)); }
  int max_parallel() const {
    int n = g_.max_parallel.value_or(config_.max_parallel.value_or(1));
    if (n < 1) throw PreconditionError("--max-parallel must be >= 1");
    return n;
  }
  Format format() const { return format_from_string(g_.format); }
  std::ostream& err() { return err_; }

  std::optional<fs::path> cache_dir() const {
    if (const char* env = std::getenv("BOLT_CACHE_DIR"); env && *env) return fs::path(env);
    return config_.cache_dir;
  }

  Gateway& gateway(const std::string& spec) {
    if (spec.empty()) throw PreconditionError("a backend is required (--backend NAME or mock:script.json)");
    auto it = gateways_.find(spec);
    if (it == gateways_.end()) {
      it = gateways_.emplace(spec, Gateway::create(resolve_backend(config_, spec), cache_dir())).first;
    }
    return *it->second;
  }

  PromptTemplateSet templates() const {
    auto t = PromptTemplateSet::defaults(config_.style.value_or("base"));
    if (config_.therapist_system_file) t.therapist_system = slurp(*config_.therapist_system_file);
    if (config_.client_persona_file) t.client_persona = slurp(*config_.client_persona_file);
    if (config_.end_token) t.end_token = *config_.end_token;
    t.validate();
    return t;
  }

  // Writes to --out (atomically enough for our purposes) or stdout.
  void emit(const std::string& text) {
    if (g_.out_path.empty()) {
      out_ << text;
      out_.flush();
      return;
    }
    std::ofstream file(g_.out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot write " + g_.out_path);
    file << text;
    if (!file) throw DataError("write failed: " + g_.out_path);
  }

  void report_usage() {
    std::size_t calls = 0, hits = 0;
    for (const auto& [name, gw] : gateways_) {
      calls += gw->stats().network_calls;
      hits += gw->stats().cache_hits;
    }
    if (!gateways_.empty()) err_ << fmt::format("backend calls: {} network, {} cached\n", calls, hits);
  }

 private:
  static std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  const Globals& g_;
  std::ostream& out_;
  std::ostream& err_;
  AppConfig config_;
  std::map<std::string, std::unique_ptr<Gateway>> gateways_;
};

std::string render_doc(const ReportDocument& doc, Format format) { return render(doc, RenderSpec{format, {}}); }

std::string group_label(const Corpus& corpus, const std::string& path, const std::string& override_label) {
  if (!override_label.empty()) return override_label;
  if (!corpus.conversations.empty() && corpus.conversations.front().model_id &&
      !corpus.conversations.front().model_id->empty()) {
    return *corpus.conversations.front().model_id;
  }
  return fs::path(path).stem().string();
}

Speaker parse_speaker(const std::string& text) { return speaker_from_string(text); }

// --- corpus -------------------------------------------------------------------

struct CorpusOpts {
  std::vector<std::string> files;
  std::string label;
};

int run_corpus_validate(Context& ctx, const CorpusOpts& o) {
  int bad = 0;
  for (const auto& file : o.files) {
    try {
      Corpus c = load_corpus(file);
      ctx.err() << fmt::format("{}: ok ({} conversations)\n", file, c.conversations.size());
    } catch (const DataError& e) {
      ctx.err() << e.what() << "\n";
      ++bad;
    }
  }
  return bad ? 2 : 0;
}

int run_corpus_stats(Context& ctx, const CorpusOpts& o) {
  Corpus merged;
  for (const auto& file : o.files) {
    Corpus c = load_corpus(file);
    for (auto& conv : c.conversations) merged.conversations.push_back(std::move(conv));
  }
  std::string label = o.label.empty() ? fs::path(o.files.front()).stem().string() : o.label;
  ctx.emit(render_doc(CorpusStatsDocument{label, corpus_stats(merged)}, ctx.format()));
  return 0;
}

// --- simulate ------------------------------------------------------------------

struct SimulateOpts {
  std::string reference;
  std::string backend;
  std::string client_backend;
  int max_turns = 20;
  std::string manifest;
};

int run_simulate(Context& ctx, const SimulateOpts& o, SimulationMode mode) {
  Corpus refs = load_corpus(o.reference);
  Gateway& therapist = ctx.gateway(o.backend);
  Gateway* client = nullptr;
  if (mode == SimulationMode::full) client = &ctx.gateway(o.client_backend.empty() ? o.backend : o.client_backend);
  const auto templates = ctx.templates();
  SimulationRun run =
      simulate_corpus(refs, mode, therapist, client, templates, ctx.seed(), o.max_turns, ctx.max_parallel());
  std::ostringstream buf;
  write_corpus(buf, run.corpus);
  ctx.emit(buf.str());
  if (!o.manifest.empty()) {
    std::ofstream m(o.manifest);
    m << simulation_manifest(mode, therapist, client, templates, ctx.seed(), o.max_turns).dump(2) << "\n";
  }
  for (const auto& f : run.failures) {
    ctx.err() << fmt::format("{} (partial transcript: {} utterances)\n", f.what(), f.partial().utterances.size());
  }
  ctx.report_usage();
  return run.failures.empty() ? 0 : 3;
}

// --- classify ------------------------------------------------------------------

struct ClassifyOpts {
  std::string corpus;
  std::string backend;
  std::string mode = "multi_def";
  std::string speaker = "therapist";
  std::string pool;
  int k_shots = 3;
  int context = 0;
  std::string labeled_out;
};

ClassifierSpec make_spec(const ClassifyOpts& o, std::int64_t seed) {
  ClassifierSpec spec;
  spec.mode = classifier_mode_from_string(o.mode);
  spec.speaker = parse_speaker(o.speaker);
  spec.k_shots = o.k_shots;
  spec.context_window = o.context;
  spec.seed = seed;
  if (!o.pool.empty()) spec.example_pool = annotated_utterances(load_corpus(o.pool), spec.speaker);
  spec.validate();
  return spec;
}

int run_classify(Context& ctx, const ClassifyOpts& o) {
  Corpus corpus = load_corpus(o.corpus);
  const ClassifierSpec spec = make_spec(o, ctx.seed());
  ClassificationRun run = classify_corpus(ctx.gateway(o.backend), spec, Taxonomy::builtin(), corpus, ctx.max_parallel());
  for (const auto& w : run.warnings) ctx.err() << "warning: " << w << "\n";
  for (const auto& f : run.failures) {
    ctx.err() << fmt::format("failed {}#{}{}: {}\n", f.conversation_id, f.utterance_index,
                             f.code ? " [" + *f.code + "]" : "", f.error);
  }
  std::ostringstream buf;
  write_predictions(buf, run.predictions);
  ctx.emit(buf.str());
  if (!o.labeled_out.empty()) save_corpus(o.labeled_out, merge_predictions(corpus, run.predictions, spec.speaker));
  ctx.report_usage();
  return run.failures.empty() ? 0 : 3;
}

// --- eval-classifier -------------------------------------------------------------

struct EvalOpts {
  ClassifyOpts classify;
  bool random_baseline = false;
  int splits = 5;
  double ratio = 0.6;
  bool drop_unsupported = false;
};

int run_eval(Context& ctx, const EvalOpts& o) {
  Corpus corpus = load_corpus(o.classify.corpus);
  const Speaker speaker = parse_speaker(o.classify.speaker);
  const auto annotated = annotated_utterances(corpus, speaker);
  const auto codes = Taxonomy::builtin().ids_for(speaker);
  const std::int64_t seed = ctx.seed();
  std::string label;
  ClassifyFn fn;
  if (o.random_baseline) {
    label = fmt::format("{} random", o.classify.speaker);
    fn = [&, split = std::make_shared<std::uint64_t>(0)](const auto&, const auto& test) {
      return random_baseline(test, codes, static_cast<std::uint64_t>(seed) + (*split)++);
    };
  } else {
    label = fmt::format("{} {}", o.classify.speaker, o.classify.mode);
    Gateway& gw = ctx.gateway(o.classify.backend);
    fn = [&](const std::vector<AnnotatedUtterance>& train, const std::vector<AnnotatedUtterance>& test) {
      ClassifyOpts co = o.classify;
      co.pool.clear();
      ClassifierSpec spec;
      spec.mode = classifier_mode_from_string(co.mode);
      spec.speaker = speaker;
      spec.k_shots = co.k_shots;
      spec.seed = seed;
      if (spec.mode != ClassifierMode::multi_def) spec.example_pool = train;
      spec.validate();
      ClassificationRun run = classify_utterances(gw, spec, Taxonomy::builtin(), test, ctx.max_parallel());
      if (!run.failures.empty()) {
        throw BackendError(fmt::format("{} utterance(s) failed, first: {}", run.failures.size(),
                                       run.failures.front().error));
      }
      LabelMap out;
      for (const auto& p : run.predictions) out[{p.conversation_id, p.utterance_index}] = p.predicted;
      return out;
    };
  }
  SplitReport report = run_split_evaluation(fn, annotated, codes, o.splits, o.ratio, seed, o.drop_unsupported);
  for (const auto& f : report.failures) ctx.err() << fmt::format("split {} failed: {}\n", f.split, f.error);
  ctx.emit(render_doc(ClassifierEvalDocument{label, report}, ctx.format()));
  ctx.report_usage();
  if (report.per_split.empty()) return 3;
  return 0;
}

// --- analyze ---------------------------------------------------------------------

struct AnalyzeOpts {
  std::string compare;
  std::string baseline;
  std::string compare_label;
  std::string baseline_label;
  bool by_dataset = false;
  bool welch = false;
  std::string measure = "first_turn";
  std::string turn_base = "all_utterances";
  int window = 1;
  std::string lexicon;
};

enum class Analysis { frequency, temporal, adaptability, lexicon };

ComparisonTable analyze_once(Analysis what, const AnalyzeOpts& o, const std::vector<Conversation>& cmp,
                             const std::vector<Conversation>& base, const std::string& cmp_id,
                             const std::string& base_id, const Lexicon* lexicon) {
  const auto variance = o.welch ? stats::Variance::welch : stats::Variance::pooled;
  switch (what) {
    case Analysis::frequency:
      return profile_difference(frequency_profile(cmp, cmp_id), frequency_profile(base, base_id), variance);
    case Analysis::temporal: {
      const Measure m = measure_from_string(o.measure);
      if (o.turn_base != "all_utterances" && o.turn_base != "speaker_turns") {
        throw PreconditionError("--turn-base must be all_utterances or speaker_turns");
      }
      const TurnBase tb = o.turn_base == "speaker_turns" ? TurnBase::speaker_turns : TurnBase::all_utterances;
      return profile_difference(temporal_profile(cmp, cmp_id, m, Taxonomy::builtin(), tb),
                                temporal_profile(base, base_id, m, Taxonomy::builtin(), tb), variance);
    }
    case Analysis::adaptability:
      return adaptability_difference(adaptability_matrix(cmp, cmp_id, Taxonomy::builtin(), o.window),
                                     adaptability_matrix(base, base_id, Taxonomy::builtin(), o.window), variance);
    case Analysis::lexicon:
      return profile_difference(lexicon_profile(cmp, cmp_id, *lexicon), lexicon_profile(base, base_id, *lexicon),
                                variance);
  }
  throw std::logic_error("unreachable");
}

int run_analyze(Context& ctx, const AnalyzeOpts& o, Analysis what) {
  if (o.compare.empty() || o.baseline.empty()) throw PreconditionError("--compare and --baseline are required");
  Corpus cmp = load_corpus(o.compare);
  Corpus base = load_corpus(o.baseline);
  std::optional<Lexicon> lexicon;
  if (what == Analysis::lexicon) {
    if (o.lexicon.empty()) throw PreconditionError("analyze lexicon needs --lexicon FILE");
    lexicon = load_lexicon(o.lexicon);
    for (const auto& w : lexicon->warnings) ctx.err() << "warning: " << w << "\n";
  }
  const std::string cmp_id = group_label(cmp, o.compare, o.compare_label);
  const std::string base_id = group_label(base, o.baseline, o.baseline_label);

  ComparisonDocument doc;
  if (o.by_dataset) {
    auto cmp_sets = split_by_dataset(cmp.conversations);
    auto base_sets = split_by_dataset(base.conversations);
    for (const auto& [dataset, convs] : cmp_sets) {
      auto it = base_sets.find(dataset);
      if (it == base_sets.end()) {
        ctx.err() << fmt::format("warning: dataset '{}' has no baseline conversations\n", dataset);
        continue;
      }
      doc.tables.push_back(analyze_once(what, o, convs, it->second, cmp_id + "/" + dataset,
                                        base_id + "/" + dataset, lexicon ? &*lexicon : nullptr));
    }
  }
  doc.tables.push_back(analyze_once(what, o, cmp.conversations, base.conversations, cmp_id, base_id,
                                    lexicon ? &*lexicon : nullptr));
  doc.kind = table_kind_for(doc.tables.back().measure);
  ctx.emit(render_doc(doc, ctx.format()));
  return 0;
}

// --- modulate --------------------------------------------------------------------

struct ModulateOpts {
  std::string reference;
  std::string modulation;
  std::string backend;
  std::string client_backend;
  std::string classifier_backend;
  std::string classifier_mode = "multi_def";
  std::string pool;
  std::string human_baseline;
  int max_turns = 20;
  std::string save_dir;
};

int run_modulate(Context& ctx, const ModulateOpts& o) {
  Corpus refs = load_corpus(o.reference);
  const ModulationSpec& spec = resolve_modulation(ctx.config(), o.modulation);
  const BehaviorCode& code = Taxonomy::builtin().at(spec.target_code);
  ModulationBackends backends;
  backends.therapist = &ctx.gateway(o.backend);
  backends.client = &ctx.gateway(o.client_backend.empty() ? o.backend : o.client_backend);
  backends.classifier = &ctx.gateway(o.classifier_backend.empty() ? o.backend : o.classifier_backend);
  ClassifyOpts co;
  co.mode = o.classifier_mode;
  co.speaker = std::string(to_string(code.speaker));
  co.pool = o.pool;
  const ClassifierSpec classifier = make_spec(co, ctx.seed());
  ModulationResult result = run_modulation_experiment(backends, ctx.templates(), refs, spec, ctx.seed(), classifier,
                                                      Taxonomy::builtin(), o.max_turns, ctx.max_parallel());
  if (!o.human_baseline.empty()) {
    result.reference_freq = summarize_frequency(load_corpus(o.human_baseline), code).mean_freq;
  }
  if (!o.save_dir.empty()) {
    fs::create_directories(o.save_dir);
    save_corpus(fs::path(o.save_dir) / "original.jsonl", result.baseline_corpus);
    save_corpus(fs::path(o.save_dir) / "modulated.jsonl", result.modulated_corpus);
    std::ofstream(fs::path(o.save_dir) / "result.json") << to_json(result).dump(2) << "\n";
  }
  ctx.emit(render_doc(ModulationDocument{{modulation_row(result)}}, ctx.format()));
  ctx.report_usage();
  return 0;
}

// --- report ----------------------------------------------------------------------

struct ReportOpts {
  std::string input;
  std::string kind;
};

int run_report(Context& ctx, const ReportOpts& o) {
  std::ifstream in(o.input);
  if (!in) throw DataError("cannot open " + o.input);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(o.input + ": " + e.what());
  }
  RenderSpec spec{ctx.format(), {}};
  if (!o.kind.empty()) spec.table_kind = table_kind_from_string(o.kind);
  ctx.emit(render(report_document_from_json(doc), spec));
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"BOLT: behavioral assessment of LLM therapists", "bolt"};
  app.require_subcommand(1);
  Globals g;
  auto add_globals = [&](CLI::App* cmd) {
    cmd->add_option("--config", g.config_path, "INI configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", g.seed, "random seed (overrides config)");
    cmd->add_option("--max-parallel", g.max_parallel, "concurrent requests (overrides config)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", g.out_path, "output file (default: stdout)");
    cmd->add_option("--format", g.format, "csv | json | markdown")
        ->check(CLI::IsMember({"csv", "json", "markdown"}));
  };
  std::function<int(Context&)> action;

  // corpus
  CorpusOpts corpus_opts;
  auto* corpus = app.add_subcommand("corpus", "validate or summarize JSONL corpora");
  corpus->require_subcommand(1);
  auto* c_validate = corpus->add_subcommand("validate", "check schema and invariants");
  c_validate->add_option("files", corpus_opts.files)->required()->check(CLI::ExistingFile);
  add_globals(c_validate);
  c_validate->callback([&] { action = [&](Context& c) { return run_corpus_validate(c, corpus_opts); }; });
  auto* c_stats = corpus->add_subcommand("stats", "utterance length statistics");
  c_stats->add_option("files", corpus_opts.files)->required()->check(CLI::ExistingFile);
  c_stats->add_option("--label", corpus_opts.label);
  add_globals(c_stats);
  c_stats->callback([&] { action = [&](Context& c) { return run_corpus_stats(c, corpus_opts); }; });

  // simulate
  SimulateOpts sim_opts;
  auto* simulate = app.add_subcommand("simulate", "generate LLM-therapist conversations");
  simulate->require_subcommand(1);
  for (auto [name, mode] : {std::pair{"single", SimulationMode::single_response},
                            std::pair{"full", SimulationMode::full}}) {
    auto* cmd = simulate->add_subcommand(name, mode == SimulationMode::full ? "therapist/client dialogue"
                                                                            : "one reply per client turn");
    cmd->add_option("--reference", sim_opts.reference, "reference corpus")->required()->check(CLI::ExistingFile);
    cmd->add_option("--backend", sim_opts.backend, "therapist backend")->required();
    if (mode == SimulationMode::full) {
      cmd->add_option("--client-backend", sim_opts.client_backend, "client backend (default: --backend)");
      cmd->add_option("--max-turns", sim_opts.max_turns, "utterance cap")->check(CLI::PositiveNumber);
    }
    cmd->add_option("--manifest", sim_opts.manifest, "write the job manifest here");
    add_globals(cmd);
    cmd->callback([&, mode = mode] { action = [&, mode](Context& c) { return run_simulate(c, sim_opts, mode); }; });
  }

  // classify
  ClassifyOpts cls_opts;
  auto add_classifier_opts = [&](CLI::App* cmd, ClassifyOpts& o) {
    cmd->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
    cmd->add_option("--mode", o.mode, "multi_def | multi_def_ex | binary_def_ex")
        ->check(CLI::IsMember({"multi_def", "multi_def_ex", "binary_def_ex"}));
    cmd->add_option("--speaker", o.speaker)->check(CLI::IsMember({"therapist", "client"}));
    cmd->add_option("--k-shots", o.k_shots)->check(CLI::NonNegativeNumber);
  };
  auto* classify = app.add_subcommand("classify", "label utterances with behavior codes");
  add_classifier_opts(classify, cls_opts);
  classify->add_option("--backend", cls_opts.backend)->required();
  classify->add_option("--pool", cls_opts.pool, "labeled corpus supplying few-shot examples")
      ->check(CLI::ExistingFile);
  classify->add_option("--context", cls_opts.context, "preceding utterances shown")->check(CLI::NonNegativeNumber);
  classify->add_option("--labeled-out", cls_opts.labeled_out, "also write the corpus with predicted labels");
  add_globals(classify);
  classify->callback([&] { action = [&](Context& c) { return run_classify(c, cls_opts); }; });

  // eval-classifier
  EvalOpts eval_opts;
  auto* eval = app.add_subcommand("eval-classifier", "repeated train/test evaluation against gold labels");
  add_classifier_opts(eval, eval_opts.classify);
  eval->add_option("--backend", eval_opts.classify.backend);
  eval->add_flag("--random-baseline", eval_opts.random_baseline, "score a uniform random labeler instead");
  eval->add_option("--splits", eval_opts.splits)->check(CLI::PositiveNumber);
  eval->add_option("--ratio", eval_opts.ratio, "training fraction")->check(CLI::Range(0.0, 1.0));
  eval->add_flag("--drop-unsupported", eval_opts.drop_unsupported, "skip classes absent from the test split");
  add_globals(eval);
  eval->callback([&] { action = [&](Context& c) { return run_eval(c, eval_opts); }; });

  // analyze
  AnalyzeOpts an_opts;
  auto* analyze = app.add_subcommand("analyze", "compare behavioral profiles of two corpora");
  analyze->require_subcommand(1);
  for (auto [name, what] : {std::pair{"frequency", Analysis::frequency}, std::pair{"temporal", Analysis::temporal},
                            std::pair{"adaptability", Analysis::adaptability},
                            std::pair{"lexicon", Analysis::lexicon}}) {
    auto* cmd = analyze->add_subcommand(name);
    cmd->add_option("--compare", an_opts.compare, "labeled corpus under study")->required()->check(CLI::ExistingFile);
    cmd->add_option("--baseline", an_opts.baseline, "labeled baseline corpus")->required()->check(CLI::ExistingFile);
    cmd->add_option("--compare-label", an_opts.compare_label);
    cmd->add_option("--baseline-label", an_opts.baseline_label);
    cmd->add_flag("--by-dataset", an_opts.by_dataset, "one table per dataset_id plus the pooled table");
    cmd->add_flag("--welch", an_opts.welch, "unequal-variance t test");
    if (what == Analysis::temporal) {
      cmd->add_option("--measure", an_opts.measure)->check(CLI::IsMember({"first_turn", "mean_position"}));
      cmd->add_option("--turn-base", an_opts.turn_base)->check(CLI::IsMember({"all_utterances", "speaker_turns"}));
    }
    if (what == Analysis::adaptability) cmd->add_option("--window", an_opts.window)->check(CLI::PositiveNumber);
    if (what == Analysis::lexicon) cmd->add_option("--lexicon", an_opts.lexicon)->required()->check(CLI::ExistingFile);
    add_globals(cmd);
    cmd->callback([&, what = what] { action = [&, what](Context& c) { return run_analyze(c, an_opts, what); }; });
  }

  // modulate
  ModulateOpts mod_opts;
  auto* modulate = app.add_subcommand("modulate", "steer one behavior via the system prompt and measure it");
  modulate->add_option("--reference", mod_opts.reference)->required()->check(CLI::ExistingFile);
  std::string builtin_names;
  for (const auto& m : builtin_modulations()) builtin_names += (builtin_names.empty() ? "" : ", ") + m.name;
  modulate->add_option("--modulation", mod_opts.modulation, "built-in (" + builtin_names + ") or a [modulation.NAME] config section")
      ->required();
  modulate->add_option("--backend", mod_opts.backend, "therapist backend")->required();
  modulate->add_option("--client-backend", mod_opts.client_backend);
  modulate->add_option("--classifier-backend", mod_opts.classifier_backend);
  modulate->add_option("--classifier-mode", mod_opts.classifier_mode)
      ->check(CLI::IsMember({"multi_def", "multi_def_ex", "binary_def_ex"}));
  modulate->add_option("--pool", mod_opts.pool)->check(CLI::ExistingFile);
  modulate->add_option("--human-baseline", mod_opts.human_baseline, "high-quality labeled corpus (reference line)")
      ->check(CLI::ExistingFile);
  modulate->add_option("--max-turns", mod_opts.max_turns)->check(CLI::PositiveNumber);
  modulate->add_option("--save-dir", mod_opts.save_dir, "keep both arms' corpora and the result JSON");
  add_globals(modulate);
  modulate->callback([&] { action = [&](Context& c) { return run_modulate(c, mod_opts); }; });

  // report
  ReportOpts rep_opts;
  auto* report = app.add_subcommand("report", "re-render a JSON table");
  report->add_option("input", rep_opts.input)->required()->check(CLI::ExistingFile);
  report->add_option("--kind", rep_opts.kind, "expected table kind");
  add_globals(report);
  report->callback([&] { action = [&](Context& c) { return run_report(c, rep_opts); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return 1;
  }
  if (!action) {
    err << app.help();
    return 1;
  }

  try {
    Context ctx(g, out, err);
    return action(ctx);
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace bolt
