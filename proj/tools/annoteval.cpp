// annoteval command line: validate and inspect annotated corpora, run the
// prompt-chained annotator (live or replayed), evaluate predictions against
// the reference annotations, and compare two evaluation reports.
//
// Exit codes: 0 ok, 1 validation failure, 2 provider failure, 3 usage error.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "annoteval/annotator.hpp"
#include "annoteval/corpus.hpp"
#include "annoteval/error.hpp"
#include "annoteval/evaluate.hpp"
#include "annoteval/metrics.hpp"
#include "annoteval/provider_http.hpp"
#include "annoteval/report.hpp"
#include "annoteval/typology.hpp"

namespace {

using namespace annoteval;

std::string default_typology_path() {
  if (const char* env = std::getenv("ANNOTEVAL_DATA"))
    return std::string(env) + "/typology/default.json";
#ifdef ANNOTEVAL_DATA_DIR
  return std::string(ANNOTEVAL_DATA_DIR) + "/typology/default.json";
#else
  return "data/typology/default.json";
#endif
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::AuthError:
    case ErrorCode::ProviderUnavailable:
      return 2;
    case ErrorCode::UsageError:
      return 3;
    default:
      return 1;
  }
}

void print_error(const Error& e) { std::cerr << "annoteval: error " << e.diagnostic() << "\n"; }

std::vector<std::filesystem::path> corpus_files(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else if (fs::exists(path)) {
    files.push_back(path);
  } else {
    throw Error(ErrorCode::IoError, "corpus path does not exist").with("path", path.string());
  }
  return files;
}

std::int64_t now_unix() {
  return static_cast<std::int64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                                       std::chrono::system_clock::now().time_since_epoch())
                                       .count());
}

// --- validate ---------------------------------------------------------------

int cmd_validate(const std::string& corpus_path, const std::string& typology_path) {
  Typology typology = Typology::load_file(typology_path);
  int failures = 0;
  std::set<std::string> seen_ids;
  for (const auto& file : corpus_files(corpus_path)) {
    try {
      nlohmann::json j = read_json(file);
      std::vector<AnnotatedDocument> docs;
      if (j.is_array())
        for (const auto& d : j) docs.push_back(parse_document(d, typology));
      else
        docs.push_back(parse_document(j, typology));
      for (const auto& d : docs) {
        if (!seen_ids.insert(d.doc_id).second)
          throw Error(ErrorCode::BadFormat, "duplicate doc_id in corpus").with("doc", d.doc_id);
        std::cout << "ok " << file.filename().string() << " doc=" << d.doc_id
                  << " errors=" << d.reference_errors.size() << "\n";
      }
    } catch (const Error& e) {
      ++failures;
      std::cerr << "annoteval: " << file.filename().string() << " " << e.diagnostic() << "\n";
    }
  }
  if (failures > 0) {
    std::cerr << failures << " file(s) failed validation\n";
    return 1;
  }
  std::cout << "corpus clean\n";
  return 0;
}

// --- stats ------------------------------------------------------------------

void print_stats_block(const std::string& title, const CorpusStats& st) {
  std::cout << "== " << title << " ==\n";
  std::cout << "documents:          " << st.n_docs << "\n";
  std::cout << "errors:             " << st.n_errors << "\n";
  std::cout << "errors/doc (mean):  " << fmt_fixed(st.mean_errors_per_doc, 2) << "\n";
  std::cout << "span length:        min " << st.span_len_min << "  max " << st.span_len_max
            << "  mean " << fmt_fixed(st.span_len_mean, 2) << "\n";
  std::cout << "labels per error:   min " << st.labels_per_error_min << "  max "
            << st.labels_per_error_max << "  mean " << fmt_fixed(st.labels_per_error_mean, 2)
            << "\n";
  std::cout << "words (target):     " << st.n_words << "\n";
}

int cmd_stats(const std::string& corpus_path, const std::string& typology_path, bool as_json) {
  Typology typology = Typology::load_file(typology_path);
  std::vector<AnnotatedDocument> docs = parse_reference_corpus(corpus_path, typology);
  CorpusStats overall = corpus_stats(docs);

  std::map<std::string, std::vector<const AnnotatedDocument*>> by_system;
  for (const auto& d : docs) by_system[d.mt_system].push_back(&d);

  if (as_json) {
    nlohmann::json j;
    j["overall"] = stats_to_json(overall);
    nlohmann::json sys = nlohmann::json::object();
    for (const auto& [name, ptr] : by_system) sys[name] = stats_to_json(corpus_stats(ptr));
    j["by_system"] = std::move(sys);
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  print_stats_block("all", overall);
  if (by_system.size() > 1)
    for (const auto& [name, ptr] : by_system) print_stats_block(name, corpus_stats(ptr));
  return 0;
}

// --- annotate ---------------------------------------------------------------

int cmd_annotate(const std::string& corpus_path, const std::string& typology_path,
                 const std::string& provider_config_path, const std::string& replay_dir,
                 const std::string& variant_str, const std::string& manual_path,
                 const std::string& out_dir, bool force) {
  Typology typology = Typology::load_file(typology_path);
  std::vector<AnnotatedDocument> docs = parse_reference_corpus(corpus_path, typology);
  const PromptVariant variant =
      variant_str == "short" ? PromptVariant::short_prompt : PromptVariant::long_prompt;

  std::vector<PredictedAnnotation> all_preds;
  int provider_failures = 0;
  nlohmann::json manifest;
  manifest["variant"] = variant_str;
  manifest["n_docs"] = docs.size();
  manifest["created_unix"] = now_unix();

  if (!replay_dir.empty()) {
    TranscriptStore store{replay_dir};
    manifest["mode"] = "replay";
    manifest["transcripts"] = replay_dir;
    for (const auto& doc : docs) {
      try {
        AnnotationOutcome out = replay(store, doc.doc_id);
        for (const auto& d : out.diagnostics)
          std::cerr << "annoteval: " << doc.doc_id << ": " << d << "\n";
        all_preds.insert(all_preds.end(), out.predictions.begin(), out.predictions.end());
      } catch (const Error& e) {
        ++provider_failures;
        print_error(e);
      }
    }
  } else {
    ProviderConfig config = provider_config_from_json(read_json(provider_config_path));
    HttpChatProvider provider{config};
    TranscriptStore store{std::filesystem::path(out_dir) / "transcripts"};
    std::filesystem::create_directories(store.dir());
    manifest["mode"] = "live";
    manifest["provider_id"] = config.provider_id;
    manifest["model"] = config.model;
    manifest["endpoint"] = config.endpoint;
    manifest["sampling"] = config.sampling;
    const std::string run_id = "run-" + std::to_string(now_unix());
    manifest["run_id"] = run_id;
    for (const auto& doc : docs) {
      try {
        if (store.has(doc.doc_id) && !force) {
          std::cout << "skip " << doc.doc_id << " (transcript exists; use --force to redo)\n";
        } else {
          PromptChain chain = build_chain(doc, typology, manual_path, variant);
          run_annotation(provider, config, chain, doc.doc_id, run_id, store);
          std::cout << "annotated " << doc.doc_id << "\n";
        }
        AnnotationOutcome out = replay(store, doc.doc_id);
        for (const auto& d : out.diagnostics)
          std::cerr << "annoteval: " << doc.doc_id << ": " << d << "\n";
        all_preds.insert(all_preds.end(), out.predictions.begin(), out.predictions.end());
      } catch (const Error& e) {
        ++provider_failures;
        print_error(e);
      }
    }
  }

  write_file(std::filesystem::path(out_dir) / "predictions.tsv",
             render_predictions_tsv(all_preds));
  manifest["n_predictions"] = all_preds.size();
  write_file(std::filesystem::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << (std::filesystem::path(out_dir) / "predictions.tsv").string() << " ("
            << all_preds.size() << " predictions)\n";
  if (provider_failures > 0) {
    std::cerr << provider_failures << " document(s) failed\n";
    return 2;
  }
  return 0;
}

// --- evaluate ---------------------------------------------------------------

int cmd_evaluate(const std::string& corpus_path, const std::string& typology_path,
                 const std::string& predictions_path, int bootstrap_b, std::uint64_t seed,
                 double level, const std::string& out_dir, const std::string& formats_csv,
                 bool trace) {
  Typology typology = Typology::load_file(typology_path);
  std::vector<AnnotatedDocument> docs = parse_reference_corpus(corpus_path, typology);
  std::vector<PredictedAnnotation> preds = load_predictions(predictions_path);

  EvalOptions options;
  options.ci.n_resamples = bootstrap_b;
  options.ci.seed = seed;
  options.ci.level = level;
  options.with_trace = trace;
  EvaluationRun run = run_evaluation(docs, preds, typology, options);

  if (trace) std::cout << render_match_trace(run);

  std::set<std::string> formats;
  if (!formats_csv.empty()) {
    std::string cur;
    for (char c : formats_csv + ",") {
      if (c == ',') {
        if (!cur.empty()) formats.insert(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    for (const auto& f : formats)
      if (f != "json" && f != "md" && f != "csv" && f != "svg")
        throw Error(ErrorCode::UsageError, "unknown report format").with("format", f);
  }

  auto written = write_report_files(run.report, out_dir, formats);
  nlohmann::json manifest;
  manifest["created_unix"] = now_unix();
  manifest["config_fingerprint"] = run.report.config_fingerprint;
  manifest["corpus"] = corpus_path;
  manifest["predictions"] = predictions_path;
  write_file(std::filesystem::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "macro precision " << fmt_fixed(run.report.macro_precision, 3) << ", recall "
            << fmt_fixed(run.report.macro_recall, 3) << ", F1 "
            << fmt_fixed(run.report.macro_f1, 3) << ", correctly labeled "
            << fmt_fixed(run.report.pct_correctly_labeled * 100.0, 1) << " %\n";
  for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
  return 0;
}

// --- compare ----------------------------------------------------------------

int cmd_compare(const std::string& path_a, const std::string& path_b, bool as_json) {
  EvaluationReport a = report_from_json(read_json(path_a));
  EvaluationReport b = report_from_json(read_json(path_b));
  RunDiff diff = compare_runs(a, b);

  if (as_json) {
    nlohmann::json j;
    auto metrics = nlohmann::json::array();
    for (const auto& m : diff.metrics)
      metrics.push_back({{"metric", m.name}, {"a", m.a}, {"b", m.b}, {"delta", m.delta}});
    auto docs = nlohmann::json::array();
    for (const auto& d : diff.documents)
      docs.push_back({{"doc_id", d.doc_id},
                      {"d_precision", d.d_precision},
                      {"d_recall", d.d_recall},
                      {"d_f1", d.d_f1},
                      {"d_pred", d.d_pred},
                      {"d_matched", d.d_matched},
                      {"d_label_correct", d.d_label_correct},
                      {"d_false", d.d_false}});
    j["metrics"] = std::move(metrics);
    j["documents"] = std::move(docs);
    j["identical"] = diff.identical();
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (diff.identical()) {
    std::cout << "no differences\n";
    return 0;
  }
  std::cout << "| metric | a | b | delta |\n| --- | --- | --- | --- |\n";
  for (const auto& m : diff.metrics)
    std::cout << "| " << m.name << " | " << fmt_fixed(m.a, 3) << " | " << fmt_fixed(m.b, 3)
              << " | " << fmt_fixed(m.delta, 3) << " |\n";
  std::cout << "\nper-document deltas (non-zero):\n";
  for (const auto& d : diff.documents) {
    if (d.d_precision == 0.0 && d.d_recall == 0.0 && d.d_f1 == 0.0 && d.d_pred == 0 &&
        d.d_matched == 0 && d.d_label_correct == 0 && d.d_false == 0)
      continue;
    std::cout << "  " << d.doc_id << ": dP=" << fmt_fixed(d.d_precision, 3)
              << " dR=" << fmt_fixed(d.d_recall, 3) << " dF1=" << fmt_fixed(d.d_f1, 3)
              << " dPred=" << d.d_pred << " dMatched=" << d.d_matched
              << " dLabelCorrect=" << d.d_label_correct << " dFalse=" << d.d_false << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"annoteval - evaluation of LLM error annotations for machine translation"};
  app.require_subcommand(1);

  std::string typology_path = default_typology_path();
  app.add_option("--typology", typology_path, "Typology file (JSON)")->capture_default_str();

  // validate
  auto* validate = app.add_subcommand("validate", "Check corpus files against all invariants");
  std::string v_corpus;
  validate->add_option("--corpus", v_corpus, "Corpus file or directory")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "Corpus statistics, overall and per MT system");
  std::string s_corpus;
  bool s_json = false;
  stats->add_option("--corpus", s_corpus, "Corpus file or directory")->required();
  stats->add_flag("--json", s_json, "Emit JSON instead of text");

  // annotate
  auto* annotate = app.add_subcommand("annotate", "Run the prompt-chained annotator");
  std::string a_corpus, a_provider, a_replay, a_variant = "long", a_manual, a_out;
  bool a_force = false;
  annotate->add_option("--corpus", a_corpus, "Corpus file or directory")->required();
  auto* popt = annotate->add_option("--provider-config", a_provider, "Provider config (JSON)");
  auto* ropt = annotate->add_option("--replay", a_replay, "Replay transcripts from a run directory");
  popt->excludes(ropt);
  ropt->excludes(popt);
  annotate->add_option("--variant", a_variant, "Prompt variant")
      ->check(CLI::IsMember({"long", "short"}))
      ->capture_default_str();
  annotate->add_option("--manual", a_manual, "Annotation manual attachment (opaque file)");
  annotate->add_option("--out", a_out, "Output directory")->required();
  annotate->add_flag("--force", a_force, "Redo documents that already have transcripts");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against the reference");
  std::string e_corpus, e_predictions, e_out, e_formats;
  int e_b = 10000;
  std::uint64_t e_seed = 0;
  double e_level = 0.95;
  bool e_trace = false;
  evaluate->add_option("--corpus", e_corpus, "Corpus file or directory")->required();
  evaluate->add_option("--predictions", e_predictions, "Predictions file (.tsv or .json)")
      ->required();
  evaluate->add_option("--bootstrap-b", e_b, "Bootstrap resample count")->capture_default_str();
  evaluate->add_option("--seed", e_seed, "Bootstrap seed (required for reproducibility)")
      ->required();
  evaluate->add_option("--level", e_level, "Confidence level")->capture_default_str();
  evaluate->add_option("--out", e_out, "Output directory")->required();
  evaluate->add_option("--formats", e_formats, "Comma list of report formats (json,md,csv,svg)");
  evaluate->add_flag("--trace", e_trace, "Print the per-document matching trace");

  // compare
  auto* compare = app.add_subcommand("compare", "Diff two evaluation reports");
  std::string c_a, c_b;
  bool c_json = false;
  compare->add_option("report_a", c_a, "First report.json")->required();
  compare->add_option("report_b", c_b, "Second report.json")->required();
  compare->add_flag("--json", c_json, "Emit JSON instead of text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }

  try {
    if (app.got_subcommand(validate)) return cmd_validate(v_corpus, typology_path);
    if (app.got_subcommand(stats)) return cmd_stats(s_corpus, typology_path, s_json);
    if (app.got_subcommand(annotate)) {
      if (a_provider.empty() && a_replay.empty())
        throw annoteval::Error(annoteval::ErrorCode::UsageError,
                               "annotate needs exactly one of --provider-config or --replay");
      return cmd_annotate(a_corpus, typology_path, a_provider, a_replay, a_variant, a_manual,
                          a_out, a_force);
    }
    if (app.got_subcommand(evaluate))
      return cmd_evaluate(e_corpus, typology_path, e_predictions, e_b, e_seed, e_level, e_out,
                          e_formats, e_trace);
    if (app.got_subcommand(compare)) return cmd_compare(c_a, c_b, c_json);
  } catch (const annoteval::Error& e) {
    print_error(e);
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "annoteval: error code=Internal msg=\"" << e.what() << "\"\n";
    return 1;
  }
  return 3;
}
