#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "annoteval/bootstrap.hpp"
#include "annoteval/error.hpp"
#include "annoteval/matching.hpp"

// Per-document scores and corpus-level aggregation. Precision and recall are
// computed per document and macro-averaged; label accuracy is pooled over all
// matched errors. Degenerate documents (no predictions, no gold errors) score
// vacuously 1 and are flagged so they can be excluded in sensitivity checks.

namespace annoteval {

struct DocumentScore {
  std::string doc_id;
  int n_gold = 0;
  int n_pred = 0;
  int n_matched = 0;
  int n_label_correct = 0;
  int n_false = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<std::string> degenerate_flags;

  bool operator==(const DocumentScore&) const = default;
};

inline DocumentScore score_document(const std::string& doc_id, const MatchResult& m) {
  DocumentScore s;
  s.doc_id = doc_id;
  s.n_matched = static_cast<int>(m.pairs.size());
  s.n_gold = s.n_matched + static_cast<int>(m.unmatched_refs.size());
  s.n_pred = s.n_matched + static_cast<int>(m.unmatched_preds.size());
  s.n_label_correct = m.n_label_correct;
  s.n_false = s.n_pred - s.n_matched;
  if (s.n_pred == 0) {
    s.precision = 1.0;
    s.degenerate_flags.push_back("vacuousP");
  } else {
    s.precision = static_cast<double>(s.n_matched) / static_cast<double>(s.n_pred);
  }
  if (s.n_gold == 0) {
    s.recall = 1.0;
    s.degenerate_flags.push_back("vacuousR");
  } else {
    s.recall = static_cast<double>(s.n_matched) / static_cast<double>(s.n_gold);
  }
  if (s.precision + s.recall == 0.0) {
    s.f1 = 0.0;
    s.degenerate_flags.push_back("zeroF1");
  } else {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

struct CiConfig {
  int n_resamples = 10000;
  std::uint64_t seed = 0;
  double level = 0.95;
};

struct EvaluationReport {
  std::vector<DocumentScore> scores;  // sorted by doc_id
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  ConfidenceInterval ci_precision, ci_recall, ci_f1;
  std::int64_t total_gold = 0;
  std::int64_t total_pred = 0;
  std::int64_t total_matched = 0;
  std::int64_t total_label_correct = 0;
  double pct_correctly_labeled = 0.0;  // pooled fraction over matched errors
  double label_accuracy_macro = 0.0;   // secondary: mean over docs with matches
  std::int64_t label_accuracy_macro_docs = 0;
  double micro_precision = 0.0;  // auxiliary pooled-count variants
  double micro_recall = 0.0;
  double false_error_mean_per_doc = 0.0;
  std::int64_t false_error_min = 0;
  std::int64_t false_error_max = 0;
  double false_error_pct_of_pred = 0.0;
  std::vector<std::string> flags;
  std::string config_fingerprint;
};

namespace detail {

inline ConfidenceInterval interval_or_point(const std::vector<double>& values,
                                            const CiConfig& cfg) {
  if (values.size() >= 2)
    return bca_interval(values, cfg.n_resamples, cfg.seed, cfg.level);
  ConfidenceInterval ci;
  ci.level = cfg.level;
  ci.n_resamples = cfg.n_resamples;
  ci.seed = cfg.seed;
  ci.method = ConfidenceInterval::Method::percentile_fallback;
  ci.lower = ci.upper = values.empty() ? 0.0 : values.front();
  ci.warning = "fewer than 2 documents";
  return ci;
}

}  // namespace detail

/// Aggregate per-document scores into the corpus report. Scores are
/// canonically ordered by doc_id before any averaging so the result does not
/// depend on input order.
inline EvaluationReport aggregate(std::vector<DocumentScore> scores, const CiConfig& cfg,
                                  std::string config_fingerprint = {}) {
  if (scores.empty()) throw Error(ErrorCode::EmptyCorpus, "no documents to aggregate");
  std::sort(scores.begin(), scores.end(),
            [](const DocumentScore& a, const DocumentScore& b) { return a.doc_id < b.doc_id; });

  EvaluationReport r;
  r.config_fingerprint = std::move(config_fingerprint);
  const auto n = static_cast<double>(scores.size());
  std::vector<double> ps, rs, f1s, label_fracs;
  double sum_p = 0.0, sum_r = 0.0, sum_f1 = 0.0;
  bool first = true;
  for (const auto& s : scores) {
    sum_p += s.precision;
    sum_r += s.recall;
    sum_f1 += s.f1;
    ps.push_back(s.precision);
    rs.push_back(s.recall);
    f1s.push_back(s.f1);
    r.total_gold += s.n_gold;
    r.total_pred += s.n_pred;
    r.total_matched += s.n_matched;
    r.total_label_correct += s.n_label_correct;
    if (s.n_matched > 0)
      label_fracs.push_back(static_cast<double>(s.n_label_correct) /
                            static_cast<double>(s.n_matched));
    const auto nf = static_cast<std::int64_t>(s.n_false);
    if (first) {
      r.false_error_min = r.false_error_max = nf;
      first = false;
    } else {
      r.false_error_min = std::min(r.false_error_min, nf);
      r.false_error_max = std::max(r.false_error_max, nf);
    }
  }
  r.macro_precision = sum_p / n;
  r.macro_recall = sum_r / n;
  r.macro_f1 = sum_f1 / n;

  if (r.total_matched > 0) {
    r.pct_correctly_labeled = static_cast<double>(r.total_label_correct) /
                              static_cast<double>(r.total_matched);
  } else {
    r.pct_correctly_labeled = 0.0;
    r.flags.push_back("noMatchedErrors");
  }
  r.label_accuracy_macro_docs = static_cast<std::int64_t>(label_fracs.size());
  if (!label_fracs.empty()) {
    double sum = 0.0;
    for (double v : label_fracs) sum += v;
    r.label_accuracy_macro = sum / static_cast<double>(label_fracs.size());
  }

  r.micro_precision = r.total_pred > 0 ? static_cast<double>(r.total_matched) /
                                             static_cast<double>(r.total_pred)
                                       : 1.0;
  r.micro_recall = r.total_gold > 0 ? static_cast<double>(r.total_matched) /
                                          static_cast<double>(r.total_gold)
                                    : 1.0;

  const std::int64_t total_false = r.total_pred - r.total_matched;
  r.false_error_mean_per_doc = static_cast<double>(total_false) / n;
  if (r.total_pred > 0) {
    r.false_error_pct_of_pred =
        static_cast<double>(total_false) / static_cast<double>(r.total_pred);
  } else {
    r.false_error_pct_of_pred = 0.0;
    r.flags.push_back("noPredictedErrors");
  }

  r.ci_precision = detail::interval_or_point(ps, cfg);
  r.ci_recall = detail::interval_or_point(rs, cfg);
  r.ci_f1 = detail::interval_or_point(f1s, cfg);
  if (scores.size() < 2) r.flags.push_back("singleDocumentCI");

  r.scores = std::move(scores);
  return r;
}

// ---------------------------------------------------------------------------
// JSON serialization (full precision; keys sorted by nlohmann's object order)

inline nlohmann::json ci_to_json(const ConfidenceInterval& ci) {
  nlohmann::json j;
  j["lower"] = ci.lower;
  j["upper"] = ci.upper;
  j["level"] = ci.level;
  j["method"] = ci.method_name();
  j["n_resamples"] = ci.n_resamples;
  j["seed"] = ci.seed;
  if (!ci.warning.empty()) j["warning"] = ci.warning;
  return j;
}

inline ConfidenceInterval ci_from_json(const nlohmann::json& j) {
  ConfidenceInterval ci;
  ci.lower = j.at("lower").get<double>();
  ci.upper = j.at("upper").get<double>();
  ci.level = j.at("level").get<double>();
  ci.method = j.at("method").get<std::string>() == "bca"
                  ? ConfidenceInterval::Method::bca
                  : ConfidenceInterval::Method::percentile_fallback;
  ci.n_resamples = j.at("n_resamples").get<int>();
  ci.seed = j.at("seed").get<std::uint64_t>();
  ci.warning = j.value("warning", std::string());
  return ci;
}

inline nlohmann::json report_to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["config_fingerprint"] = r.config_fingerprint;
  j["totals"] = {{"n_docs", r.scores.size()},
                 {"gold", r.total_gold},
                 {"pred", r.total_pred},
                 {"matched", r.total_matched},
                 {"label_correct", r.total_label_correct}};
  j["macro"] = {{"precision", r.macro_precision},
                {"recall", r.macro_recall},
                {"f1", r.macro_f1}};
  j["micro"] = {{"precision", r.micro_precision}, {"recall", r.micro_recall}};
  j["ci"] = {{"precision", ci_to_json(r.ci_precision)},
             {"recall", ci_to_json(r.ci_recall)},
             {"f1", ci_to_json(r.ci_f1)}};
  j["label_accuracy"] = {{"pooled", r.pct_correctly_labeled},
                         {"macro_over_docs_with_matches", r.label_accuracy_macro},
                         {"docs_with_matches", r.label_accuracy_macro_docs}};
  j["false_errors"] = {{"mean_per_doc", r.false_error_mean_per_doc},
                       {"min", r.false_error_min},
                       {"max", r.false_error_max},
                       {"pct_of_pred", r.false_error_pct_of_pred}};
  j["flags"] = r.flags;
  auto docs = nlohmann::json::array();
  for (const auto& s : r.scores) {
    nlohmann::json d;
    d["doc_id"] = s.doc_id;
    d["n_gold"] = s.n_gold;
    d["n_pred"] = s.n_pred;
    d["n_matched"] = s.n_matched;
    d["n_label_correct"] = s.n_label_correct;
    d["n_false"] = s.n_false;
    d["precision"] = s.precision;
    d["recall"] = s.recall;
    d["f1"] = s.f1;
    d["degenerate_flags"] = s.degenerate_flags;
    docs.push_back(std::move(d));
  }
  j["documents"] = std::move(docs);
  return j;
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
  EvaluationReport r;
  r.config_fingerprint = j.value("config_fingerprint", std::string());
  r.total_gold = j.at("totals").at("gold").get<std::int64_t>();
  r.total_pred = j.at("totals").at("pred").get<std::int64_t>();
  r.total_matched = j.at("totals").at("matched").get<std::int64_t>();
  r.total_label_correct = j.at("totals").at("label_correct").get<std::int64_t>();
  r.macro_precision = j.at("macro").at("precision").get<double>();
  r.macro_recall = j.at("macro").at("recall").get<double>();
  r.macro_f1 = j.at("macro").at("f1").get<double>();
  if (j.contains("micro")) {
    r.micro_precision = j.at("micro").at("precision").get<double>();
    r.micro_recall = j.at("micro").at("recall").get<double>();
  }
  r.ci_precision = ci_from_json(j.at("ci").at("precision"));
  r.ci_recall = ci_from_json(j.at("ci").at("recall"));
  r.ci_f1 = ci_from_json(j.at("ci").at("f1"));
  r.pct_correctly_labeled = j.at("label_accuracy").at("pooled").get<double>();
  r.label_accuracy_macro = j.at("label_accuracy").at("macro_over_docs_with_matches").get<double>();
  r.label_accuracy_macro_docs = j.at("label_accuracy").at("docs_with_matches").get<std::int64_t>();
  r.false_error_mean_per_doc = j.at("false_errors").at("mean_per_doc").get<double>();
  r.false_error_min = j.at("false_errors").at("min").get<std::int64_t>();
  r.false_error_max = j.at("false_errors").at("max").get<std::int64_t>();
  r.false_error_pct_of_pred = j.at("false_errors").at("pct_of_pred").get<double>();
  for (const auto& f : j.value("flags", nlohmann::json::array())) r.flags.push_back(f.get<std::string>());
  for (const auto& d : j.at("documents")) {
    DocumentScore s;
    s.doc_id = d.at("doc_id").get<std::string>();
    s.n_gold = d.at("n_gold").get<int>();
    s.n_pred = d.at("n_pred").get<int>();
    s.n_matched = d.at("n_matched").get<int>();
    s.n_label_correct = d.at("n_label_correct").get<int>();
    s.n_false = d.at("n_false").get<int>();
    s.precision = d.at("precision").get<double>();
    s.recall = d.at("recall").get<double>();
    s.f1 = d.at("f1").get<double>();
    for (const auto& f : d.value("degenerate_flags", nlohmann::json::array()))
      s.degenerate_flags.push_back(f.get<std::string>());
    r.scores.push_back(std::move(s));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Run comparison

struct MetricDelta {
  std::string name;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;  // b - a
};

struct DocDelta {
  std::string doc_id;
  double d_precision = 0.0;
  double d_recall = 0.0;
  double d_f1 = 0.0;
  int d_pred = 0;
  int d_matched = 0;
  int d_label_correct = 0;
  int d_false = 0;
};

struct RunDiff {
  std::vector<MetricDelta> metrics;    // fixed, deterministic order
  std::vector<DocDelta> documents;     // sorted by doc_id

  bool identical() const {
    for (const auto& m : metrics)
      if (m.delta != 0.0) return false;
    for (const auto& d : documents)
      if (d.d_precision != 0.0 || d.d_recall != 0.0 || d.d_f1 != 0.0 || d.d_pred != 0 ||
          d.d_matched != 0 || d.d_label_correct != 0 || d.d_false != 0)
        return false;
    return true;
  }
};

inline RunDiff compare_runs(const EvaluationReport& a, const EvaluationReport& b) {
  std::set<std::string> ids_a, ids_b;
  for (const auto& s : a.scores) ids_a.insert(s.doc_id);
  for (const auto& s : b.scores) ids_b.insert(s.doc_id);
  if (ids_a != ids_b) {
    std::string offenders;
    for (const auto& id : ids_a)
      if (!ids_b.count(id)) offenders += (offenders.empty() ? "" : ",") + id + "(a-only)";
    for (const auto& id : ids_b)
      if (!ids_a.count(id)) offenders += (offenders.empty() ? "" : ",") + id + "(b-only)";
    throw Error(ErrorCode::DocSetMismatch, "reports cover different documents")
        .with("offenders", offenders);
  }

  RunDiff diff;
  auto add = [&](const std::string& name, double va, double vb) {
    diff.metrics.push_back({name, va, vb, vb - va});
  };
  add("macro_precision", a.macro_precision, b.macro_precision);
  add("macro_recall", a.macro_recall, b.macro_recall);
  add("macro_f1", a.macro_f1, b.macro_f1);
  add("pct_correctly_labeled", a.pct_correctly_labeled, b.pct_correctly_labeled);
  add("false_error_mean_per_doc", a.false_error_mean_per_doc, b.false_error_mean_per_doc);
  add("false_error_pct_of_pred", a.false_error_pct_of_pred, b.false_error_pct_of_pred);
  add("total_pred", static_cast<double>(a.total_pred), static_cast<double>(b.total_pred));

  auto by_id = [](const EvaluationReport& r) {
    std::map<std::string, const DocumentScore*> m;
    for (const auto& s : r.scores) m[s.doc_id] = &s;
    return m;
  };
  auto ma = by_id(a), mb = by_id(b);
  for (const auto& [id, sa] : ma) {
    const DocumentScore* sb = mb.at(id);
    DocDelta d;
    d.doc_id = id;
    d.d_precision = sb->precision - sa->precision;
    d.d_recall = sb->recall - sa->recall;
    d.d_f1 = sb->f1 - sa->f1;
    d.d_pred = sb->n_pred - sa->n_pred;
    d.d_matched = sb->n_matched - sa->n_matched;
    d.d_label_correct = sb->n_label_correct - sa->n_label_correct;
    d.d_false = sb->n_false - sa->n_false;
    diff.documents.push_back(d);
  }
  return diff;
}

}  // namespace annoteval
