#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "annoteval/corpus.hpp"
#include "annoteval/matching.hpp"
#include "annoteval/metrics.hpp"
#include "annoteval/typology.hpp"

// Whole pipeline for one run: anchor predictions, match spans, score each
// document, aggregate, bootstrap the intervals. Documents are processed in
// sorted doc_id order, so the report is independent of input order.

namespace annoteval {

struct EvalOptions {
  CiConfig ci;
  bool with_trace = false;
};

struct DocEvaluation {
  std::string doc_id;
  std::vector<PredictedAnnotation> anchored;
  MatchResult match;
  DocumentScore score;
  MatchTrace trace;
};

inline std::string make_config_fingerprint(const CiConfig& ci) {
  std::ostringstream os;
  os << "match=max-cardinality,max-overlap,lex-pairs;anchor=exact,normalized;"
     << "labels=pooled;z0-ties=half;quantile=linear;ci=bca;b=" << ci.n_resamples
     << ";seed=" << ci.seed << ";level=" << ci.level;
  return os.str();
}

struct EvaluationRun {
  EvaluationReport report;
  std::vector<DocEvaluation> docs;  // sorted by doc_id
};

inline EvaluationRun run_evaluation(const std::vector<AnnotatedDocument>& docs,
                                    const std::vector<PredictedAnnotation>& predictions,
                                    const Typology& typology, const EvalOptions& options) {
  std::map<std::string, const AnnotatedDocument*> by_id;
  for (const auto& d : docs) by_id[d.doc_id] = &d;

  std::map<std::string, std::vector<PredictedAnnotation>> grouped;
  std::string offenders;
  for (const auto& p : predictions) {
    if (!by_id.count(p.doc_id)) {
      if (offenders.find(p.doc_id) == std::string::npos)
        offenders += (offenders.empty() ? "" : ",") + p.doc_id;
      continue;
    }
    grouped[p.doc_id].push_back(p);
  }
  if (!offenders.empty())
    throw Error(ErrorCode::DocSetMismatch, "predictions reference unknown documents")
        .with("offenders", offenders);

  EvaluationRun run;
  std::vector<DocumentScore> scores;
  for (const auto& [doc_id, doc] : by_id) {
    DocEvaluation ev;
    ev.doc_id = doc_id;
    auto it = grouped.find(doc_id);
    static const std::vector<PredictedAnnotation> kNone;
    const auto& raw = it == grouped.end() ? kNone : it->second;
    ev.anchored = anchor_predictions(*doc, raw);
    ev.match = match_document(doc->reference_errors, ev.anchored, typology,
                              options.with_trace ? &ev.trace : nullptr);
    ev.score = score_document(doc_id, ev.match);
    scores.push_back(ev.score);
    run.docs.push_back(std::move(ev));
  }
  run.report = aggregate(std::move(scores), options.ci, make_config_fingerprint(options.ci));
  return run;
}

inline std::string render_match_trace(const EvaluationRun& run) {
  std::ostringstream os;
  for (const auto& ev : run.docs) {
    os << "doc " << ev.doc_id << ": cardinality=" << ev.trace.best_cardinality
       << " total_overlap=" << ev.trace.best_overlap << "\n";
    for (const auto& s : ev.trace.steps)
      os << "  candidate (ref=" << s.ref << ", pred=" << s.pred << ") overlap=" << s.overlap
         << (s.kept ? " -> kept" : " -> rejected (would lose optimum)") << "\n";
    for (int r : ev.match.unmatched_refs) os << "  missed ref " << r << "\n";
    for (int p : ev.match.unmatched_preds) os << "  false error pred " << p << "\n";
  }
  return os.str();
}

}  // namespace annoteval
