#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "annoteval/error.hpp"
#include "annoteval/io.hpp"
#include "annoteval/span.hpp"
#include "annoteval/text.hpp"
#include "annoteval/typology.hpp"

// Documents, reference annotations and predicted annotations. Reference
// annotations are standoff: code-point offsets into an untouched target text.

namespace annoteval {

struct ReferenceError {
  Span span;
  std::vector<std::string> labels;  // canonical codes, resolution checked at parse

  bool operator==(const ReferenceError&) const = default;
};

struct SentenceAlign {
  std::optional<Span> source;
  Span target;

  bool operator==(const SentenceAlign&) const = default;
};

struct AnnotatedDocument {
  std::string doc_id;
  std::string mt_system;  // "DeepL", "ChatGPT" or any other system name
  std::u32string source_text;
  std::u32string target_text;
  std::vector<SentenceAlign> sentences;
  std::vector<ReferenceError> reference_errors;

  bool operator==(const AnnotatedDocument&) const = default;

  std::u32string_view target_slice(Span s) const {
    return std::u32string_view(target_text)
        .substr(static_cast<std::size_t>(s.start), static_cast<std::size_t>(s.length()));
  }
};

enum class AnchorStatus { exact, normalized, unanchored };

inline const char* anchor_status_name(AnchorStatus s) {
  switch (s) {
    case AnchorStatus::exact: return "exact";
    case AnchorStatus::normalized: return "normalized";
    case AnchorStatus::unanchored: return "unanchored";
  }
  return "?";
}

struct PredictedAnnotation {
  std::string doc_id;
  std::optional<int> sentence_index;  // 0-based
  std::string surface;                // as emitted by the annotator (UTF-8)
  std::string label;                  // raw single label, resolved later
  std::string explanation;
  std::optional<Span> anchor;
  AnchorStatus anchor_status = AnchorStatus::unanchored;

  bool operator==(const PredictedAnnotation&) const = default;
};

struct CorpusStats {
  std::int64_t n_docs = 0;
  std::int64_t n_errors = 0;
  double mean_errors_per_doc = 0.0;
  std::int64_t span_len_min = 0;
  std::int64_t span_len_max = 0;
  double span_len_mean = 0.0;
  std::int64_t labels_per_error_min = 0;
  std::int64_t labels_per_error_max = 0;
  double labels_per_error_mean = 0.0;
  std::int64_t n_words = 0;  // whitespace tokens in target texts
};

// ---------------------------------------------------------------------------
// Sentence splitting

/// Split after '.', '!', '?' or '…' when followed by whitespace and an
/// uppercase letter, or at end of text. "e.g.", "i.e.", "cf." and "etc." do
/// not end a sentence. Returned spans are trimmed of surrounding whitespace.
inline std::vector<Span> split_sentences(std::u32string_view text) {
  std::vector<Span> out;
  const std::size_t n = text.size();

  auto is_terminal = [](char32_t cp) {
    return cp == U'.' || cp == U'!' || cp == U'?' || cp == 0x2026;
  };
  auto is_abbrev_dot = [&](std::size_t i) {
    if (text[i] != U'.') return false;
    // Token of letters and dots ending at this '.' (inclusive).
    std::size_t b = i;
    while (b > 0) {
      char32_t cp = text[b - 1];
      bool letter = (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') ||
                    (cp >= 0x00C0 && cp <= 0x024F);
      if (!letter && cp != U'.') break;
      --b;
    }
    std::u32string tok;
    for (std::size_t k = b; k <= i; ++k) tok.push_back(to_lower_cp(text[k]));
    return tok == U"e.g." || tok == U"i.e." || tok == U"cf." || tok == U"etc.";
  };

  auto emit = [&](std::size_t from, std::size_t to) {
    while (from < to && is_space_cp(text[from])) ++from;
    while (to > from && is_space_cp(text[to - 1])) --to;
    if (from < to)
      out.push_back({static_cast<std::int64_t>(from), static_cast<std::int64_t>(to)});
  };

  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_terminal(text[i])) continue;
    if (is_abbrev_dot(i)) continue;
    std::size_t j = i + 1;
    if (j == n) continue;  // final sentence emitted below
    if (!is_space_cp(text[j])) continue;
    while (j < n && is_space_cp(text[j])) ++j;
    if (j < n && !is_upper_cp(text[j])) continue;
    emit(start, i + 1);
    start = j;
  }
  emit(start, n);
  return out;
}

// ---------------------------------------------------------------------------
// Document parsing and serialization

namespace detail {

inline Span parse_span_json(const nlohmann::json& j) {
  if (j.is_array() && j.size() == 2)
    return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
  throw Error(ErrorCode::BadFormat, "span must be a [start, end] pair");
}

inline void validate_sentences(const AnnotatedDocument& doc) {
  const auto len = static_cast<std::int64_t>(doc.target_text.size());
  std::int64_t prev_end = -1;
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    Span t = doc.sentences[i].target;
    if (t.start < 0 || t.end > len || t.end <= t.start)
      throw Error(ErrorCode::InvalidSpan, "sentence span out of bounds")
          .with("doc", doc.doc_id)
          .with("kind", "sentence")
          .with("index", static_cast<long long>(i));
    if (t.start < prev_end)
      throw Error(ErrorCode::InvalidSpan, "sentence spans overlap or are out of order")
          .with("doc", doc.doc_id)
          .with("kind", "sentence")
          .with("index", static_cast<long long>(i));
    prev_end = t.end;
  }
  // Every non-whitespace code point must be inside some sentence.
  std::size_t s = 0;
  for (std::size_t i = 0; i < doc.target_text.size(); ++i) {
    if (is_space_cp(doc.target_text[i])) continue;
    while (s < doc.sentences.size() &&
           doc.sentences[s].target.end <= static_cast<std::int64_t>(i))
      ++s;
    if (s == doc.sentences.size() ||
        doc.sentences[s].target.start > static_cast<std::int64_t>(i))
      throw Error(ErrorCode::InvalidSpan, "sentence spans do not cover all text")
          .with("doc", doc.doc_id)
          .with("kind", "sentence")
          .with("offset", static_cast<long long>(i));
  }
}

}  // namespace detail

inline AnnotatedDocument parse_document(const nlohmann::json& j, const Typology& typology) {
  if (!j.is_object())
    throw Error(ErrorCode::BadFormat, "document must be a JSON object");
  AnnotatedDocument doc;
  try {
    doc.doc_id = j.at("doc_id").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::BadFormat, "document lacks doc_id");
  }
  doc.mt_system = j.value("mt_system", std::string("other"));
  doc.source_text = decode_utf8(j.value("source_text", std::string()));
  if (!j.contains("target_text"))
    throw Error(ErrorCode::BadFormat, "document lacks target_text").with("doc", doc.doc_id);
  doc.target_text = decode_utf8(j.at("target_text").get<std::string>());

  if (j.contains("sentences") && !j.at("sentences").is_null()) {
    for (const auto& s : j.at("sentences")) {
      SentenceAlign a;
      if (s.is_object()) {
        a.target = detail::parse_span_json(s.at("target"));
        if (s.contains("source")) a.source = detail::parse_span_json(s.at("source"));
      } else {
        a.target = detail::parse_span_json(s);
      }
      doc.sentences.push_back(a);
    }
  } else {
    for (Span t : split_sentences(doc.target_text)) doc.sentences.push_back({std::nullopt, t});
  }
  detail::validate_sentences(doc);

  const auto len = static_cast<std::int64_t>(doc.target_text.size());
  if (j.contains("errors")) {
    std::size_t index = 0;
    for (const auto& e : j.at("errors")) {
      ReferenceError r;
      r.span.start = e.at("start").get<std::int64_t>();
      r.span.end = e.at("end").get<std::int64_t>();
      if (r.span.start < 0 || r.span.end > len || r.span.end <= r.span.start)
        throw Error(ErrorCode::InvalidSpan, "error span out of bounds")
            .with("doc", doc.doc_id)
            .with("index", static_cast<long long>(index));
      if (!e.contains("labels") || e.at("labels").empty())
        throw Error(ErrorCode::BadFormat, "error has no labels")
            .with("doc", doc.doc_id)
            .with("index", static_cast<long long>(index));
      for (const auto& l : e.at("labels")) {
        auto canon = typology.canonical_code(l.get<std::string>());
        if (!canon)
          throw Error(ErrorCode::UnknownLabel, "label does not resolve in typology")
              .with("doc", doc.doc_id)
              .with("label", l.get<std::string>());
        if (std::find(r.labels.begin(), r.labels.end(), *canon) == r.labels.end())
          r.labels.push_back(*canon);
      }
      doc.reference_errors.push_back(std::move(r));
      ++index;
    }
  }
  std::stable_sort(doc.reference_errors.begin(), doc.reference_errors.end(),
                   [](const ReferenceError& a, const ReferenceError& b) { return a.span < b.span; });
  for (std::size_t i = 1; i < doc.reference_errors.size(); ++i)
    if (doc.reference_errors[i].span == doc.reference_errors[i - 1].span)
      throw Error(ErrorCode::DuplicateError, "two reference errors share the same span")
          .with("doc", doc.doc_id)
          .with("index", static_cast<long long>(i));
  return doc;
}

inline nlohmann::json document_to_json(const AnnotatedDocument& doc) {
  nlohmann::json j;
  j["doc_id"] = doc.doc_id;
  j["mt_system"] = doc.mt_system;
  j["source_text"] = encode_utf8(doc.source_text);
  j["target_text"] = encode_utf8(doc.target_text);
  auto sents = nlohmann::json::array();
  for (const auto& s : doc.sentences) {
    if (s.source) {
      nlohmann::json o;
      o["source"] = {s.source->start, s.source->end};
      o["target"] = {s.target.start, s.target.end};
      sents.push_back(std::move(o));
    } else {
      sents.push_back({s.target.start, s.target.end});
    }
  }
  j["sentences"] = std::move(sents);
  auto errs = nlohmann::json::array();
  for (const auto& e : doc.reference_errors) {
    nlohmann::json o;
    o["start"] = e.span.start;
    o["end"] = e.span.end;
    o["labels"] = e.labels;
    errs.push_back(std::move(o));
  }
  j["errors"] = std::move(errs);
  return j;
}

/// Load a corpus from a single JSON file (one document or an array of them)
/// or from a directory of *.json files. Documents are returned sorted by
/// doc_id; duplicate ids are rejected.
inline std::vector<AnnotatedDocument> parse_reference_corpus(
    const std::filesystem::path& path, const Typology& typology) {
  namespace fs = std::filesystem;
  std::vector<AnnotatedDocument> docs;
  auto take = [&](const nlohmann::json& j) {
    if (j.is_array())
      for (const auto& d : j) docs.push_back(parse_document(d, typology));
    else
      docs.push_back(parse_document(j, typology));
  };
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".json")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) take(read_json(f));
  } else if (fs::exists(path)) {
    take(read_json(path));
  } else {
    throw Error(ErrorCode::IoError, "corpus path does not exist").with("path", path.string());
  }
  std::sort(docs.begin(), docs.end(),
            [](const AnnotatedDocument& a, const AnnotatedDocument& b) { return a.doc_id < b.doc_id; });
  for (std::size_t i = 1; i < docs.size(); ++i)
    if (docs[i].doc_id == docs[i - 1].doc_id)
      throw Error(ErrorCode::BadFormat, "duplicate doc_id in corpus").with("doc", docs[i].doc_id);
  return docs;
}

// ---------------------------------------------------------------------------
// Corpus statistics

inline CorpusStats corpus_stats(const std::vector<const AnnotatedDocument*>& docs) {
  if (docs.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no documents");
  CorpusStats st;
  st.n_docs = static_cast<std::int64_t>(docs.size());
  std::int64_t span_sum = 0, label_sum = 0;
  bool first = true;
  for (const AnnotatedDocument* doc : docs) {
    st.n_words += static_cast<std::int64_t>(count_words(doc->target_text));
    for (const auto& e : doc->reference_errors) {
      ++st.n_errors;
      const std::int64_t len = e.span.length();
      const auto nl = static_cast<std::int64_t>(e.labels.size());
      span_sum += len;
      label_sum += nl;
      if (first) {
        st.span_len_min = st.span_len_max = len;
        st.labels_per_error_min = st.labels_per_error_max = nl;
        first = false;
      } else {
        st.span_len_min = std::min(st.span_len_min, len);
        st.span_len_max = std::max(st.span_len_max, len);
        st.labels_per_error_min = std::min(st.labels_per_error_min, nl);
        st.labels_per_error_max = std::max(st.labels_per_error_max, nl);
      }
    }
  }
  st.mean_errors_per_doc = static_cast<double>(st.n_errors) / static_cast<double>(st.n_docs);
  if (st.n_errors > 0) {
    st.span_len_mean = static_cast<double>(span_sum) / static_cast<double>(st.n_errors);
    st.labels_per_error_mean = static_cast<double>(label_sum) / static_cast<double>(st.n_errors);
  }
  return st;
}

inline CorpusStats corpus_stats(const std::vector<AnnotatedDocument>& docs) {
  std::vector<const AnnotatedDocument*> ptrs;
  ptrs.reserve(docs.size());
  for (const auto& d : docs) ptrs.push_back(&d);
  return corpus_stats(ptrs);
}

inline nlohmann::json stats_to_json(const CorpusStats& st) {
  nlohmann::json j;
  j["n_docs"] = st.n_docs;
  j["n_errors"] = st.n_errors;
  j["mean_errors_per_doc"] = st.mean_errors_per_doc;
  j["span_len_min"] = st.span_len_min;
  j["span_len_max"] = st.span_len_max;
  j["span_len_mean"] = st.span_len_mean;
  j["labels_per_error_min"] = st.labels_per_error_min;
  j["labels_per_error_max"] = st.labels_per_error_max;
  j["labels_per_error_mean"] = st.labels_per_error_mean;
  j["n_words"] = st.n_words;
  return j;
}

// ---------------------------------------------------------------------------
// Predicted annotations: TSV and JSON forms

inline std::vector<PredictedAnnotation> parse_predictions_tsv(std::string_view content) {
  std::vector<PredictedAnnotation> preds;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto split_tabs = [](std::string_view line) {
    std::vector<std::string> cells;
    std::size_t p = 0;
    while (true) {
      std::size_t t = line.find('\t', p);
      if (t == std::string_view::npos) {
        cells.emplace_back(line.substr(p));
        break;
      }
      cells.emplace_back(line.substr(p, t - p));
      p = t + 1;
    }
    return cells;
  };
  while (pos <= content.size()) {
    std::size_t nl = content.find('\n', pos);
    std::string_view line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (header.empty()) {
      header = cells;
      for (auto& h : header) {
        for (auto& c : h) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      continue;
    }
    PredictedAnnotation p;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) {
      const std::string& key = header[i];
      const std::string& val = cells[i];
      if (key == "doc_id") {
        p.doc_id = val;
      } else if (key == "sentence_index") {
        if (!val.empty()) {
          try {
            p.sentence_index = std::stoi(val);
          } catch (const std::exception&) {
            throw Error(ErrorCode::BadFormat, "sentence_index is not an integer")
                .with("line", static_cast<long long>(line_no));
          }
        }
      } else if (key == "surface") {
        p.surface = val;
      } else if (key == "label") {
        p.label = val;
      } else if (key == "explanation") {
        p.explanation = val;
      }
    }
    if (p.doc_id.empty() || p.surface.empty() || p.label.empty())
      throw Error(ErrorCode::BadFormat, "prediction row lacks doc_id, surface or label")
          .with("line", static_cast<long long>(line_no));
    preds.push_back(std::move(p));
  }
  if (header.empty())
    throw Error(ErrorCode::BadFormat, "predictions file has no header row");
  return preds;
}

inline std::vector<PredictedAnnotation> parse_predictions_json(const nlohmann::json& j) {
  if (!j.is_array())
    throw Error(ErrorCode::BadFormat, "structured predictions must be an array");
  std::vector<PredictedAnnotation> preds;
  for (const auto& o : j) {
    PredictedAnnotation p;
    p.doc_id = o.at("doc_id").get<std::string>();
    if (o.contains("sentence_index") && !o.at("sentence_index").is_null())
      p.sentence_index = o.at("sentence_index").get<int>();
    p.surface = o.at("surface").get<std::string>();
    p.label = o.at("label").get<std::string>();
    p.explanation = o.value("explanation", std::string());
    preds.push_back(std::move(p));
  }
  return preds;
}

inline std::vector<PredictedAnnotation> load_predictions(const std::filesystem::path& path) {
  if (path.extension() == ".json") return parse_predictions_json(read_json(path));
  return parse_predictions_tsv(read_file(path));
}

inline std::string render_predictions_tsv(const std::vector<PredictedAnnotation>& preds) {
  auto clean = [](std::string_view s) {
    std::string out(s);
    for (auto& c : out)
      if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    return out;
  };
  std::string out = "doc_id\tsentence_index\tsurface\tlabel\texplanation\n";
  for (const auto& p : preds) {
    out += clean(p.doc_id);
    out += '\t';
    if (p.sentence_index) out += std::to_string(*p.sentence_index);
    out += '\t';
    out += clean(p.surface);
    out += '\t';
    out += clean(p.label);
    out += '\t';
    out += clean(p.explanation);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inline importer: "[span text]{CODE, CODE}" markup to standoff annotations

struct InlineImport {
  std::u32string target_text;
  std::vector<std::pair<Span, std::vector<std::string>>> errors;  // raw labels
};

/// Best effort converter for inline-annotated text. A '[' opens an error span
/// if the matching ']' is directly followed by '{codes}'; otherwise brackets
/// are kept literally. "\[" escapes a literal bracket. Nesting is not
/// supported.
inline InlineImport import_inline(std::u32string_view marked) {
  InlineImport out;
  const std::size_t n = marked.size();
  std::size_t i = 0;
  while (i < n) {
    char32_t cp = marked[i];
    if (cp == U'\\' && i + 1 < n && (marked[i + 1] == U'[' || marked[i + 1] == U']')) {
      out.target_text.push_back(marked[i + 1]);
      i += 2;
      continue;
    }
    if (cp == U'[') {
      std::size_t close = marked.find(U']', i + 1);
      if (close != std::u32string_view::npos && close + 1 < n && marked[close + 1] == U'{') {
        std::size_t brace = marked.find(U'}', close + 2);
        if (brace != std::u32string_view::npos) {
          Span span{static_cast<std::int64_t>(out.target_text.size()), 0};
          out.target_text.append(marked.substr(i + 1, close - i - 1));
          span.end = static_cast<std::int64_t>(out.target_text.size());
          std::vector<std::string> labels;
          std::string code;
          for (std::size_t k = close + 2; k <= brace; ++k) {
            if (k == brace || marked[k] == U',') {
              std::string norm = normalize_code(code);
              if (!norm.empty()) labels.push_back(norm);
              code.clear();
            } else {
              append_utf8(code, marked[k]);
            }
          }
          if (span.end > span.start && !labels.empty())
            out.errors.emplace_back(span, std::move(labels));
          i = brace + 1;
          continue;
        }
      }
    }
    out.target_text.push_back(cp);
    ++i;
  }
  return out;
}

inline AnnotatedDocument document_from_inline(const std::string& doc_id,
                                              const std::string& mt_system,
                                              std::string_view source_utf8,
                                              std::string_view marked_target_utf8,
                                              const Typology& typology) {
  InlineImport imp = import_inline(decode_utf8(marked_target_utf8));
  nlohmann::json j;
  j["doc_id"] = doc_id;
  j["mt_system"] = mt_system;
  j["source_text"] = std::string(source_utf8);
  j["target_text"] = encode_utf8(imp.target_text);
  auto errs = nlohmann::json::array();
  for (const auto& [span, labels] : imp.errors) {
    nlohmann::json o;
    o["start"] = span.start;
    o["end"] = span.end;
    o["labels"] = labels;
    errs.push_back(std::move(o));
  }
  j["errors"] = std::move(errs);
  return parse_document(j, typology);
}

// ---------------------------------------------------------------------------
// Anchoring: attach character spans to predicted surface strings

namespace detail {

inline std::optional<Span> find_unclaimed(std::u32string_view hay, std::u32string_view needle,
                                          std::int64_t base, const std::set<Span>& claimed) {
  if (needle.empty() || needle.size() > hay.size()) return std::nullopt;
  std::size_t from = 0;
  while (true) {
    std::size_t at = hay.find(needle, from);
    if (at == std::u32string_view::npos) return std::nullopt;
    Span s{base + static_cast<std::int64_t>(at),
           base + static_cast<std::int64_t>(at + needle.size())};
    if (!claimed.count(s)) return s;
    from = at + 1;
  }
}

inline std::optional<Span> find_normalized(const NormalizedText& hay, std::u32string_view needle,
                                           const std::set<Span>& claimed) {
  if (needle.empty() || needle.size() > hay.text.size()) return std::nullopt;
  std::size_t from = 0;
  while (true) {
    std::size_t at = std::u32string_view(hay.text).find(needle, from);
    if (at == std::u32string_view::npos) return std::nullopt;
    Span s{static_cast<std::int64_t>(hay.origin[at].first),
           static_cast<std::int64_t>(hay.origin[at + needle.size() - 1].second)};
    if (!claimed.count(s)) return s;
    from = at + 1;
  }
}

/// Normalize a predicted surface: fold + collapse whitespace, trim, then strip
/// trailing sentence punctuation.
inline std::u32string normalize_surface(std::u32string_view surface) {
  std::u32string norm = NormalizedText::build(surface).text;
  while (!norm.empty() && norm.front() == U' ') norm.erase(norm.begin());
  while (!norm.empty() && (norm.back() == U' ' || is_sentence_punct_cp(norm.back())))
    norm.pop_back();
  return norm;
}

}  // namespace detail

/// Resolution ladder per prediction, in input order: exact leftmost unclaimed
/// occurrence, then normalized match, else unanchored. Scope is the sentence
/// at sentence_index when given, the whole target text otherwise.
inline std::vector<PredictedAnnotation> anchor_predictions(
    const AnnotatedDocument& doc, const std::vector<PredictedAnnotation>& preds) {
  std::vector<PredictedAnnotation> out;
  out.reserve(preds.size());
  std::set<Span> claimed;
  NormalizedText whole_norm = NormalizedText::build(doc.target_text);

  for (const PredictedAnnotation& in : preds) {
    if (in.doc_id != doc.doc_id)
      throw Error(ErrorCode::DocSetMismatch, "prediction references another document")
          .with("doc", doc.doc_id)
          .with("prediction_doc", in.doc_id);
    PredictedAnnotation p = in;
    p.anchor.reset();
    p.anchor_status = AnchorStatus::unanchored;

    std::u32string_view scope = doc.target_text;
    std::int64_t base = 0;
    if (p.sentence_index) {
      const int si = *p.sentence_index;
      if (si < 0 || static_cast<std::size_t>(si) >= doc.sentences.size())
        throw Error(ErrorCode::InvalidSentenceIndex, "sentence index out of range")
            .with("doc", doc.doc_id)
            .with("sentence_index", static_cast<long long>(si));
      Span t = doc.sentences[static_cast<std::size_t>(si)].target;
      scope = doc.target_slice(t);
      base = t.start;
    }

    std::u32string surface = decode_utf8(p.surface);
    if (auto s = detail::find_unclaimed(scope, surface, base, claimed)) {
      p.anchor = *s;
      p.anchor_status = AnchorStatus::exact;
    } else {
      std::u32string norm_surface = detail::normalize_surface(surface);
      std::optional<Span> hit;
      if (p.sentence_index) {
        NormalizedText scoped = NormalizedText::build(scope, static_cast<std::size_t>(base));
        hit = detail::find_normalized(scoped, norm_surface, claimed);
      } else {
        hit = detail::find_normalized(whole_norm, norm_surface, claimed);
      }
      if (hit) {
        p.anchor = *hit;
        p.anchor_status = AnchorStatus::normalized;
      }
    }
    if (p.anchor) claimed.insert(*p.anchor);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace annoteval
