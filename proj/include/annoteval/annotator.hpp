#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "annoteval/corpus.hpp"
#include "annoteval/error.hpp"
#include "annoteval/io.hpp"
#include "annoteval/text.hpp"
#include "annoteval/typology.hpp"

// Prompt-chained annotation workflow: four sequential prompts inside one
// conversation (task instructions, typology, text to annotate, conversion of
// the annotations into a table), transcript persistence, and a tolerant
// parser for the model's final table. Replay of stored transcripts gives a
// fully offline, deterministic path through the same code.

namespace annoteval {

enum class PromptVariant { long_prompt, short_prompt };

inline const char* variant_name(PromptVariant v) {
  return v == PromptVariant::long_prompt ? "long" : "short";
}

struct PromptChain {
  std::vector<std::string> steps;  // user messages, sent in order
  PromptVariant variant = PromptVariant::long_prompt;
  std::string language = "fr";
  std::string manual_path;  // opaque attachment, referenced by step 1
};

namespace prompts {

inline constexpr const char* kStep1 =
    "Tâche : annoter une traduction\n"
    "Objectif : repérer des erreurs sur la base d’une typologie d’erreurs que je te fournis.\n"
    "Type de texte : résumé d’article scientifique dans le domaine du TAL\n"
    "Fichier joint : MANUEL D’ANNOTATION, qui contient des explications plus détaillées et des "
    "exemples des types d’erreurs que je vais te fournir ci-dessous.\n"
    "Présentation de la sortie :\n"
    "- 1re phrase source\n"
    "- 1re phrase cible dans la traduction\n"
    "- liste les erreurs\n"
    "Etc. jusqu’à la fin de la traduction\n"
    "---------------\n"
    "Je vais te donner la typologie d’erreurs.";

inline constexpr const char* kStep2Preamble =
    "Typologie d’erreurs à suivre méticuleusement : veille à utiliser les types d’erreurs "
    "présents et n’en invente aucun. De même, respecte les codes liés à chaque type d’erreur "
    "à la lettre ; ne prends donc aucune liberté.\n"
    "Explication de la typologie : elle est divisée en 3 grandes catégories d’erreurs : les erreurs "
    "de transfert de contenu (erreurs altérant le sens du message ou entravant sa compréhension), les "
    "erreurs de langue, et les erreurs liées aux outils ou à leur maîtrise.\n"
    "Voici la typologie :\n";

inline constexpr const char* kStep2Trailer =
    "-----------\n"
    "- Prête attention à tous les aspects, autant le transfert de contenu que la langue et la "
    "terminologie et les erreurs liées aux outils.\n"
    "- Si tu as besoin d’exemples, réfère toi au manuel d’annotation en pièce jointe.\n"
    "-----------\n"
    "Je vais te donner la traduction à évaluer avec son texte source.";

inline constexpr const char* kStep3Header =
    "Voici le texte source et sa traduction à annoter :";

inline constexpr const char* kStep3Command =
    "----------\n"
    "PROCÈDE À L’ANNOTATION. Attention, n’annote QUE les erreurs, pas des améliorations ou "
    "suggestions ! Il peut y avoir plusieurs erreurs dans une même phrase.";

inline constexpr const char* kStep4 =
    "Convertis maintenant tes annotations en un tableau exploitable automatiquement : une ligne par "
    "erreur, avec les colonnes phrase | erreur | code | explication. Réponds uniquement avec le "
    "tableau.";

}  // namespace prompts

/// Assemble the 4-step chain for one document. The long and short variants
/// differ only in step 2 (typology with or without definitions).
inline PromptChain build_chain(const AnnotatedDocument& doc, const Typology& typology,
                               const std::string& manual_path, PromptVariant variant) {
  if (doc.target_text.empty())
    throw Error(ErrorCode::BadFormat, "document has no target text").with("doc", doc.doc_id);
  if (doc.source_text.empty())
    throw Error(ErrorCode::BadFormat, "document has no source text").with("doc", doc.doc_id);
  PromptChain chain;
  chain.variant = variant;
  chain.manual_path = manual_path;
  chain.steps.push_back(prompts::kStep1);
  chain.steps.push_back(
      std::string(prompts::kStep2Preamble) +
      typology.render_prompt_block(variant == PromptVariant::long_prompt) +
      prompts::kStep2Trailer);
  chain.steps.push_back(std::string(prompts::kStep3Header) + "\n" + encode_utf8(doc.source_text) +
                        "\n" + encode_utf8(doc.target_text) + "\n" + prompts::kStep3Command);
  chain.steps.push_back(prompts::kStep4);
  return chain;
}

// ---------------------------------------------------------------------------
// Providers

struct ChatMessage {
  std::string role;     // "user" or "assistant"
  std::string content;
  std::string attachment_name;  // empty = no attachment
  std::string attachment_b64;
};

struct ChatResult {
  std::string content;
  std::int64_t prompt_tokens = -1;      // -1 = not reported
  std::int64_t completion_tokens = -1;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string id() const = 0;
  /// Completes the conversation so far. Throws Error(AuthError) on credential
  /// problems and Error(ProviderUnavailable) otherwise; transient failures
  /// carry field transient=1 and are retried by the caller.
  virtual ChatResult complete(const std::vector<ChatMessage>& messages) = 0;
};

struct RetryPolicy {
  int max_attempts = 4;
  double backoff_base_s = 2.0;  // sleep base * 2^k between attempts
};

struct ProviderConfig {
  std::string endpoint;  // e.g. https://api.openai.com/v1/chat/completions
  std::string model;
  std::string credential_env = "ANNOTEVAL_API_KEY";
  double timeout_s = 120.0;
  RetryPolicy retry;
  int max_parallel = 1;
  nlohmann::json sampling = nlohmann::json::object();  // opaque pass-through
  std::string provider_id = "http-chat";
};

inline ProviderConfig provider_config_from_json(const nlohmann::json& j) {
  ProviderConfig c;
  c.endpoint = j.at("endpoint").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.credential_env = j.value("credential_env", c.credential_env);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  c.retry.max_attempts = j.value("max_attempts", c.retry.max_attempts);
  c.retry.backoff_base_s = j.value("backoff_base_s", c.retry.backoff_base_s);
  c.max_parallel = j.value("max_parallel", c.max_parallel);
  if (j.contains("sampling")) c.sampling = j.at("sampling");
  c.provider_id = j.value("provider_id", c.provider_id);
  return c;
}

// ---------------------------------------------------------------------------
// Transcripts

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string fnv1a64_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

struct TranscriptStep {
  std::string request;
  std::string response;
  int retries = 0;
  std::int64_t prompt_tokens = -1;
  std::int64_t completion_tokens = -1;
};

struct ChatTranscript {
  std::string doc_id;
  std::string run_id;
  std::string provider_id;
  std::string model_id;
  std::string variant;             // "long" or "short"
  std::string attachment_digest;   // fnv1a of the manual bytes, empty if none
  std::int64_t created_unix = 0;   // the only timestamp; excluded from digest
  std::vector<TranscriptStep> steps;

  std::string content_digest() const {
    std::uint64_t h = fnv1a64(doc_id);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(run_id, h);
    for (const auto& s : steps) {
      h = fnv1a64("\x1e", h);
      h = fnv1a64(s.request, h);
      h = fnv1a64("\x1f", h);
      h = fnv1a64(s.response, h);
    }
    return fnv1a64_hex(h);
  }
};

inline nlohmann::json transcript_to_json(const ChatTranscript& t) {
  nlohmann::json j;
  j["doc_id"] = t.doc_id;
  j["run_id"] = t.run_id;
  j["provider_id"] = t.provider_id;
  j["model_id"] = t.model_id;
  j["variant"] = t.variant;
  j["attachment_digest"] = t.attachment_digest;
  j["created_unix"] = t.created_unix;
  auto steps = nlohmann::json::array();
  for (const auto& s : t.steps) {
    nlohmann::json o;
    o["request"] = s.request;
    o["response"] = s.response;
    o["retries"] = s.retries;
    if (s.prompt_tokens >= 0) o["prompt_tokens"] = s.prompt_tokens;
    if (s.completion_tokens >= 0) o["completion_tokens"] = s.completion_tokens;
    steps.push_back(std::move(o));
  }
  j["steps"] = std::move(steps);
  j["digest"] = t.content_digest();
  return j;
}

inline ChatTranscript transcript_from_json(const nlohmann::json& j) {
  ChatTranscript t;
  t.doc_id = j.at("doc_id").get<std::string>();
  t.run_id = j.value("run_id", std::string());
  t.provider_id = j.value("provider_id", std::string());
  t.model_id = j.value("model_id", std::string());
  t.variant = j.value("variant", std::string());
  t.attachment_digest = j.value("attachment_digest", std::string());
  t.created_unix = j.value("created_unix", static_cast<std::int64_t>(0));
  for (const auto& o : j.at("steps")) {
    TranscriptStep s;
    s.request = o.at("request").get<std::string>();
    s.response = o.at("response").get<std::string>();
    s.retries = o.value("retries", 0);
    s.prompt_tokens = o.value("prompt_tokens", static_cast<std::int64_t>(-1));
    s.completion_tokens = o.value("completion_tokens", static_cast<std::int64_t>(-1));
    t.steps.push_back(std::move(s));
  }
  if (j.contains("digest") && j.at("digest").get<std::string>() != t.content_digest())
    throw Error(ErrorCode::IntegrityError, "transcript digest mismatch").with("doc", t.doc_id);
  return t;
}

/// One run directory: <doc_id>.json per document plus manifest.json.
class TranscriptStore {
 public:
  explicit TranscriptStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }

  bool has(const std::string& doc_id) const {
    return std::filesystem::exists(path_for(doc_id));
  }

  void save(const ChatTranscript& t) const {
    write_file(path_for(t.doc_id), transcript_to_json(t).dump(2) + "\n");
  }

  ChatTranscript load(const std::string& doc_id) const {
    const auto p = path_for(doc_id);
    if (!std::filesystem::exists(p))
      throw Error(ErrorCode::NotFound, "no transcript for document").with("doc", doc_id);
    return transcript_from_json(read_json(p));
  }

  std::vector<std::string> doc_ids() const {
    std::vector<std::string> ids;
    if (!std::filesystem::is_directory(dir_)) return ids;
    for (const auto& e : std::filesystem::directory_iterator(dir_)) {
      if (!e.is_regular_file() || e.path().extension() != ".json") continue;
      if (e.path().filename() == "manifest.json") continue;
      ids.push_back(e.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  void write_manifest(const nlohmann::json& manifest) const {
    write_file(dir_ / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  std::filesystem::path path_for(const std::string& doc_id) const {
    return dir_ / (doc_id + ".json");
  }
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Parsing the model's final table

namespace detail {

inline std::string lower_utf8(std::string_view s) {
  std::u32string u = decode_utf8(s);
  for (auto& cp : u) cp = to_lower_cp(cp);
  return encode_utf8(u);
}

inline std::string trim_cell(std::string_view s) {
  std::size_t b = 0, e = s.size();
  auto drop = [&] {
    while (b < e && (std::isspace(static_cast<unsigned char>(s[b])) || s[b] == '*')) ++b;
    while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) || s[e - 1] == '*')) --e;
  };
  drop();
  return std::string(s.substr(b, e - b));
}

inline bool is_no_error_cell(const std::string& cell) {
  const std::string low = lower_utf8(cell);
  return low.find("aucune erreur") != std::string::npos ||
         low.find("pas d'erreur") != std::string::npos ||
         low.find("pas d’erreur") != std::string::npos ||
         low.find("no error") != std::string::npos || low == "aucune" || low == "none" ||
         low == "-" || low == "—";
}

inline std::optional<int> first_int(const std::string& cell) {
  std::size_t i = 0;
  while (i < cell.size() && !std::isdigit(static_cast<unsigned char>(cell[i]))) ++i;
  if (i == cell.size()) return std::nullopt;
  long v = 0;
  while (i < cell.size() && std::isdigit(static_cast<unsigned char>(cell[i]))) {
    v = v * 10 + (cell[i] - '0');
    if (v > 1000000) return std::nullopt;
    ++i;
  }
  return static_cast<int>(v);
}

enum class Col { sentence, surface, label, explanation, unknown };

inline Col classify_header_cell(const std::string& cell) {
  const std::string low = lower_utf8(cell);
  auto has = [&](const char* w) { return low.find(w) != std::string::npos; };
  if (has("explanation") || has("explication") || has("comment")) return Col::explanation;
  if (has("sentence") || has("phrase") || has("number") || has("numéro") || has("n°"))
    return Col::sentence;
  if (has("category") || has("catégorie") || has("label") || has("code") ||
      has("étiquette") || has("type"))
    return Col::label;
  if (has("error") || has("erreur") || has("span") || has("segment") || has("texte") ||
      has("extrait"))
    return Col::surface;
  return Col::unknown;
}

inline bool split_table_row(std::string_view line, std::vector<std::string>& cells) {
  cells.clear();
  const std::size_t pipes = static_cast<std::size_t>(std::count(line.begin(), line.end(), '|'));
  if (pipes >= 2) {
    std::vector<std::string> raw;
    std::string cur;
    for (char c : line) {
      if (c == '|') {
        raw.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    raw.push_back(cur);
    for (auto& c : raw) c = trim_cell(c);
    // Drop the empty border cells produced by leading/trailing pipes.
    std::size_t from = 0, to = raw.size();
    if (from < to && raw[from].empty()) ++from;
    if (to > from && raw[to - 1].empty()) --to;
    for (std::size_t i = from; i < to; ++i) cells.push_back(raw[i]);
    return cells.size() >= 2;
  }
  if (line.find('\t') != std::string_view::npos) {
    std::string cur;
    for (char c : line) {
      if (c == '\t') {
        cells.push_back(trim_cell(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    cells.push_back(trim_cell(cur));
    return cells.size() >= 2;
  }
  return false;
}

inline bool is_separator_row(const std::vector<std::string>& cells) {
  bool any_dash = false;
  for (const auto& c : cells) {
    for (char ch : c) {
      if (ch == '-') {
        any_dash = true;
      } else if (ch != ':' && ch != ' ') {
        return false;
      }
    }
  }
  return any_dash;
}

}  // namespace detail

/// Tolerant parser for the model's table. Accepts pipe or tab tables with
/// header synonyms in English or French, positional columns
/// (sentence | error | label | explanation) when no header is present,
/// 1-based sentence numbers, and explicit "aucune erreur" rows. Rows lacking
/// a label are dropped with a diagnostic. doc_id is left empty; the caller
/// assigns it.
inline std::vector<PredictedAnnotation> parse_annotation_table(
    std::string_view raw, std::vector<std::string>* diagnostics = nullptr) {
  auto diag = [&](std::string msg) {
    if (diagnostics) diagnostics->push_back(std::move(msg));
  };

  struct Row {
    std::size_t line_no;
    std::vector<std::string> cells;
  };
  std::vector<Row> rows;
  std::vector<detail::Col> header;
  std::size_t header_width = 0;
  bool have_header = false;

  std::size_t pos = 0, line_no = 0;
  while (pos <= raw.size()) {
    std::size_t nl = raw.find('\n', pos);
    std::string_view line =
        raw.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? raw.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> cells;
    if (!detail::split_table_row(line, cells)) continue;
    if (detail::is_separator_row(cells)) continue;
    if (!have_header) {
      std::vector<detail::Col> cols;
      std::size_t hits = 0;
      for (const auto& c : cells) {
        detail::Col k = detail::classify_header_cell(c);
        cols.push_back(k);
        if (k != detail::Col::unknown) ++hits;
      }
      if (hits >= 2) {
        header = cols;
        header_width = cells.size();
        have_header = true;
        rows.clear();  // text above the header is not data
        continue;
      }
    }
    rows.push_back({line_no, std::move(cells)});
  }

  if (rows.empty() && !have_header)
    throw Error(ErrorCode::ParseFailure, "no annotation table detected in response");

  std::vector<PredictedAnnotation> preds;
  for (const auto& row : rows) {
    std::string sent_cell, surface, label, explanation;
    if (have_header) {
      for (std::size_t i = 0; i < row.cells.size() && i < header.size(); ++i) {
        switch (header[i]) {
          case detail::Col::sentence: sent_cell = row.cells[i]; break;
          case detail::Col::surface: surface = row.cells[i]; break;
          case detail::Col::label: label = row.cells[i]; break;
          case detail::Col::explanation: explanation = row.cells[i]; break;
          case detail::Col::unknown: break;
        }
      }
      (void)header_width;
    } else {
      if (row.cells.size() >= 3) {
        sent_cell = row.cells[0];
        surface = row.cells[1];
        label = row.cells[2];
        if (row.cells.size() >= 4) explanation = row.cells[3];
      } else {
        surface = row.cells[0];
        label = row.cells[1];
      }
    }
    if (detail::is_no_error_cell(surface) || (surface.empty() && detail::is_no_error_cell(label)))
      continue;
    if (surface.empty()) {
      diag("line " + std::to_string(row.line_no) + ": row has no error text; dropped");
      continue;
    }
    if (label.empty() || detail::is_no_error_cell(label)) {
      if (detail::is_no_error_cell(label) && !label.empty()) continue;
      diag("line " + std::to_string(row.line_no) + ": row lacks a label; dropped");
      continue;
    }
    PredictedAnnotation p;
    p.surface = surface;
    p.label = label;
    p.explanation = explanation;
    if (auto v = detail::first_int(sent_cell); v && *v >= 1) p.sentence_index = *v - 1;
    preds.push_back(std::move(p));
  }
  return preds;
}

/// Render predictions as the markdown table shape the parser accepts.
inline std::string render_annotation_table(const std::vector<PredictedAnnotation>& preds) {
  std::string out = "| phrase | erreur | code | explication |\n| --- | --- | --- | --- |\n";
  auto clean = [](std::string_view s) {
    std::string c(s);
    for (auto& ch : c)
      if (ch == '|' || ch == '\n' || ch == '\r') ch = ' ';
    return c;
  };
  for (const auto& p : preds) {
    out += "| ";
    out += p.sentence_index ? std::to_string(*p.sentence_index + 1) : std::string();
    out += " | " + clean(p.surface) + " | " + clean(p.label) + " | " + clean(p.explanation) +
           " |\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running a chain and replaying stored transcripts

struct AnnotationOutcome {
  ChatTranscript transcript;
  std::vector<PredictedAnnotation> predictions;
  std::vector<std::string> diagnostics;
};

namespace detail {

inline ChatResult complete_with_retry(ChatProvider& provider, const RetryPolicy& policy,
                                      const std::vector<ChatMessage>& messages, int& retries) {
  retries = 0;
  for (int attempt = 1;; ++attempt) {
    try {
      return provider.complete(messages);
    } catch (const Error& e) {
      const bool transient = e.code() == ErrorCode::ProviderUnavailable &&
                             e.fields().count("transient");
      if (!transient || attempt >= policy.max_attempts) throw;
      if (policy.backoff_base_s > 0.0) {
        const double secs = policy.backoff_base_s * std::pow(2.0, attempt - 1);
        std::this_thread::sleep_for(std::chrono::duration<double>(secs));
      }
      ++retries;
    }
  }
}

}  // namespace detail

/// Send the chain step by step inside one conversation, persist the
/// transcript, then parse the final response. The transcript is saved before
/// parsing, so a ParseFailure still leaves a replayable record on disk.
inline AnnotationOutcome run_annotation(ChatProvider& provider, const ProviderConfig& config,
                                        const PromptChain& chain, const std::string& doc_id,
                                        const std::string& run_id, const TranscriptStore& store) {
  AnnotationOutcome out;
  ChatTranscript& t = out.transcript;
  t.doc_id = doc_id;
  t.run_id = run_id;
  t.provider_id = provider.id();
  t.model_id = config.model;
  t.variant = variant_name(chain.variant);
  t.created_unix = static_cast<std::int64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());

  std::string attachment_b64, attachment_name;
  if (!chain.manual_path.empty()) {
    const std::string bytes = read_file(chain.manual_path);
    t.attachment_digest = fnv1a64_hex(fnv1a64(bytes));
    attachment_name = std::filesystem::path(chain.manual_path).filename().string();
    attachment_b64 = base64_encode(bytes);
  }

  std::vector<ChatMessage> messages;
  for (std::size_t i = 0; i < chain.steps.size(); ++i) {
    ChatMessage msg{"user", chain.steps[i], "", ""};
    if (i == 0 && !attachment_b64.empty()) {
      msg.attachment_name = attachment_name;
      msg.attachment_b64 = attachment_b64;
    }
    messages.push_back(std::move(msg));
    int retries = 0;
    ChatResult res = detail::complete_with_retry(provider, config.retry, messages, retries);
    messages.push_back({"assistant", res.content, "", ""});
    TranscriptStep step;
    step.request = chain.steps[i];
    step.response = res.content;
    step.retries = retries;
    step.prompt_tokens = res.prompt_tokens;
    step.completion_tokens = res.completion_tokens;
    t.steps.push_back(std::move(step));
  }

  store.save(t);
  try {
    out.predictions = parse_annotation_table(t.steps.back().response, &out.diagnostics);
  } catch (Error& e) {
    e.with("doc", doc_id).with("transcript", (store.dir() / (doc_id + ".json")).string());
    throw;
  }
  for (auto& p : out.predictions) p.doc_id = doc_id;
  return out;
}

/// Parse a stored transcript again; byte-identical inputs give byte-identical
/// predictions.
inline AnnotationOutcome replay(const TranscriptStore& store, const std::string& doc_id) {
  AnnotationOutcome out;
  out.transcript = store.load(doc_id);
  if (out.transcript.steps.empty())
    throw Error(ErrorCode::ParseFailure, "transcript has no steps").with("doc", doc_id);
  out.predictions = parse_annotation_table(out.transcript.steps.back().response, &out.diagnostics);
  for (auto& p : out.predictions) p.doc_id = doc_id;
  return out;
}

}  // namespace annoteval
