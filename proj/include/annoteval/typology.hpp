#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "annoteval/error.hpp"
#include "annoteval/io.hpp"

// Error typology: a tree of categories, where a node is selectable as an
// annotation label iff it carries a code. Top-level categories are structural
// only. The tree is immutable after load and safe for concurrent reads.

namespace annoteval {

struct ErrorCategory {
  std::string name;
  std::string code;  // empty = structural node, never selectable
  std::string definition;
  std::vector<std::string> aliases;
  int parent = -1;
  std::vector<int> children;

  bool selectable() const { return !code.empty(); }
};

/// Trim surrounding whitespace and uppercase ASCII letters. Codes are plain
/// ASCII, so this is the full normalization applied to raw labels.
inline std::string normalize_code(std::string_view raw) {
  std::size_t b = 0, e = raw.size();
  while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
  std::string out;
  out.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) {
    char c = raw[i];
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 32);
    out += c;
  }
  return out;
}

class Typology {
 public:
  static Typology parse(const nlohmann::json& doc) {
    Typology t;
    const nlohmann::json* cats = nullptr;
    if (doc.is_array()) {
      cats = &doc;
    } else if (doc.is_object() && doc.contains("categories")) {
      cats = &doc.at("categories");
    } else {
      throw Error(ErrorCode::BadFormat,
                  "typology document must be an array of categories or an "
                  "object with a \"categories\" field");
    }
    for (const auto& c : *cats) t.add_node(c, -1, 0);
    if (t.nodes_.empty())
      throw Error(ErrorCode::BadFormat, "typology has no categories");
    return t;
  }

  static Typology load_file(const std::string& path) {
    return parse(read_json(path));
  }

  const std::vector<ErrorCategory>& nodes() const { return nodes_; }
  const std::vector<int>& roots() const { return roots_; }
  const ErrorCategory& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }

  /// Canonical code for a raw label, following aliases; nullopt if unknown.
  std::optional<std::string> canonical_code(std::string_view raw) const {
    std::string norm = normalize_code(raw);
    if (code_index_.count(norm)) return norm;
    auto it = alias_table_.find(norm);
    if (it != alias_table_.end()) return it->second;
    return std::nullopt;
  }

  int resolve_index(std::string_view raw) const {
    auto canon = canonical_code(raw);
    if (!canon)
      throw Error(ErrorCode::UnknownLabel, "label does not resolve in typology")
          .with("label", raw);
    return code_index_.at(*canon);
  }

  const ErrorCategory& resolve_label(std::string_view raw) const {
    return nodes_[static_cast<std::size_t>(resolve_index(raw))];
  }

  bool known(std::string_view raw) const { return canonical_code(raw).has_value(); }

  std::size_t coded_count() const { return code_index_.size(); }

  const std::map<std::string, std::string>& alias_table() const { return alias_table_; }

  /// Numbered prompt rendering of the tree; definitions appended as "* ..."
  /// lines when requested (long prompt) and omitted otherwise (short prompt).
  std::string render_prompt_block(bool include_definitions) const {
    std::string out;
    for (std::size_t i = 0; i < roots_.size(); ++i)
      render_node(out, roots_[i], std::to_string(i + 1) + ".", true,
                  include_definitions);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json doc;
    auto cats = nlohmann::json::array();
    for (int r : roots_) cats.push_back(node_json(r));
    doc["categories"] = std::move(cats);
    return doc;
  }

 private:
  void add_node(const nlohmann::json& j, int parent, int depth) {
    if (depth > 64)
      throw Error(ErrorCode::MalformedTree, "typology nesting exceeds depth 64");
    if (!j.is_object())
      throw Error(ErrorCode::BadFormat, "typology node must be an object");
    ErrorCategory n;
    n.name = j.value("name", std::string());
    n.definition = j.value("definition", std::string());
    n.parent = parent;
    if (j.contains("code")) n.code = normalize_code(j.at("code").get<std::string>());
    const bool has_children = j.contains("children") && !j.at("children").empty();
    if (has_children && n.name.empty())
      throw Error(ErrorCode::MalformedNode, "node with children has no name");
    if (!has_children && n.name.empty() && n.code.empty())
      throw Error(ErrorCode::MalformedNode, "node has neither name nor code");

    int idx = static_cast<int>(nodes_.size());
    if (!n.code.empty()) register_code(n.code, idx, /*alias=*/false);
    if (j.contains("aliases")) {
      for (const auto& a : j.at("aliases")) {
        std::string alias = normalize_code(a.get<std::string>());
        n.aliases.push_back(alias);
        if (n.code.empty())
          throw Error(ErrorCode::MalformedNode, "alias on node without code")
              .with("name", n.name);
        register_code(alias, idx, /*alias=*/true);
        alias_table_[alias] = n.code;
      }
    }

    nodes_.push_back(std::move(n));
    if (parent < 0)
      roots_.push_back(idx);
    else
      nodes_[static_cast<std::size_t>(parent)].children.push_back(idx);
    if (has_children)
      for (const auto& c : j.at("children")) add_node(c, idx, depth + 1);
  }

  void register_code(const std::string& code, int idx, bool alias) {
    if (code.empty())
      throw Error(ErrorCode::MalformedNode, "empty code");
    if (code_index_.count(code) || alias_table_.count(code))
      throw Error(ErrorCode::DuplicateCode, "code appears more than once")
          .with("code", code);
    if (!alias) code_index_[code] = idx;
  }

  void render_node(std::string& out, int idx, const std::string& number,
                   bool top_level, bool include_definitions) const {
    const ErrorCategory& n = nodes_[static_cast<std::size_t>(idx)];
    out += number;
    out += ' ';
    out += n.name;
    if (!n.code.empty()) {
      out += '_';
      out += n.code;
    } else if (top_level) {
      out += " (GRANDE CATÉGORIE, NE PAS UTILISER)";
    }
    out += '\n';
    if (include_definitions && !n.definition.empty()) {
      out += "* ";
      out += n.definition;
      out += '\n';
    }
    for (std::size_t i = 0; i < n.children.size(); ++i)
      render_node(out, n.children[i], number + std::to_string(i + 1) + ".",
                  false, include_definitions);
  }

  nlohmann::json node_json(int idx) const {
    const ErrorCategory& n = nodes_[static_cast<std::size_t>(idx)];
    nlohmann::json j;
    j["name"] = n.name;
    if (!n.code.empty()) j["code"] = n.code;
    if (!n.definition.empty()) j["definition"] = n.definition;
    if (!n.aliases.empty()) j["aliases"] = n.aliases;
    if (!n.children.empty()) {
      auto ch = nlohmann::json::array();
      for (int c : n.children) ch.push_back(node_json(c));
      j["children"] = std::move(ch);
    }
    return j;
  }

  std::vector<ErrorCategory> nodes_;
  std::vector<int> roots_;
  std::map<std::string, int> code_index_;
  std::map<std::string, std::string> alias_table_;
};

}  // namespace annoteval
