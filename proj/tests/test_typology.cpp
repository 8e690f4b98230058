#include <catch2/catch_amalgamated.hpp>

#include "annoteval/typology.hpp"
#include "testutil.hpp"

using namespace annoteval;

namespace {

Typology load_default() {
  return Typology::load_file(testutil::default_typology_path().string());
}

int coded_in_subtree(const Typology& t, int idx) {
  const auto& n = t.node(idx);
  int count = n.selectable() ? 1 : 0;
  for (int c : n.children) count += coded_in_subtree(t, c);
  return count;
}

}  // namespace

TEST_CASE("default typology reproduces the published tree") {
  Typology t = load_default();
  REQUIRE(t.roots().size() == 3);
  CHECK(t.node(t.roots()[0]).name == "Content transfer");
  CHECK(t.node(t.roots()[1]).name == "Language");
  CHECK(t.node(t.roots()[2]).name == "Tools");
  // Top-level categories carry no code and are never selectable.
  for (int r : t.roots()) CHECK_FALSE(t.node(r).selectable());

  CHECK(coded_in_subtree(t, t.roots()[0]) == 9);
  CHECK(coded_in_subtree(t, t.roots()[1]) == 29);
  CHECK(coded_in_subtree(t, t.roots()[2]) == 4);
  CHECK(t.coded_count() == 42);

  const ErrorCategory& ins = t.resolve_label("LA-TL-INS");
  CHECK(ins.name == "Incorrect-choice-terminology");

  // The terminology category has 10 coded subtypes.
  const ErrorCategory& lang = t.node(t.roots()[1]);
  int term_idx = -1;
  for (int c : lang.children)
    if (t.node(c).name == "Terminology-and-lexis") term_idx = c;
  REQUIRE(term_idx >= 0);
  CHECK(coded_in_subtree(t, term_idx) == 10);
}

TEST_CASE("resolve_label normalizes and follows aliases") {
  Typology t = load_default();
  const ErrorCategory& a = t.resolve_label("LA-TL-INS");
  const ErrorCategory& b = t.resolve_label(" la-tl-ins ");
  CHECK(&a == &b);

  const ErrorCategory& too_free = t.resolve_label("TI-TF");
  CHECK(too_free.name == "Too-free");
  CHECK(&t.resolve_label("TR-TI-TF") == &too_free);
  CHECK(t.canonical_code("tr-ti-tf").value() == "TI-TF");

  CHECK_THROWS_MATCHES(t.resolve_label("ZZ-QQ"), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::UnknownLabel;
                       }));
}

TEST_CASE("resolve_label is idempotent under its own normalization") {
  Typology t = load_default();
  for (const auto& n : t.nodes()) {
    if (!n.selectable()) continue;
    const ErrorCategory& once = t.resolve_label(n.code);
    CHECK(&t.resolve_label(once.code) == &once);
    for (const auto& alias : n.aliases) CHECK(&t.resolve_label(alias) == &once);
  }
}

TEST_CASE("duplicate codes are rejected") {
  nlohmann::json j = nlohmann::json::parse(R"({
    "categories": [
      {"name": "Root", "children": [
        {"name": "A", "code": "TR-OM"},
        {"name": "B", "code": "TR-OM"}
      ]}
    ]})");
  CHECK_THROWS_MATCHES(Typology::parse(j), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::DuplicateCode;
                       }));
}

TEST_CASE("alias clashing with a code is rejected") {
  nlohmann::json j = nlohmann::json::parse(R"({
    "categories": [
      {"name": "Root", "children": [
        {"name": "A", "code": "X-A"},
        {"name": "B", "code": "X-B", "aliases": ["X-A"]}
      ]}
    ]})");
  CHECK_THROWS_AS(Typology::parse(j), Error);
}

TEST_CASE("node with children but no name is malformed") {
  nlohmann::json j = nlohmann::json::parse(R"({
    "categories": [ {"code": "X", "children": [{"name": "A", "code": "X-A"}]} ]})");
  CHECK_THROWS_MATCHES(Typology::parse(j), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::MalformedNode;
                       }));
}

TEST_CASE("absurd nesting is rejected as a malformed tree") {
  nlohmann::json node = {{"name", "leaf"}, {"code", "L"}};
  for (int i = 0; i < 70; ++i)
    node = {{"name", "n" + std::to_string(i)}, {"children", nlohmann::json::array({node})}};
  nlohmann::json j;
  j["categories"] = nlohmann::json::array({node});
  CHECK_THROWS_MATCHES(Typology::parse(j), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::MalformedTree;
                       }));
}

TEST_CASE("minimal tree: one root with one coded child") {
  nlohmann::json j = nlohmann::json::parse(R"({
    "categories": [ {"name": "Root", "children": [{"name": "Leaf", "code": "RT-LF"}]} ]})");
  Typology t = Typology::parse(j);
  CHECK(t.coded_count() == 1);
  CHECK(t.resolve_label("rt-lf").name == "Leaf");
}

TEST_CASE("prompt rendering carries numbering, codes and definitions") {
  Typology t = load_default();
  std::string with_defs = t.render_prompt_block(true);
  std::string without = t.render_prompt_block(false);

  auto pos = with_defs.find("1.1. Omission_TR-OM\n");
  REQUIRE(pos != std::string::npos);
  CHECK(with_defs.compare(pos + std::string("1.1. Omission_TR-OM\n").size(), 17,
                          "* Une omission se") == 0);
  CHECK(with_defs.find("(GRANDE CATÉGORIE, NE PAS UTILISER)") != std::string::npos);
  CHECK(without.find("1.1. Omission_TR-OM\n") != std::string::npos);
  CHECK(without.find("* ") == std::string::npos);

  // Deterministic output.
  CHECK(t.render_prompt_block(true) == with_defs);
}

TEST_CASE("short rendering is a line subsequence of the long rendering") {
  Typology t = load_default();
  std::istringstream long_in(t.render_prompt_block(true));
  std::istringstream short_in(t.render_prompt_block(false));
  std::vector<std::string> long_lines, short_lines;
  for (std::string l; std::getline(long_in, l);) long_lines.push_back(l);
  for (std::string l; std::getline(short_in, l);) short_lines.push_back(l);
  CHECK(short_lines.size() < long_lines.size());
  std::size_t i = 0;
  for (const auto& line : long_lines)
    if (i < short_lines.size() && short_lines[i] == line) ++i;
  CHECK(i == short_lines.size());
}

TEST_CASE("single-node typology renders one numbered entry") {
  nlohmann::json j = nlohmann::json::parse(R"({"categories": [{"name": "Only", "code": "ON"}]})");
  Typology t = Typology::parse(j);
  CHECK(t.render_prompt_block(true) == "1. Only_ON\n");
}

TEST_CASE("serialize and reload gives a structurally identical tree") {
  Typology t = load_default();
  Typology again = Typology::parse(t.to_json());
  CHECK(again.to_json() == t.to_json());
  CHECK(again.coded_count() == t.coded_count());
  CHECK(again.render_prompt_block(true) == t.render_prompt_block(true));
}
