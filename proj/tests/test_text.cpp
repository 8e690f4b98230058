#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "annoteval/corpus.hpp"
#include "annoteval/text.hpp"

using namespace annoteval;

namespace {

// The annotated sample paragraph used across the corpus fixtures.
const char* kSampleParagraph =
    "Les contes de fées, les contes du peuple et plus généralement les histoires "
    "d’enfants ont récemment attiré la communauté du Traitement Automatique des "
    "Langues (TAL). A ce titre très peu de corpus existent, et les ressources linguistiques "
    "manquent. Le travail présenté dans cet article vise à combler la lacune en "
    "présentant un corpus annoté syntaxiquement et sémantiquement. Elle se focusse "
    "sur l'analyse linguistique d'un corpus de contes de fées et fournit une description des "
    "ressources syntaxiques et sémantiques développées pour l'extraction des "
    "informations.";

}  // namespace

TEST_CASE("utf8 round trip") {
  std::string s = "aé’€\U0001F600z";
  std::u32string u = decode_utf8(s);
  CHECK(u.size() == 6);
  CHECK(encode_utf8(u) == s);
  CHECK(count_code_points(s) == 6);
}

TEST_CASE("utf8 rejects invalid sequences") {
  CHECK_THROWS_AS(decode_utf8("\xC3"), Error);
  CHECK_THROWS_AS(decode_utf8("\x80xyz"), Error);
  CHECK_THROWS_AS(decode_utf8("\xED\xA0\x80"), Error);  // surrogate
}

TEST_CASE("utf8 round trip on random code points") {
  std::mt19937 gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::u32string u;
    const int len = static_cast<int>(gen() % 40);
    for (int i = 0; i < len; ++i) {
      char32_t cp;
      do {
        cp = gen() % 0x10FFFF + 1;
      } while (cp >= 0xD800 && cp <= 0xDFFF);
      u.push_back(cp);
    }
    CHECK(decode_utf8(encode_utf8(u)) == u);
  }
}

TEST_CASE("case and punctuation folding") {
  CHECK(to_lower_cp(U'A') == U'a');
  CHECK(to_lower_cp(U'É') == U'é');  // É -> é
  CHECK(is_upper_cp(U'À'));
  CHECK(!is_upper_cp(U'à'));
  CHECK(ascii_fold_cp(U'’') == U'\'');
  CHECK(ascii_fold_cp(U'–') == U'-');
  CHECK(ascii_fold_cp(U'“') == U'"');
}

TEST_CASE("word counting splits on whitespace runs") {
  CHECK(count_words(U"") == 0);
  CHECK(count_words(U"un") == 1);
  CHECK(count_words(U"  un\t deux \n trois  ") == 3);
  CHECK(count_words(decode_utf8("mot suivant")) == 2);  // NBSP separates
}

TEST_CASE("normalized text maps back to original offsets") {
  std::u32string src = decode_utf8("L’Extraction  des   Données");
  NormalizedText n = NormalizedText::build(src);
  CHECK(encode_utf8(n.text) == "l'extraction des données");
  // The collapsed space after "extraction" covers both original blanks.
  auto at = n.text.find(U' ');
  CHECK(n.origin[at].second - n.origin[at].first == 2);
}

TEST_CASE("split_sentences basic boundaries") {
  auto spans = split_sentences(decode_utf8("A. B."));
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == Span{0, 2});
  CHECK(spans[1] == Span{3, 5});
}

TEST_CASE("split_sentences abbreviation exceptions") {
  std::u32string t = decode_utf8("On cite e.g. small et i.e. le reste. Fin de test.");
  auto spans = split_sentences(t);
  REQUIRE(spans.size() == 2);
  CHECK(encode_utf8(std::u32string(t.substr(
            static_cast<std::size_t>(spans[0].start),
            static_cast<std::size_t>(spans[0].length())))) ==
        "On cite e.g. small et i.e. le reste.");
}

TEST_CASE("split_sentences requires uppercase continuation") {
  // Lowercase after the period: no split.
  auto spans = split_sentences(decode_utf8("version 2. beta du produit"));
  CHECK(spans.size() == 1);
}

TEST_CASE("sample paragraph has four sentences") {
  std::u32string t = decode_utf8(kSampleParagraph);
  auto spans = split_sentences(t);
  REQUIRE(spans.size() == 4);
  auto second = encode_utf8(std::u32string(
      t.substr(static_cast<std::size_t>(spans[1].start), 10)));
  CHECK(second.substr(0, 10) == "A ce titre");
}

TEST_CASE("split_sentences spans plus gaps reconstruct the text") {
  std::mt19937 gen(11);
  const std::string alphabet = "abc é.!? ABC,;";
  std::vector<std::u32string> pieces;
  for (int trial = 0; trial < 100; ++trial) {
    std::u32string text;
    const std::u32string alpha = decode_utf8(alphabet);
    const int len = static_cast<int>(gen() % 120);
    for (int i = 0; i < len; ++i) text.push_back(alpha[gen() % alpha.size()]);
    auto spans = split_sentences(text);
    std::int64_t prev = -1;
    for (auto s : spans) {
      CHECK(s.start > prev);
      CHECK(s.end > s.start);
      prev = s.end - 1;
    }
    // Non-whitespace outside any span would mean lost text.
    std::size_t si = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
      while (si < spans.size() && spans[si].end <= static_cast<std::int64_t>(i)) ++si;
      const bool inside = si < spans.size() &&
                          spans[si].start <= static_cast<std::int64_t>(i) &&
                          static_cast<std::int64_t>(i) < spans[si].end;
      if (!inside) CHECK(is_space_cp(text[i]));
    }
  }
}
