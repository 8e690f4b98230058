#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "annoteval/matching.hpp"
#include "annoteval/typology.hpp"
#include "oracle_matching.hpp"
#include "testutil.hpp"

using namespace annoteval;

namespace {

std::vector<std::optional<Span>> anchored(std::initializer_list<Span> spans) {
  std::vector<std::optional<Span>> out;
  for (Span s : spans) out.emplace_back(s);
  return out;
}

struct Instance {
  std::vector<Span> refs;
  std::vector<std::optional<Span>> preds;
};

Instance random_instance(std::mt19937& gen, int max_side, bool with_unanchored = true) {
  Instance ins;
  const int nref = static_cast<int>(gen() % static_cast<unsigned>(max_side + 1));
  const int npred = static_cast<int>(gen() % static_cast<unsigned>(max_side + 1));
  auto span = [&] {
    const std::int64_t start = static_cast<std::int64_t>(gen() % 40);
    return Span{start, start + 1 + static_cast<std::int64_t>(gen() % 8)};
  };
  std::set<Span> used;
  while (static_cast<int>(ins.refs.size()) < nref) {
    Span s = span();
    if (used.insert(s).second) ins.refs.push_back(s);  // identical ref spans are invalid
  }
  for (int p = 0; p < npred; ++p) {
    if (with_unanchored && gen() % 8 == 0)
      ins.preds.push_back(std::nullopt);
    else
      ins.preds.push_back(span());
  }
  return ins;
}

}  // namespace

TEST_CASE("overlaps is the half-open intersection test") {
  CHECK(overlaps({25, 40}, {30, 35}));
  CHECK_FALSE(overlaps({0, 5}, {5, 10}));
  CHECK(overlaps({10, 15}, {14, 20}));
  CHECK(overlap_len({10, 15}, {14, 20}) == 1);
}

TEST_CASE("overlaps is symmetric") {
  std::mt19937 gen(3);
  for (int i = 0; i < 500; ++i) {
    Span a{static_cast<std::int64_t>(gen() % 30), 0};
    a.end = a.start + 1 + static_cast<std::int64_t>(gen() % 10);
    Span b{static_cast<std::int64_t>(gen() % 30), 0};
    b.end = b.start + 1 + static_cast<std::int64_t>(gen() % 10);
    CHECK(overlaps(a, b) == overlaps(b, a));
    CHECK(overlap_len(a, b) == overlap_len(b, a));
  }
}

TEST_CASE("one prediction spanning two references pairs once, lexicographically") {
  std::vector<Span> refs{{0, 5}, {10, 15}};
  auto preds = anchored({{3, 12}});
  MatchResult m = match_spans(refs, preds);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0] == MatchPair{0, 0, 2});  // tie with ref 1 broken to ref 0
  CHECK(m.unmatched_refs == std::vector<int>{1});
  CHECK(m.unmatched_preds.empty());

  oracle::Best best = oracle::best_matching(refs, preds);
  CHECK(best.cardinality == 1);
  CHECK(best.overlap == 2);
}

TEST_CASE("identity predictions all pair") {
  std::vector<Span> refs{{0, 4}, {6, 9}, {12, 20}};
  auto preds = anchored({{0, 4}, {6, 9}, {12, 20}});
  MatchResult m = match_spans(refs, preds);
  CHECK(m.pairs.size() == 3);
  CHECK(m.unmatched_refs.empty());
  CHECK(m.unmatched_preds.empty());
}

TEST_CASE("disjoint spans leave everything unmatched") {
  std::vector<Span> refs{{0, 4}, {6, 9}};
  auto preds = anchored({{20, 24}, {30, 31}});
  MatchResult m = match_spans(refs, preds);
  CHECK(m.pairs.empty());
  CHECK(m.unmatched_refs == std::vector<int>{0, 1});
  CHECK(m.unmatched_preds == std::vector<int>{0, 1});
}

TEST_CASE("unanchored predictions are always false errors") {
  std::vector<Span> refs{{0, 10}};
  std::vector<std::optional<Span>> preds{std::nullopt, Span{0, 10}};
  MatchResult m = match_spans(refs, preds);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].pred_index == 1);
  CHECK(m.unmatched_preds == std::vector<int>{0});
}

TEST_CASE("maximum cardinality beats greedy overlap") {
  // A greedy matcher would give pred 0 (overlap 9) to ref 0 and strand ref 1;
  // the only cardinality-2 matching swaps them.
  std::vector<Span> refs{{0, 10}, {8, 12}};
  auto preds = anchored({{0, 9}, {0, 2}});
  MatchResult m = match_spans(refs, preds);
  REQUIRE(m.pairs.size() == 2);
  CHECK(m.pairs[0] == MatchPair{0, 1, 2});
  CHECK(m.pairs[1] == MatchPair{1, 0, 1});

  // And when cardinality ties, total overlap decides.
  std::vector<Span> refs2{{0, 10}};
  auto preds2 = anchored({{9, 11}, {0, 8}});
  MatchResult m2 = match_spans(refs2, preds2);
  REQUIRE(m2.pairs.size() == 1);
  CHECK(m2.pairs[0] == MatchPair{0, 1, 8});
}

TEST_CASE("matcher agrees with the exhaustive oracle") {
  std::mt19937 gen(12345);
  for (int trial = 0; trial < 400; ++trial) {
    Instance ins = random_instance(gen, 7);
    MatchResult m = match_spans(ins.refs, ins.preds);
    oracle::Best best = oracle::best_matching(ins.refs, ins.preds);
    REQUIRE(static_cast<int>(m.pairs.size()) == best.cardinality);
    std::int64_t total = 0;
    for (const auto& pr : m.pairs) total += pr.overlap;
    REQUIRE(total == best.overlap);

    // structural invariants
    std::set<int> rs, ps;
    for (const auto& pr : m.pairs) {
      CHECK(pr.overlap >= 1);
      CHECK(rs.insert(pr.ref_index).second);
      CHECK(ps.insert(pr.pred_index).second);
    }
    CHECK(m.pairs.size() + m.unmatched_refs.size() == ins.refs.size());
    CHECK(m.pairs.size() + m.unmatched_preds.size() == ins.preds.size());
  }
}

TEST_CASE("permuting inputs preserves the matching value") {
  std::mt19937 gen(777);
  for (int trial = 0; trial < 200; ++trial) {
    Instance ins = random_instance(gen, 6);
    MatchResult m = match_spans(ins.refs, ins.preds);

    Instance shuffled = ins;
    std::shuffle(shuffled.refs.begin(), shuffled.refs.end(), gen);
    std::shuffle(shuffled.preds.begin(), shuffled.preds.end(), gen);
    MatchResult ms = match_spans(shuffled.refs, shuffled.preds);

    CHECK(m.pairs.size() == ms.pairs.size());
    std::int64_t t1 = 0, t2 = 0;
    for (const auto& p : m.pairs) t1 += p.overlap;
    for (const auto& p : ms.pairs) t2 += p.overlap;
    CHECK(t1 == t2);

    // With a unique optimum the index-free span pairs must be identical.
    oracle::Best best = oracle::best_matching(ins.refs, ins.preds);
    if (best.n_optimal == 1) {
      auto key = [](const std::vector<Span>& refs,
                    const std::vector<std::optional<Span>>& preds, const MatchResult& res) {
        std::multiset<std::pair<Span, Span>> out;
        for (const auto& p : res.pairs)
          out.emplace(refs[static_cast<std::size_t>(p.ref_index)],
                      *preds[static_cast<std::size_t>(p.pred_index)]);
        return out;
      };
      CHECK(key(ins.refs, ins.preds, m) == key(shuffled.refs, shuffled.preds, ms));
    }
  }
}

TEST_CASE("adding a prediction never decreases the pair count") {
  std::mt19937 gen(99);
  for (int trial = 0; trial < 200; ++trial) {
    Instance ins = random_instance(gen, 6, false);
    MatchResult before = match_spans(ins.refs, ins.preds);
    Instance bigger = ins;
    const std::int64_t start = static_cast<std::int64_t>(gen() % 40);
    bigger.preds.push_back(Span{start, start + 1 + static_cast<std::int64_t>(gen() % 8)});
    MatchResult after = match_spans(bigger.refs, bigger.preds);
    CHECK(after.pairs.size() >= before.pairs.size());
  }
}

TEST_CASE("label correctness checks set membership after normalization") {
  Typology t = Typology::load_file(testutil::default_typology_path().string());

  ReferenceError ref;
  ref.span = {0, 7};
  ref.labels = {"TR-SI-UT", "TR-SI-TL", "LA-TL-ING"};
  PredictedAnnotation p;
  p.doc_id = "d";
  p.surface = "focusse";
  p.anchor = Span{0, 7};
  p.anchor_status = AnchorStatus::exact;

  MatchPair pair{0, 0, 7};

  p.label = "LA-TL-ING";
  CHECK(label_correct(pair, {ref}, {p}, t));
  p.label = "tr-si-tl";
  CHECK(label_correct(pair, {ref}, {p}, t));
  p.label = "TR-OM";
  CHECK_FALSE(label_correct(pair, {ref}, {p}, t));
  p.label = "ZZ-QQ";  // unresolvable: identified but never label-correct
  CHECK_FALSE(label_correct(pair, {ref}, {p}, t));

  ReferenceError ref2;
  ref2.span = {0, 7};
  ref2.labels = {"LA-HY-PU"};
  p.label = "TR-OM";
  CHECK_FALSE(label_correct(pair, {ref2}, {p}, t));

  // Alias forms hit the same node.
  ReferenceError ref3;
  ref3.span = {0, 7};
  ref3.labels = {"TI-TF"};
  p.label = "TR-TI-TF";
  CHECK(label_correct(pair, {ref3}, {p}, t));
}

TEST_CASE("match_document counts label-correct pairs") {
  Typology t = Typology::load_file(testutil::default_typology_path().string());
  std::vector<ReferenceError> refs(2);
  refs[0].span = {0, 5};
  refs[0].labels = {"TR-OM"};
  refs[1].span = {10, 15};
  refs[1].labels = {"LA-UR", "LA-TC-CE"};
  std::vector<PredictedAnnotation> preds(2);
  preds[0].anchor = Span{0, 5};
  preds[0].label = "TR-OM";
  preds[1].anchor = Span{10, 15};
  preds[1].label = "TR-AD";
  MatchResult m = match_document(refs, preds, t);
  CHECK(m.pairs.size() == 2);
  CHECK(m.n_label_correct == 1);
}

TEST_CASE("matching trace records the tie-break path") {
  std::vector<Span> refs{{0, 5}, {10, 15}};
  auto preds = anchored({{3, 12}});
  MatchTrace trace;
  match_spans(refs, preds, &trace);
  CHECK(trace.best_cardinality == 1);
  CHECK(trace.best_overlap == 2);
  REQUIRE_FALSE(trace.steps.empty());
  CHECK(trace.steps.front().kept);
}
