#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "annoteval/corpus.hpp"
#include "annoteval/span.hpp"
#include "annoteval/typology.hpp"

// One-to-one matching between reference and predicted error spans for a
// single document. A reference error counts as identified when it shares at
// least one character with a predicted error. Among all one-to-one matchings
// the result maximizes cardinality, then total overlap length, then takes the
// lexicographically smallest sorted list of (ref_index, pred_index) pairs, so
// reports are reproducible byte for byte.

namespace annoteval {

struct MatchPair {
  int ref_index = -1;
  int pred_index = -1;
  std::int64_t overlap = 0;

  bool operator==(const MatchPair&) const = default;
};

struct MatchResult {
  std::vector<MatchPair> pairs;        // sorted by (ref_index, pred_index)
  std::vector<int> unmatched_refs;     // misses (false negatives)
  std::vector<int> unmatched_preds;    // false errors (false positives)
  int n_label_correct = 0;
};

struct MatchTrace {
  std::int64_t best_cardinality = 0;
  std::int64_t best_overlap = 0;
  struct Step {
    int ref, pred;
    std::int64_t overlap;
    bool kept;
  };
  std::vector<Step> steps;
};

namespace detail {

/// Rectangular assignment, rows <= cols, minimizing total cost.
/// Returns row -> col.
inline std::vector<int> hungarian_min(const std::vector<std::vector<std::int64_t>>& cost) {
  const int n = static_cast<int>(cost.size());
  const int m = n ? static_cast<int>(cost[0].size()) : 0;
  const std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(static_cast<std::size_t>(n) + 1, 0),
      v(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0),
      way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<std::int64_t> minv(static_cast<std::size_t>(m) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      int i0 = p[static_cast<std::size_t>(j0)], j1 = -1;
      std::int64_t delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        std::int64_t cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[static_cast<std::size_t>(j)] > 0)
      row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

/// Best achievable cardinality*big + overlap over the free part of the
/// overlap grid. Dummy columns let any ref stay unmatched at zero profit.
inline std::int64_t assignment_value(const std::vector<std::vector<std::int64_t>>& ov,
                                     const std::vector<char>& ref_used,
                                     const std::vector<char>& pred_used,
                                     std::int64_t big) {
  std::vector<int> rows, cols;
  const int nref = static_cast<int>(ov.size());
  const int npred = nref ? static_cast<int>(ov[0].size()) : 0;
  std::vector<char> col_keep(static_cast<std::size_t>(npred), 0);
  for (int r = 0; r < nref; ++r) {
    if (ref_used[static_cast<std::size_t>(r)]) continue;
    bool any = false;
    for (int p = 0; p < npred; ++p) {
      if (pred_used[static_cast<std::size_t>(p)] || ov[static_cast<std::size_t>(r)][static_cast<std::size_t>(p)] == 0)
        continue;
      any = true;
      col_keep[static_cast<std::size_t>(p)] = 1;
    }
    if (any) rows.push_back(r);
  }
  for (int p = 0; p < npred; ++p)
    if (col_keep[static_cast<std::size_t>(p)]) cols.push_back(p);
  if (rows.empty()) return 0;

  const std::size_t n = rows.size();
  const std::size_t m = cols.size() + n;  // dummies on the right
  std::int64_t max_profit = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      std::int64_t o = ov[static_cast<std::size_t>(rows[i])][static_cast<std::size_t>(cols[j])];
      if (o > 0) max_profit = std::max(max_profit, big + o);
    }
  const std::int64_t offset = max_profit;
  std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(m, offset));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      std::int64_t o = ov[static_cast<std::size_t>(rows[i])][static_cast<std::size_t>(cols[j])];
      cost[i][j] = o > 0 ? offset - (big + o) : offset + 1;  // forbidden beats nothing
    }
  std::vector<int> asg = hungarian_min(cost);
  std::int64_t value = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int j = asg[i];
    if (j >= 0 && static_cast<std::size_t>(j) < cols.size()) {
      std::int64_t o = ov[static_cast<std::size_t>(rows[i])][static_cast<std::size_t>(cols[static_cast<std::size_t>(j)])];
      if (o > 0) value += big + o;
    }
  }
  return value;
}

}  // namespace detail

/// Match reference spans against (possibly unanchored) predicted spans.
/// Unanchored predictions never pair and always land in unmatched_preds.
inline MatchResult match_spans(const std::vector<Span>& refs,
                               const std::vector<std::optional<Span>>& preds,
                               MatchTrace* trace = nullptr) {
  const int nref = static_cast<int>(refs.size());
  const int npred = static_cast<int>(preds.size());
  std::vector<std::vector<std::int64_t>> ov(
      static_cast<std::size_t>(nref), std::vector<std::int64_t>(static_cast<std::size_t>(npred), 0));
  std::int64_t total_ov = 0;
  for (int r = 0; r < nref; ++r)
    for (int p = 0; p < npred; ++p)
      if (preds[static_cast<std::size_t>(p)]) {
        std::int64_t o = overlap_len(refs[static_cast<std::size_t>(r)], *preds[static_cast<std::size_t>(p)]);
        ov[static_cast<std::size_t>(r)][static_cast<std::size_t>(p)] = o;
        total_ov += o;
      }
  const std::int64_t big = total_ov + 1;

  std::vector<char> ref_used(static_cast<std::size_t>(nref), 0),
      pred_used(static_cast<std::size_t>(npred), 0);
  const std::int64_t target = detail::assignment_value(ov, ref_used, pred_used, big);

  MatchResult res;
  std::int64_t fixed_value = 0;
  for (int r = 0; r < nref; ++r) {
    for (int p = 0; p < npred; ++p) {
      if (pred_used[static_cast<std::size_t>(p)]) continue;
      std::int64_t o = ov[static_cast<std::size_t>(r)][static_cast<std::size_t>(p)];
      if (o == 0) continue;
      ref_used[static_cast<std::size_t>(r)] = 1;
      pred_used[static_cast<std::size_t>(p)] = 1;
      std::int64_t with = fixed_value + big + o +
                          detail::assignment_value(ov, ref_used, pred_used, big);
      const bool keep = with == target;
      if (trace) trace->steps.push_back({r, p, o, keep});
      if (keep) {
        fixed_value += big + o;
        res.pairs.push_back({r, p, o});
        break;  // ref r is taken, move on
      }
      ref_used[static_cast<std::size_t>(r)] = 0;
      pred_used[static_cast<std::size_t>(p)] = 0;
    }
  }

  for (int r = 0; r < nref; ++r)
    if (!ref_used[static_cast<std::size_t>(r)]) res.unmatched_refs.push_back(r);
  for (int p = 0; p < npred; ++p)
    if (!pred_used[static_cast<std::size_t>(p)]) res.unmatched_preds.push_back(p);
  if (trace) {
    trace->best_cardinality = static_cast<std::int64_t>(res.pairs.size());
    trace->best_overlap = fixed_value - big * static_cast<std::int64_t>(res.pairs.size());
  }
  return res;
}

/// True iff the predicted label resolves to a member of the reference error's
/// label set. Unresolvable labels count as incorrect, never as an error.
inline bool label_correct(const MatchPair& pair, const std::vector<ReferenceError>& refs,
                          const std::vector<PredictedAnnotation>& preds,
                          const Typology& typology) {
  const auto& ref = refs[static_cast<std::size_t>(pair.ref_index)];
  const auto& pred = preds[static_cast<std::size_t>(pair.pred_index)];
  auto canon = typology.canonical_code(pred.label);
  if (!canon) return false;
  return std::find(ref.labels.begin(), ref.labels.end(), *canon) != ref.labels.end();
}

inline MatchResult match_document(const std::vector<ReferenceError>& refs,
                                  const std::vector<PredictedAnnotation>& preds,
                                  const Typology& typology, MatchTrace* trace = nullptr) {
  std::vector<Span> ref_spans;
  ref_spans.reserve(refs.size());
  for (const auto& r : refs) ref_spans.push_back(r.span);
  std::vector<std::optional<Span>> pred_spans;
  pred_spans.reserve(preds.size());
  for (const auto& p : preds) pred_spans.push_back(p.anchor);
  MatchResult res = match_spans(ref_spans, pred_spans, trace);
  for (const auto& pair : res.pairs)
    if (label_correct(pair, refs, preds, typology)) ++res.n_label_correct;
  return res;
}

}  // namespace annoteval
