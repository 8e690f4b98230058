#pragma once

// Independent oracle for one-to-one span matching: exhaustive search over all
// matchings with subset memoization. Only suitable for small instances; used
// to check the production matcher, never by it.

#include <cstdint>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "annoteval/span.hpp"

namespace oracle {

struct Best {
  int cardinality = 0;
  std::int64_t overlap = 0;
  std::int64_t n_optimal = 1;  // number of matchings attaining (cardinality, overlap)
};

class Matcher {
 public:
  Matcher(const std::vector<annoteval::Span>& refs,
          const std::vector<std::optional<annoteval::Span>>& preds) {
    nref_ = static_cast<int>(refs.size());
    npred_ = static_cast<int>(preds.size());
    ov_.assign(static_cast<std::size_t>(nref_),
               std::vector<std::int64_t>(static_cast<std::size_t>(npred_), 0));
    for (int r = 0; r < nref_; ++r)
      for (int p = 0; p < npred_; ++p)
        if (preds[static_cast<std::size_t>(p)])
          ov_[static_cast<std::size_t>(r)][static_cast<std::size_t>(p)] =
              annoteval::overlap_len(refs[static_cast<std::size_t>(r)],
                                     *preds[static_cast<std::size_t>(p)]);
  }

  Best solve() { return go(0, 0); }

 private:
  Best go(int i, unsigned mask) {
    if (i == nref_) return {};
    auto key = std::make_pair(i, mask);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;

    Best best = go(i + 1, mask);  // leave ref i unmatched
    for (int p = 0; p < npred_; ++p) {
      if (mask & (1u << p)) continue;
      std::int64_t o = ov_[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
      if (o == 0) continue;
      Best sub = go(i + 1, mask | (1u << p));
      Best cand{sub.cardinality + 1, sub.overlap + o, sub.n_optimal};
      if (std::tie(cand.cardinality, cand.overlap) > std::tie(best.cardinality, best.overlap)) {
        best = cand;
      } else if (cand.cardinality == best.cardinality && cand.overlap == best.overlap) {
        best.n_optimal += cand.n_optimal;
      }
    }
    memo_[key] = best;
    return best;
  }

  int nref_ = 0, npred_ = 0;
  std::vector<std::vector<std::int64_t>> ov_;
  std::map<std::pair<int, unsigned>, Best> memo_;
};

inline Best best_matching(const std::vector<annoteval::Span>& refs,
                          const std::vector<std::optional<annoteval::Span>>& preds) {
  return Matcher(refs, preds).solve();
}

}  // namespace oracle
