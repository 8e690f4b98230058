#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>

namespace annoteval {

/// Half-open interval of code-point offsets.
struct Span {
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t length() const { return end - start; }
  auto operator<=>(const Span&) const = default;
};

inline bool overlaps(Span a, Span b) {
  return std::max(a.start, b.start) < std::min(a.end, b.end);
}

inline std::int64_t overlap_len(Span a, Span b) {
  return std::max<std::int64_t>(0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

}  // namespace annoteval
