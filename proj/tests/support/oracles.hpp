#pragma once

// Brute-force reference implementations used to cross-check the metrics.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

inline bool is_subsequence(const Tokens& sub, const Tokens& seq) {
  std::size_t j = 0;
  for (const auto& tok : seq) {
    if (j < sub.size() && sub[j] == tok) ++j;
  }
  return j == sub.size();
}

/// Enumerates every subsequence of the shorter list (fine up to ~16 tokens).
inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  const Tokens& small = a.size() <= b.size() ? a : b;
  const Tokens& large = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  const std::size_t subsets = std::size_t{1} << small.size();
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    Tokens sub;
    for (std::size_t i = 0; i < small.size(); ++i) {
      if (mask & (std::size_t{1} << i)) sub.push_back(small[i]);
    }
    if (sub.size() > best && is_subsequence(sub, large)) best = sub.size();
  }
  return best;
}

/// Levenshtein distance by memoized recursion over suffixes.
inline int edit_distance(const Tokens& a, const Tokens& b) {
  std::map<std::pair<std::size_t, std::size_t>, int> memo;
  std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> int {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    const auto key = std::make_pair(i, j);
    if (const auto it = memo.find(key); it != memo.end()) return it->second;
    int best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, go(i + 1, j) + 1);
    best = std::min(best, go(i, j + 1) + 1);
    memo[key] = best;
    return best;
  };
  return go(0, 0);
}

inline double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

/// ROUGE-L F1 from the brute-force LCS.
inline double rouge_l_f1(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  const double l = static_cast<double>(lcs_length(cand, ref));
  return f1(l / static_cast<double>(cand.size()), l / static_cast<double>(ref.size()));
}

}  // namespace oracle
