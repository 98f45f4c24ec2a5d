#pragma once

// Deterministic synthetic corpora and backend helpers shared by the tests.

#include <memory>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "xlf/backends.hpp"
#include "xlf/corpus.hpp"
#include "xlf/pipeline.hpp"

namespace fixtures {

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words{
      "the",    "council", "said",   "river",  "bridge", "would", "open",    "in",     "spring", "after",
      "months", "of",      "repair", "work",   "local",  "people", "welcomed", "news",  "while",  "traders",
      "hoped",  "for",     "more",   "visitors", "town", "centre", "has",     "been",   "quiet",  "since",
      "flood",  "last",    "year",   "and",    "many",   "shops",  "closed",  "early",  "this",   "week"};
  return words;
}

inline std::string sentence(std::size_t seed, std::size_t words) {
  const auto& v = vocabulary();
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i > 0) out += ' ';
    out += v[(seed * 7 + i * 13 + i * i) % v.size()];
  }
  return out + ".";
}

/// True for the articles of `synthetic_corpus` that get a short summary.
inline bool has_short_summary(std::size_t i) { return i % 3 == 1; }

/// `n` articles. Documents run to 40 tokens, inside TER's shift distance.
/// Every third summary (i % 3 == 1) is short (6 words), the rest are long
/// (30 words).
inline xlf::Corpus synthetic_corpus(std::size_t n = 25) {
  xlf::Corpus c;
  c.name = "synthetic";
  for (std::size_t i = 0; i < n; ++i) {
    const std::string doc = sentence(i, 15) + " " + sentence(i + 100, 12) + " " + sentence(i + 200, 10);
    const std::string sum = has_short_summary(i) ? sentence(i + 300, 6) : sentence(i + 300, 30);
    c.articles.push_back({fmt::format("xsum-{:03}", i), doc, sum});
  }
  return c;
}

inline std::shared_ptr<xlf::Backend> mock_backend(xlf::MockMode mode = xlf::MockMode::exact, bool tag = true,
                                                  std::string name = "mock", xlf::BackendServices services = {}) {
  xlf::BackendConfig c;
  c.name = std::move(name);
  c.kind = xlf::BackendKind::mock;
  c.mock_mode = mode;
  c.mock_tag = tag;
  return xlf::make_backend(c, std::move(services));
}

/// S1, S2 and S3 each on their own mock instance.
inline std::map<xlf::StrategyId, xlf::StrategyBackends> mock_strategies(xlf::MockMode s1_mode,
                                                                       xlf::MockMode later_mode,
                                                                       xlf::BackendServices services = {}) {
  auto s1 = mock_backend(s1_mode, true, "s1", services);
  auto s2 = mock_backend(later_mode, true, "s2", services);
  auto s3 = mock_backend(later_mode, true, "s3", services);
  return {{xlf::StrategyId::S1, {s1, nullptr, nullptr, nullptr}},
          {xlf::StrategyId::S2, {s2, nullptr, s2, nullptr}},
          {xlf::StrategyId::S3, {nullptr, nullptr, nullptr, s3}}};
}

}  // namespace fixtures
