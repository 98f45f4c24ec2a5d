#include "xlf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

#include <fmt/format.h>

#include "xlf/error.hpp"
#include "xlf/unicode.hpp"

namespace xlf::metrics {

namespace {

using NgramCounts = std::unordered_map<std::string, int>;

// Joins tokens with a unit separator, which never survives tokenization.
NgramCounts count_ngrams(TokenSpan tokens, int n) {
  NgramCounts counts;
  const auto un = static_cast<std::size_t>(n);
  if (tokens.size() < un) return counts;
  for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < un; ++k) {
      key.push_back('\x1f');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

int total(const NgramCounts& counts) {
  int t = 0;
  for (const auto& [_, c] : counts) t += c;
  return t;
}

int clipped_overlap(const NgramCounts& candidate, const NgramCounts& reference) {
  int overlap = 0;
  for (const auto& [gram, c] : candidate) {
    const auto it = reference.find(gram);
    if (it != reference.end()) overlap += std::min(c, it->second);
  }
  return overlap;
}

double ratio(int num, int den) { return den > 0 ? static_cast<double>(num) / den : 0.0; }

}  // namespace

ScoreTriple ScoreTriple::from(double precision, double recall) {
  const double sum = precision + recall;
  return {precision, recall, sum > 0.0 ? 2.0 * precision * recall / sum : 0.0};
}

void ChrfConfig::validate() const {
  if (!(beta > 0.0)) throw ValidationError("chrF beta must be > 0");
  if (char_n < 1) throw ValidationError("chrF char_n must be >= 1");
  if (word_n < 0) throw ValidationError("chrF word_n must be >= 0");
}

void TerConfig::validate() const {
  if (max_shift_distance < 0) throw ValidationError("TER max_shift_distance must be >= 0");
  if (max_shift_iterations < 0) throw ValidationError("TER max_shift_iterations must be >= 0");
  if (max_shift_length < 1) throw ValidationError("TER max_shift_length must be >= 1");
}

void BleuConfig::validate() const {
  if (max_n < 1) throw ValidationError("BLEU max_n must be >= 1");
  if (smoothing == BleuSmoothing::add_k && !(k > 0.0)) {
    throw ValidationError("BLEU add-k smoothing needs k > 0");
  }
}

Tokens tokenize_words(std::string_view text, bool case_sensitive) {
  Tokens tokens;
  std::u32string current;
  const auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(unicode::encode(current));
      current.clear();
    }
  };
  for (char32_t cp : unicode::decode(text)) {
    if (unicode::is_space(cp)) {
      flush();
    } else if (unicode::is_punct(cp)) {
      flush();
      tokens.push_back(unicode::encode(cp));
    } else {
      current.push_back(case_sensitive ? cp : unicode::to_lower(cp));
    }
  }
  flush();
  return tokens;
}

// ---------------------------------------------------------------- ROUGE

ScoreTriple rouge_n(TokenSpan candidate, TokenSpan reference, int n) {
  if (n < 1) throw ValidationError(fmt::format("ROUGE-N order must be >= 1, got {}", n));
  const NgramCounts cand = count_ngrams(candidate, n);
  const NgramCounts ref = count_ngrams(reference, n);
  const int overlap = clipped_overlap(cand, ref);
  return ScoreTriple::from(ratio(overlap, total(cand)), ratio(overlap, total(ref)));
}

std::size_t lcs_length(TokenSpan a, TokenSpan b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

ScoreTriple rouge_l(TokenSpan candidate, TokenSpan reference) {
  if (candidate.empty() || reference.empty()) return {};
  const auto l = static_cast<double>(lcs_length(candidate, reference));
  return ScoreTriple::from(l / static_cast<double>(candidate.size()),
                           l / static_cast<double>(reference.size()));
}

// ---------------------------------------------------------------- BLEU

double bleu(TokenSpan candidate, std::span<const Tokens> references, const BleuConfig& cfg) {
  cfg.validate();
  if (references.empty()) throw ValidationError("BLEU needs at least one reference");
  if (candidate.empty()) return 0.0;

  const auto c = static_cast<double>(candidate.size());
  // Closest reference length; ties go to the shorter one.
  std::size_t r = references.front().size();
  for (const auto& ref : references) {
    const auto d_new = std::abs(static_cast<double>(ref.size()) - c);
    const auto d_old = std::abs(static_cast<double>(r) - c);
    if (d_new < d_old || (d_new == d_old && ref.size() < r)) r = ref.size();
  }

  double log_sum = 0.0;
  int orders = 0;
  int zeros = 0;
  for (int n = 1; n <= cfg.max_n; ++n) {
    const NgramCounts cand = count_ngrams(candidate, n);
    const int t = total(cand);
    if (t == 0) break;  // candidate shorter than n; higher orders are empty too

    NgramCounts max_ref;
    for (const auto& ref : references) {
      for (const auto& [gram, cnt] : count_ngrams(ref, n)) {
        int& slot = max_ref[gram];
        slot = std::max(slot, cnt);
      }
    }
    const int m = clipped_overlap(cand, max_ref);

    double p = 0.0;
    if (m > 0) {
      p = static_cast<double>(m) / t;
    } else {
      switch (cfg.smoothing) {
        case BleuSmoothing::none:
          return 0.0;
        case BleuSmoothing::add_k:
          p = cfg.k / (t + cfg.k);
          break;
        case BleuSmoothing::exp_decay:
          p = std::ldexp(1.0, -(++zeros));
          break;
      }
    }
    log_sum += std::log(p);
    ++orders;
  }

  const double bp = c < static_cast<double>(r) ? std::exp(1.0 - static_cast<double>(r) / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / orders);
}

// ---------------------------------------------------------------- chrF

namespace {

struct OrderStats {
  int matches = 0;
  int cand_total = 0;
  int ref_total = 0;
};

using CharNgramCounts = std::unordered_map<std::u32string, int>;

CharNgramCounts count_char_ngrams(const std::u32string& chars, int n) {
  CharNgramCounts counts;
  const auto un = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + un <= chars.size(); ++i) ++counts[chars.substr(i, un)];
  return counts;
}

std::u32string strip_spaces(std::string_view text) {
  std::u32string out;
  for (char32_t cp : unicode::decode(text)) {
    if (!unicode::is_space(cp)) out.push_back(cp);
  }
  return out;
}

}  // namespace

double chrf(std::string_view candidate, std::string_view reference, const ChrfConfig& cfg) {
  cfg.validate();
  const std::u32string cand_chars = strip_spaces(candidate);
  const std::u32string ref_chars = strip_spaces(reference);
  if (cand_chars.empty() && ref_chars.empty()) return 100.0;
  if (cand_chars.empty() || ref_chars.empty()) return 0.0;

  std::vector<OrderStats> stats;
  for (int n = 1; n <= cfg.char_n; ++n) {
    const auto cand = count_char_ngrams(cand_chars, n);
    const auto ref = count_char_ngrams(ref_chars, n);
    OrderStats s;
    for (const auto& [gram, cnt] : cand) {
      s.cand_total += cnt;
      const auto it = ref.find(gram);
      if (it != ref.end()) s.matches += std::min(cnt, it->second);
    }
    for (const auto& [_, cnt] : ref) s.ref_total += cnt;
    stats.push_back(s);
  }
  if (cfg.word_n > 0) {
    const Tokens cand_words = tokenize_words(candidate, true);
    const Tokens ref_words = tokenize_words(reference, true);
    for (int n = 1; n <= cfg.word_n; ++n) {
      const auto cand = count_ngrams(cand_words, n);
      const auto ref = count_ngrams(ref_words, n);
      stats.push_back({clipped_overlap(cand, ref), total(cand), total(ref)});
    }
  }

  // An order contributes only if at least one side has n-grams of that length.
  double p_sum = 0.0;
  double r_sum = 0.0;
  int active = 0;
  for (const auto& s : stats) {
    if (s.cand_total == 0 && s.ref_total == 0) continue;
    p_sum += ratio(s.matches, s.cand_total);
    r_sum += ratio(s.matches, s.ref_total);
    ++active;
  }
  const double p = p_sum / active;
  const double r = r_sum / active;
  const double beta2 = cfg.beta * cfg.beta;
  const double denom = beta2 * p + r;
  if (denom <= 0.0) return 0.0;
  return 100.0 * (1.0 + beta2) * p * r / denom;
}

// ---------------------------------------------------------------- TER

namespace {

constexpr int kUnaligned = -1;

struct Alignment {
  int distance = 0;
  std::vector<int> ref_to_hyp;   ///< hyp index aligned to each ref token, or kUnaligned
  std::vector<bool> hyp_exact;   ///< hyp token sits on an exact match
};

Alignment align(TokenSpan hyp, TokenSpan ref) {
  const std::size_t nr = ref.size();
  const std::size_t nh = hyp.size();
  std::vector<int> dp((nr + 1) * (nh + 1));
  const auto at = [nh, &dp](std::size_t r, std::size_t h) -> int& { return dp[r * (nh + 1) + h]; };
  for (std::size_t r = 0; r <= nr; ++r) at(r, 0) = static_cast<int>(r);
  for (std::size_t h = 0; h <= nh; ++h) at(0, h) = static_cast<int>(h);
  for (std::size_t r = 1; r <= nr; ++r) {
    for (std::size_t h = 1; h <= nh; ++h) {
      const int diag = at(r - 1, h - 1) + (ref[r - 1] == hyp[h - 1] ? 0 : 1);
      at(r, h) = std::min({diag, at(r - 1, h) + 1, at(r, h - 1) + 1});
    }
  }

  Alignment out;
  out.distance = at(nr, nh);
  out.ref_to_hyp.assign(nr, kUnaligned);
  out.hyp_exact.assign(nh, false);
  std::size_t r = nr;
  std::size_t h = nh;
  while (r > 0 || h > 0) {
    if (r > 0 && h > 0) {
      const bool same = ref[r - 1] == hyp[h - 1];
      if (at(r, h) == at(r - 1, h - 1) + (same ? 0 : 1)) {
        out.ref_to_hyp[r - 1] = static_cast<int>(h - 1);
        out.hyp_exact[h - 1] = same;
        --r;
        --h;
        continue;
      }
    }
    if (r > 0 && at(r, h) == at(r - 1, h) + 1) {
      --r;  // deletion: ref token missing from hyp
    } else {
      --h;  // insertion: extra hyp token
    }
  }
  return out;
}

Tokens apply_shift(const Tokens& hyp, std::size_t start, std::size_t len, std::size_t dest) {
  Tokens out;
  out.reserve(hyp.size());
  std::vector<std::string> block(hyp.begin() + static_cast<std::ptrdiff_t>(start),
                                 hyp.begin() + static_cast<std::ptrdiff_t>(start + len));
  for (std::size_t i = 0; i <= hyp.size(); ++i) {
    if (i == dest) out.insert(out.end(), block.begin(), block.end());
    if (i < hyp.size() && (i < start || i >= start + len)) out.push_back(hyp[i]);
  }
  return out;
}

// Insertion points (in current hyp coordinates) that would line the block up
// with ref position k: just after whatever aligns with ref k-1, or right
// where ref k is currently aligned.
std::vector<std::size_t> destinations(const Alignment& a, std::size_t k) {
  std::vector<std::size_t> out;
  std::size_t after_prev = 0;
  for (std::size_t p = k; p-- > 0;) {
    if (a.ref_to_hyp[p] != kUnaligned) {
      after_prev = static_cast<std::size_t>(a.ref_to_hyp[p]) + 1;
      break;
    }
  }
  out.push_back(after_prev);
  if (a.ref_to_hyp[k] != kUnaligned) {
    const auto here = static_cast<std::size_t>(a.ref_to_hyp[k]);
    if (here != after_prev) out.push_back(here);
  }
  return out;
}

}  // namespace

double TerStats::score() const {
  return 100.0 * static_cast<double>(edits + shifts) / static_cast<double>(reference_length);
}

int edit_distance(TokenSpan hypothesis, TokenSpan reference) {
  std::vector<int> prev(hypothesis.size() + 1), cur(hypothesis.size() + 1);
  for (std::size_t h = 0; h <= hypothesis.size(); ++h) prev[h] = static_cast<int>(h);
  for (std::size_t r = 1; r <= reference.size(); ++r) {
    cur[0] = static_cast<int>(r);
    for (std::size_t h = 1; h <= hypothesis.size(); ++h) {
      const int sub = prev[h - 1] + (reference[r - 1] == hypothesis[h - 1] ? 0 : 1);
      cur[h] = std::min({sub, prev[h] + 1, cur[h - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hypothesis.size()];
}

TerStats ter_stats(TokenSpan candidate, TokenSpan reference, const TerConfig& cfg) {
  cfg.validate();
  if (reference.empty()) throw ValidationError("TER is undefined for an empty reference");

  const auto fold = [&](TokenSpan in) {
    Tokens out(in.begin(), in.end());
    if (!cfg.case_sensitive) {
      for (auto& t : out) t = unicode::to_lower(t);
    }
    return out;
  };
  Tokens hyp = fold(candidate);
  const Tokens ref = fold(reference);

  TerStats stats;
  stats.reference_length = ref.size();
  Alignment current = align(hyp, ref);

  if (cfg.shifts_enabled) {
    std::unordered_map<std::string, std::vector<std::size_t>> ref_positions;
    for (std::size_t k = 0; k < ref.size(); ++k) ref_positions[ref[k]].push_back(k);
    const auto max_len = static_cast<std::size_t>(cfg.max_shift_length);
    const auto max_dist = static_cast<std::size_t>(cfg.max_shift_distance);

    for (int iter = 0; iter < cfg.max_shift_iterations && current.distance > 0; ++iter) {
      int best_distance = current.distance;
      Tokens best_hyp;
      for (std::size_t i = 0; i < hyp.size(); ++i) {
        const auto hit = ref_positions.find(hyp[i]);
        if (hit == ref_positions.end()) continue;
        for (std::size_t k : hit->second) {
          const std::size_t dist = i > k ? i - k : k - i;
          if (dist > max_dist) continue;
          for (std::size_t len = 1; len <= max_len && i + len <= hyp.size() && k + len <= ref.size();
               ++len) {
            if (hyp[i + len - 1] != ref[k + len - 1]) break;
            bool in_place = true;
            for (std::size_t t = 0; t < len && in_place; ++t) {
              in_place = current.hyp_exact[i + t] &&
                         current.ref_to_hyp[k + t] == static_cast<int>(i + t);
            }
            if (in_place) continue;
            for (std::size_t dest : destinations(current, k)) {
              if (dest >= i && dest <= i + len) continue;  // no movement
              Tokens shifted = apply_shift(hyp, i, len, dest);
              const int d = edit_distance(shifted, ref);
              if (d < best_distance) {
                best_distance = d;
                best_hyp = std::move(shifted);
              }
            }
          }
        }
      }
      if (best_hyp.empty()) break;
      hyp = std::move(best_hyp);
      ++stats.shifts;
      current = align(hyp, ref);
    }
  }
  stats.edits = current.distance;
  return stats;
}

double ter(TokenSpan candidate, TokenSpan reference, const TerConfig& cfg) {
  return ter_stats(candidate, reference, cfg).score();
}

}  // namespace xlf::metrics
