#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xlf::metrics {

using Tokens = std::vector<std::string>;
using TokenSpan = std::span<const std::string>;

/// Precision, recall and F1, all in [0,1].
struct ScoreTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  /// Fills f1 = 2PR/(P+R), or 0 when P+R is 0.
  static ScoreTriple from(double precision, double recall);
};

struct ChrfConfig {
  double beta = 2.0;
  int char_n = 6;
  int word_n = 0;  ///< 0 is plain chrF, 2 is chrF++

  static ChrfConfig chrf() { return {}; }
  static ChrfConfig chrf_plus_plus() { return {2.0, 6, 2}; }
  void validate() const;
};

struct TerConfig {
  bool shifts_enabled = true;
  bool case_sensitive = false;
  int max_shift_distance = 50;
  /// Upper bound on greedy shift iterations.
  int max_shift_iterations = 1000;
  /// Longest block considered for a shift.
  int max_shift_length = 10;

  void validate() const;
};

enum class BleuSmoothing { none, add_k, exp_decay };

struct BleuConfig {
  int max_n = 4;
  BleuSmoothing smoothing = BleuSmoothing::exp_decay;
  double k = 1.0;  ///< only used by add_k

  void validate() const;
};

/// Splits on unicode whitespace, then splits every punctuation character into
/// its own token. Lowercases when `case_sensitive` is false.
Tokens tokenize_words(std::string_view text, bool case_sensitive = false);

/// ROUGE-N with clipped multiset overlap. Throws ValidationError for n == 0.
ScoreTriple rouge_n(TokenSpan candidate, TokenSpan reference, int n);

/// Length of the longest common subsequence, by dynamic programming.
std::size_t lcs_length(TokenSpan a, TokenSpan b);

/// ROUGE-L from the LCS length. Empty side gives all zeros.
ScoreTriple rouge_l(TokenSpan candidate, TokenSpan reference);

/// Single-segment BLEU in percent. Orders for which the candidate has no
/// n-grams are left out of the geometric mean; an empty candidate scores 0.
/// Throws ValidationError when `references` is empty.
double bleu(TokenSpan candidate, std::span<const Tokens> references, const BleuConfig& cfg = {});

/// chrF / chrF++ in percent. Character n-grams ignore whitespace; word
/// n-grams use case-sensitive `tokenize_words`.
double chrf(std::string_view candidate, std::string_view reference, const ChrfConfig& cfg = {});

/// Edit counts behind a TER score.
struct TerStats {
  int edits = 0;   ///< insertions + deletions + substitutions after shifting
  int shifts = 0;
  std::size_t reference_length = 0;

  double score() const;
};

/// Levenshtein distance on tokens (unit costs).
int edit_distance(TokenSpan hypothesis, TokenSpan reference);

TerStats ter_stats(TokenSpan candidate, TokenSpan reference, const TerConfig& cfg = {});

/// TER in percent, not clamped. Throws ValidationError on an empty reference.
double ter(TokenSpan candidate, TokenSpan reference, const TerConfig& cfg = {});

}  // namespace xlf::metrics
