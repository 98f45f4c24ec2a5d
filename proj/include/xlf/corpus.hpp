#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace xlf {

/// One source record: the `{id, document, summary}` entry of an XSUM-style JSON array.
struct Article {
  std::string id;
  std::string document;
  std::string summary;

  friend bool operator==(const Article&, const Article&) = default;
};

/// Ordered article collection. Ids are unique; order is preserved end to end.
struct Corpus {
  std::vector<Article> articles;
  std::string source_language = "en";
  std::string name;

  std::size_t size() const noexcept { return articles.size(); }
  bool empty() const noexcept { return articles.empty(); }
};

/// Train/validation/test ratios plus the shuffle seed.
struct SplitSpec {
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;

  /// Throws ValidationError unless every fraction is in [0,1] and they sum to 1 (within 1e-9).
  void validate() const;
};

struct CorpusSplit {
  Corpus train;
  Corpus validation;
  Corpus test;
};

/// Replaces newlines with spaces, collapses whitespace runs to one space and
/// trims both ends. Nothing else is touched.
std::string normalize_text(std::string_view raw);

/// Parses a JSON array of `{id, document, summary}` objects, normalizing both
/// text fields. Extra keys are ignored.
///
/// Throws ParseError (with byte offset) on malformed JSON and ValidationError
/// on missing/empty fields or duplicate ids.
Corpus load_corpus(std::string_view json_text, std::string name = {});
Corpus load_corpus_file(const std::filesystem::path& path);

/// Serializes to the same schema `load_corpus` reads.
std::string dump_corpus(const Corpus& corpus);

/// Seeded shuffle, then partition. Validation and test sizes are
/// round(fraction * N); train takes the remainder.
CorpusSplit split_corpus(const Corpus& corpus, const SplitSpec& spec);

/// Writes `<stem>.train.json`, `<stem>.validation.json` and `<stem>.test.json` into `dir`.
void write_split(const CorpusSplit& split, const std::filesystem::path& dir, std::string_view stem);

}  // namespace xlf
