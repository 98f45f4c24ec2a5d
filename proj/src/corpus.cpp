#include "xlf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "xlf/error.hpp"
#include "xlf/io.hpp"
#include "xlf/unicode.hpp"

namespace xlf {

using nlohmann::json;

void SplitSpec::validate() const {
  for (double f : {train_fraction, validation_fraction, test_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw ValidationError(fmt::format("split fraction {} outside [0,1]", f));
    }
  }
  const double sum = train_fraction + validation_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError(fmt::format("split fractions sum to {}, expected 1", sum));
  }
}

std::string normalize_text(std::string_view raw) {
  const std::u32string cps = unicode::decode(raw);
  std::u32string out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (unicode::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(cp);
  }
  return unicode::encode(out);
}

namespace {

std::string required_text(const json& entry, std::size_t index, const char* field) {
  const auto it = entry.find(field);
  if (it == entry.end()) {
    throw ValidationError(fmt::format("article {}: missing field '{}'", index, field));
  }
  if (!it->is_string()) {
    throw ValidationError(fmt::format("article {}: field '{}' is not a string", index, field));
  }
  std::string value = it->get<std::string>();
  if (std::string_view(field) != "id") value = normalize_text(value);
  if (value.empty()) {
    throw ValidationError(fmt::format("article {}: field '{}' is empty", index, field));
  }
  return value;
}

}  // namespace

Corpus load_corpus(std::string_view json_text, std::string name) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError(fmt::format("malformed corpus JSON at byte offset {}: {}", offset, e.what()), offset);
  }
  if (!doc.is_array()) throw ValidationError("corpus JSON must be an array");

  Corpus corpus;
  corpus.name = std::move(name);
  corpus.articles.reserve(doc.size());
  std::unordered_set<std::string> seen;
  std::vector<std::string> duplicates;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& entry = doc[i];
    if (!entry.is_object()) throw ValidationError(fmt::format("article {}: not an object", i));
    Article a{required_text(entry, i, "id"), required_text(entry, i, "document"),
              required_text(entry, i, "summary")};
    if (!seen.insert(a.id).second) duplicates.push_back(a.id);
    corpus.articles.push_back(std::move(a));
  }
  if (!duplicates.empty()) {
    throw ValidationError(fmt::format("duplicate article ids: {}", fmt::join(duplicates, ", ")));
  }
  return corpus;
}

Corpus load_corpus_file(const std::filesystem::path& path) {
  return load_corpus(io::read_file(path), path.stem().string());
}

std::string dump_corpus(const Corpus& corpus) {
  json arr = json::array();
  for (const auto& a : corpus.articles) {
    json entry = json::object();
    entry["id"] = a.id;
    entry["document"] = a.document;
    entry["summary"] = a.summary;
    arr.push_back(std::move(entry));
  }
  return arr.dump(2) + "\n";
}

CorpusSplit split_corpus(const Corpus& corpus, const SplitSpec& spec) {
  spec.validate();
  if (corpus.empty()) throw ValidationError("cannot split an empty corpus");

  const std::size_t n = corpus.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with raw mt19937_64 output: the engine sequence is fixed by
  // the standard, std::shuffle and the distributions are not.
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng() % (i + 1)]);
  }

  const auto rounded = [n](double f) {
    return static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
  };
  const std::size_t n_val = std::min(rounded(spec.validation_fraction), n);
  const std::size_t n_test = std::min(rounded(spec.test_fraction), n - n_val);
  const std::size_t n_train = n - n_val - n_test;

  CorpusSplit out;
  for (Corpus* part : {&out.train, &out.validation, &out.test}) {
    part->source_language = corpus.source_language;
  }
  out.train.name = corpus.name + ".train";
  out.validation.name = corpus.name + ".validation";
  out.test.name = corpus.name + ".test";

  std::size_t pos = 0;
  const auto take = [&](Corpus& part, std::size_t count) {
    std::vector<std::size_t> picked(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                    order.begin() + static_cast<std::ptrdiff_t>(pos + count));
    pos += count;
    // Keep corpus order inside each part.
    std::sort(picked.begin(), picked.end());
    for (std::size_t idx : picked) part.articles.push_back(corpus.articles[idx]);
  };
  take(out.train, n_train);
  take(out.validation, n_val);
  take(out.test, n_test);
  return out;
}

void write_split(const CorpusSplit& split, const std::filesystem::path& dir, std::string_view stem) {
  io::write_file_atomic(dir / fmt::format("{}.train.json", stem), dump_corpus(split.train));
  io::write_file_atomic(dir / fmt::format("{}.validation.json", stem), dump_corpus(split.validation));
  io::write_file_atomic(dir / fmt::format("{}.test.json", stem), dump_corpus(split.test));
}

}  // namespace xlf
