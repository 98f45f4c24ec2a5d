#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace xlf {

/// Everything that determines a backend's output.
struct CacheKey {
  std::string backend;       ///< backend identity (kind, endpoint, model, mode)
  std::string operation;     ///< translate / correct / paraphrase / llm_translate
  std::string source_lang;
  std::string target_lang;
  std::string text;          ///< normalized input text
  std::string params;        ///< anything else that shapes the request, e.g. the prompt template

  /// SHA-256 over a canonical JSON encoding of all fields.
  std::string digest() const;
};

/// Content-addressed on-disk cache, one JSON file per entry at
/// `<dir>/<first two hex chars>/<digest>.json`. Safe for concurrent use:
/// writes are atomic renames. An unreadable entry counts as a miss.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const CacheKey& key) const;
  void put(const CacheKey& key, const std::string& value) const;

  std::filesystem::path entry_path(const CacheKey& key) const;
  const std::filesystem::path& directory() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace xlf
