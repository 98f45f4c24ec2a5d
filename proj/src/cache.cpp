#include "xlf/cache.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "xlf/io.hpp"

namespace xlf {

using nlohmann::json;

namespace {

json key_json(const CacheKey& k) {
  return json{{"backend", k.backend}, {"operation", k.operation}, {"source", k.source_lang},
              {"target", k.target_lang}, {"text", k.text},         {"params", k.params}};
}

}  // namespace

std::string CacheKey::digest() const { return io::sha256_hex(key_json(*this).dump()); }

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::entry_path(const CacheKey& key) const {
  const std::string d = key.digest();
  return dir_ / d.substr(0, 2) / (d + ".json");
}

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
  const auto path = entry_path(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    const json entry = json::parse(ss.str());
    // Guard against digest collisions and hand-edited files alike.
    if (entry.at("key") != key_json(key)) {
      spdlog::warn("cache entry {} does not match its key; recomputing", path.string());
      return std::nullopt;
    }
    return entry.at("value").get<std::string>();
  } catch (const json::exception& e) {
    spdlog::warn("corrupt cache entry {} ({}); recomputing", path.string(), e.what());
    return std::nullopt;
  }
}

void ResponseCache::put(const CacheKey& key, const std::string& value) const {
  const json entry{{"key", key_json(key)}, {"value", value}, {"created_at", io::utc_timestamp()}};
  io::write_file_atomic(entry_path(key), entry.dump());
}

}  // namespace xlf
