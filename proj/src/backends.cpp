#include "xlf/backends.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "xlf/corpus.hpp"
#include "xlf/error.hpp"

namespace xlf {

using nlohmann::json;

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::libre_translate_api:
      return "libre_translate_api";
    case BackendKind::llm_chat_api:
      return "llm_chat_api";
    case BackendKind::mock:
      return "mock";
  }
  return "unknown";
}

BackendKind parse_backend_kind(std::string_view s) {
  if (s == "libre_translate_api") return BackendKind::libre_translate_api;
  if (s == "llm_chat_api") return BackendKind::llm_chat_api;
  if (s == "mock") return BackendKind::mock;
  throw ConfigError(fmt::format("unknown backend kind '{}'", s));
}

std::string_view to_string(MockMode m) {
  switch (m) {
    case MockMode::exact:
      return "exact";
    case MockMode::paraphrase:
      return "paraphrase";
    case MockMode::echo:
      return "echo";
  }
  return "unknown";
}

MockMode parse_mock_mode(std::string_view s) {
  if (s == "exact") return MockMode::exact;
  if (s == "paraphrase") return MockMode::paraphrase;
  if (s == "echo") return MockMode::echo;
  throw ConfigError(fmt::format("unknown mock mode '{}'", s));
}

void BackendConfig::validate() const {
  if (requests_per_minute <= 0) throw ConfigError(fmt::format("backend '{}': requests_per_minute must be > 0", name));
  if (!(timeout_seconds > 0.0)) throw ConfigError(fmt::format("backend '{}': timeout must be > 0", name));
  if (max_parallel_requests < 1 || max_parallel_requests > 1024) {
    throw ConfigError(fmt::format("backend '{}': max_parallel_requests must be in [1, 1024]", name));
  }
  if (kind != BackendKind::mock && endpoint.empty()) {
    throw ConfigError(fmt::format("backend '{}': endpoint is required", name));
  }
  if (kind == BackendKind::llm_chat_api && (!prompt_template || prompt_template->empty())) {
    throw ConfigError(fmt::format("backend '{}': llm_chat_api needs a prompt_template", name));
  }
}

std::string BackendConfig::identity() const {
  switch (kind) {
    case BackendKind::mock:
      return fmt::format("mock:{}{}", to_string(mock_mode), mock_tag ? ":tagged" : "");
    case BackendKind::libre_translate_api:
      return fmt::format("libre_translate_api:{}", endpoint);
    case BackendKind::llm_chat_api:
      return fmt::format("llm_chat_api:{}:{}", endpoint, model);
  }
  return "unknown";
}

std::optional<std::string> BackendConfig::effective_api_key() const {
  if (const char* env = std::getenv("XLF_API_KEY"); env != nullptr && *env != '\0') return std::string(env);
  return api_key;
}

// ---------------------------------------------------------------- Backend

namespace {

thread_local RequestTally* current_tally = nullptr;

BackendServices with_defaults(BackendServices s) {
  if (!s.clock) s.clock = std::make_shared<SystemClock>();
  if (!s.transport) s.transport = make_http_transport();
  return s;
}

std::string_view operation_name(int op) {
  static constexpr std::string_view names[] = {"translate", "correct", "paraphrase", "llm_translate"};
  return names[op];
}

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

void require_text(std::string_view text) {
  if (normalize_text(text).empty()) throw ValidationError("backend input text is empty");
}

}  // namespace

RequestTally::RequestTally() : previous_(current_tally) { current_tally = this; }

RequestTally::~RequestTally() { current_tally = previous_; }

Backend::Backend(BackendConfig config, BackendServices services)
    : config_(std::move(config)),
      services_(with_defaults(std::move(services))),
      limiter_(config_.requests_per_minute, services_.clock),
      in_flight_(config_.max_parallel_requests) {}

std::string Backend::translate(std::string_view text, std::string_view source_lang,
                               std::string_view target_lang) {
  require_text(text);
  if (source_lang == target_lang) {
    throw ValidationError(fmt::format("translate needs distinct languages, got {0}->{0}", source_lang));
  }
  return call(Operation::translate, text, source_lang, target_lang);
}

std::string Backend::correct_sentence(std::string_view text, std::string_view lang) {
  require_text(text);
  return call(Operation::correct, text, lang, lang);
}

std::string Backend::paraphrase(std::string_view text, std::string_view lang) {
  require_text(text);
  return call(Operation::paraphrase, text, lang, lang);
}

LlmTranslation Backend::llm_translate(std::string_view text, std::string_view source_lang,
                                      std::string_view target_lang) {
  if (config_.kind != BackendKind::llm_chat_api && config_.kind != BackendKind::mock) {
    throw ConfigError(fmt::format("backend '{}' ({}) cannot do one-shot LLM translation", config_.name,
                                  to_string(config_.kind)));
  }
  require_text(text);
  if (source_lang == target_lang) {
    throw ValidationError(fmt::format("translate needs distinct languages, got {0}->{0}", source_lang));
  }
  LlmTranslation out;
  out.text = call(Operation::llm_translate, text, source_lang, target_lang);
  out.hallucination = normalize_text(out.text) == normalize_text(text);
  return out;
}

std::string Backend::call(Operation op, std::string_view text, std::string_view source_lang,
                          std::string_view target_lang) {
  const std::string input = normalize_text(text);
  if (!services_.cache) return call_uncached(op, input, source_lang, target_lang);

  const CacheKey key{identity(), std::string(operation_name(static_cast<int>(op))),
                     std::string(source_lang), std::string(target_lang), input, cache_params(op)};
  if (auto hit = services_.cache->get(key)) {
    ++cache_hits_;
    return *hit;
  }
  std::string out = call_uncached(op, input, source_lang, target_lang);
  services_.cache->put(key, out);
  return out;
}

std::string Backend::call_uncached(Operation op, const std::string& text, std::string_view source_lang,
                                   std::string_view target_lang) {
  auto backoff = std::chrono::duration_cast<Clock::duration>(kInitialBackoff);
  for (int attempt = 1;; ++attempt) {
    if (config_.kind != BackendKind::mock) limiter_.acquire();
    try {
      std::string out;
      {
        SemaphoreGuard guard(in_flight_);
        ++requests_;
        for (RequestTally* t = current_tally; t != nullptr; t = t->previous_) ++t->count_;
        out = perform(op, text, source_lang, target_lang);
      }
      out = normalize_text(out);
      if (out.empty()) throw BackendError(fmt::format("backend '{}' returned an empty response", config_.name));
      return out;
    } catch (const RetryableError& e) {
      if (attempt >= kMaxAttempts) {
        throw BackendError(fmt::format("backend '{}' failed after {} attempts: {}", config_.name,
                                       attempt, e.what()));
      }
      spdlog::warn("backend '{}' attempt {} failed ({}); retrying", config_.name, attempt, e.what());
      services_.clock->sleep_for(backoff);
      backoff *= 2;
    }
  }
}

// ---------------------------------------------------------------- mock

namespace {

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::string join_ws(const std::vector<std::string>& tokens) {
  return fmt::format("{}", fmt::join(tokens, " "));
}

bool is_tag(std::string_view tok) { return tok.size() > 2 && tok.front() == '<' && tok.back() == '>'; }

void rotate_right(std::vector<std::string>& tokens, std::size_t from) {
  if (tokens.size() - from > 1) {
    std::rotate(tokens.begin() + static_cast<std::ptrdiff_t>(from), tokens.end() - 1, tokens.end());
  }
}

class MockBackend final : public Backend {
 public:
  using Backend::Backend;

 protected:
  std::string perform(Operation op, std::string_view text, std::string_view source_lang,
                      std::string_view target_lang) override {
    std::vector<std::string> tokens = split_ws(text);
    if (op == Operation::paraphrase) {
      rotate_right(tokens, !tokens.empty() && is_tag(tokens.front()) ? 1 : 0);
      return join_ws(tokens);
    }
    if (source_lang == target_lang || config().mock_mode == MockMode::echo) return std::string(text);

    bool returning = false;
    if (config().mock_tag && !tokens.empty() && tokens.front() == fmt::format("<{}>", source_lang)) {
      tokens.erase(tokens.begin());
      returning = true;
    }
    if (config().mock_mode == MockMode::exact) {
      std::reverse(tokens.begin(), tokens.end());
    } else {
      rotate_right(tokens, 0);
    }
    if (config().mock_tag && !returning) tokens.insert(tokens.begin(), fmt::format("<{}>", target_lang));
    return join_ws(tokens);
  }
};

// ---------------------------------------------------------------- HTTP

std::string trim_trailing_slash(std::string s) {
  while (!s.empty() && s.back() == '/') s.pop_back();
  return s;
}

std::string fill_template(std::string_view tmpl, std::string_view text, std::string_view source,
                          std::string_view target) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.compare(i, 6, "{text}") == 0) {
      out += text;
      i += 6;
    } else if (tmpl.compare(i, 8, "{source}") == 0) {
      out += source;
      i += 8;
    } else if (tmpl.compare(i, 8, "{target}") == 0) {
      out += target;
      i += 8;
    } else {
      out.push_back(tmpl[i++]);
    }
  }
  return out;
}

constexpr std::string_view kDefaultParaphraseTemplate =
    "Paraphrase the following {target} text. Keep its meaning, change the wording. "
    "Reply with the paraphrase only.\n\n{text}";

class HttpBackend : public Backend {
 public:
  using Backend::Backend;

 protected:
  HttpResponse post(const std::string& url, const json& body, const HttpHeaders& headers) {
    const auto timeout = std::chrono::milliseconds(static_cast<long long>(config().timeout_seconds * 1000));
    HttpResponse res;
    try {
      res = services().transport->post_json(url, body.dump(), headers, timeout);
    } catch (const TransportError& e) {
      throw RetryableError(e.what());
    }
    if (res.status == 429 || res.status >= 500) {
      throw RetryableError(fmt::format("HTTP {} from {}", res.status, url));
    }
    if (res.status < 200 || res.status >= 300) {
      throw BackendError(fmt::format("HTTP {} from {}: {}", res.status, url, res.body.substr(0, 200)));
    }
    return res;
  }
};

class LibreTranslateBackend final : public HttpBackend {
 public:
  using HttpBackend::HttpBackend;

 protected:
  std::string perform(Operation op, std::string_view text, std::string_view source_lang,
                      std::string_view target_lang) override {
    if (op == Operation::paraphrase) {
      throw BackendError(fmt::format("backend '{}' (libre_translate_api) cannot paraphrase", config().name));
    }
    json body{{"q", text}, {"source", source_lang}, {"target", target_lang}, {"format", "text"}};
    if (auto key = config().effective_api_key()) body["api_key"] = *key;
    const HttpResponse res = post(trim_trailing_slash(config().endpoint) + "/translate", body, {});
    try {
      const json j = json::parse(res.body);
      return j.at("translatedText").get<std::string>();
    } catch (const json::exception& e) {
      throw BackendError(fmt::format("unexpected translate response: {}", e.what()));
    }
  }
};

class LlmChatBackend final : public HttpBackend {
 public:
  using HttpBackend::HttpBackend;

 protected:
  std::string cache_params(Operation op) const override { return template_for(op); }

  std::string perform(Operation op, std::string_view text, std::string_view source_lang,
                      std::string_view target_lang) override {
    const std::string prompt = fill_template(template_for(op), text, source_lang, target_lang);
    json body{{"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
              {"temperature", 0}};
    if (!config().model.empty()) body["model"] = config().model;
    HttpHeaders headers;
    if (auto key = config().effective_api_key()) headers.emplace_back("Authorization", "Bearer " + *key);
    const HttpResponse res = post(config().endpoint, body, headers);
    return extract_chat_content(res.body);
  }

 private:
  std::string template_for(Operation op) const {
    if (op == Operation::paraphrase) {
      return config().paraphrase_template.value_or(std::string(kDefaultParaphraseTemplate));
    }
    return config().prompt_template.value_or("");
  }
};

}  // namespace

std::string extract_chat_content(std::string_view payload) {
  try {
    const json j = json::parse(payload.begin(), payload.end());
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(fmt::format("unexpected chat completion payload: {}", e.what()));
  }
}

std::unique_ptr<Backend> make_backend(BackendConfig config, BackendServices services) {
  config.validate();
  switch (config.kind) {
    case BackendKind::mock:
      return std::make_unique<MockBackend>(std::move(config), std::move(services));
    case BackendKind::libre_translate_api:
      return std::make_unique<LibreTranslateBackend>(std::move(config), std::move(services));
    case BackendKind::llm_chat_api:
      return std::make_unique<LlmChatBackend>(std::move(config), std::move(services));
  }
  throw ConfigError("unknown backend kind");
}

}  // namespace xlf
