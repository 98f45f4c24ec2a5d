#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include "xlf/cache.hpp"
#include "xlf/clock.hpp"
#include "xlf/error.hpp"
#include "xlf/http.hpp"
#include "xlf/rate_limiter.hpp"

namespace xlf {

enum class BackendKind { libre_translate_api, llm_chat_api, mock };

/// Behaviour of the offline mock.
///  - exact:      translation reverses the tokens, so a round trip is exact.
///  - paraphrase: every translation leg rotates the tokens right by one
///                instead, so round trips drift.
///  - echo:       translation returns its input unchanged.
enum class MockMode { exact, paraphrase, echo };

std::string_view to_string(BackendKind k);
BackendKind parse_backend_kind(std::string_view s);
std::string_view to_string(MockMode m);
MockMode parse_mock_mode(std::string_view s);

struct BackendConfig {
  std::string name;
  BackendKind kind = BackendKind::mock;
  std::string endpoint;
  std::optional<std::string> api_key;
  int requests_per_minute = 60;  ///< not enforced for the offline mock
  double timeout_seconds = 30.0;
  int max_parallel_requests = 4;

  // LLM kind. Placeholders: {text}, {source}, {target}.
  std::optional<std::string> prompt_template;
  std::optional<std::string> paraphrase_template;  ///< falls back to a built-in prompt
  std::string model;

  // Mock kind.
  MockMode mock_mode = MockMode::exact;
  /// Prefix translations with "<target>". A text carrying the "<source>" tag
  /// has it removed instead, so it comes back untagged.
  bool mock_tag = true;

  /// Throws ConfigError.
  void validate() const;

  /// Stable string naming what produces the output (no secrets).
  std::string identity() const;

  /// XLF_API_KEY from the environment wins over the configured key.
  std::optional<std::string> effective_api_key() const;
};

/// Shared infrastructure handed to every backend.
struct BackendServices {
  std::shared_ptr<ResponseCache> cache;      ///< optional
  std::shared_ptr<Clock> clock;              ///< defaults to SystemClock
  std::shared_ptr<HttpTransport> transport;  ///< defaults to cpp-httplib
};

struct LlmTranslation {
  std::string text;
  bool hallucination = false;  ///< the model echoed its input
};

/// Uniform client over one text-transformation service. Adds caching, rate
/// limiting, bounded concurrency and retries on top of `perform`.
/// Thread-safe.
class Backend {
 public:
  static constexpr int kMaxAttempts = 3;
  static constexpr std::chrono::seconds kInitialBackoff{1};

  Backend(BackendConfig config, BackendServices services);
  virtual ~Backend() = default;
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  /// Throws ValidationError on empty text or equal languages, BackendError on failure.
  std::string translate(std::string_view text, std::string_view source_lang, std::string_view target_lang);

  /// Same-language re-translation (lang -> lang), which tidies word formation.
  std::string correct_sentence(std::string_view text, std::string_view lang);

  std::string paraphrase(std::string_view text, std::string_view lang);

  /// Single-request translation with no correction afterwards. Only llm_chat_api and mock.
  LlmTranslation llm_translate(std::string_view text, std::string_view source_lang,
                               std::string_view target_lang);

  /// Number of attempts that reached the service (cache hits excluded).
  std::uint64_t request_count() const noexcept { return requests_.load(); }
  std::uint64_t cache_hits() const noexcept { return cache_hits_.load(); }

  const BackendConfig& config() const noexcept { return config_; }
  std::string identity() const { return config_.identity(); }

 protected:
  enum class Operation { translate, correct, paraphrase, llm_translate };

  /// One attempt. Throw RetryableError for transient failures, BackendError otherwise.
  virtual std::string perform(Operation op, std::string_view text, std::string_view source_lang,
                              std::string_view target_lang) = 0;

  /// Extra cache key material (e.g. prompt templates).
  virtual std::string cache_params(Operation) const { return {}; }

  class RetryableError : public BackendError {
   public:
    using BackendError::BackendError;
  };

  const BackendServices& services() const noexcept { return services_; }

 private:
  std::string call(Operation op, std::string_view text, std::string_view source_lang,
                   std::string_view target_lang);
  std::string call_uncached(Operation op, const std::string& text, std::string_view source_lang,
                            std::string_view target_lang);

  BackendConfig config_;
  BackendServices services_;
  RateLimiter limiter_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
};

/// Counts service requests issued by the current thread while alive.
/// Tallies nest; each sees the requests made during its own lifetime.
class RequestTally {
 public:
  RequestTally();
  ~RequestTally();
  RequestTally(const RequestTally&) = delete;
  RequestTally& operator=(const RequestTally&) = delete;

  std::uint64_t count() const noexcept { return count_; }

 private:
  friend class Backend;
  RequestTally* previous_;
  std::uint64_t count_ = 0;
};

/// Builds the backend matching `config.kind`. Validates the config first.
std::unique_ptr<Backend> make_backend(BackendConfig config, BackendServices services = {});

/// Extracts choices[0].message.content from an OpenAI-style chat completion.
/// Throws BackendError if the payload has another shape.
std::string extract_chat_content(std::string_view payload);

}  // namespace xlf
