#pragma once

// Host side of the neural scorer plugin protocol.
//
// A plugin is any executable speaking newline-delimited JSON on stdin/stdout:
//
//   host   -> {"v":1,"hello":true}
//   plugin -> {"v":1,"metrics":["bertscore","comet"],"models":{...}}
//   host   -> {"id":7,"metric":"bertscore","pairs":[{"cand":"...","ref":"..."}]}
//   plugin -> {"id":7,"scores":[{"p":0.91,"r":0.88,"f1":0.895,"value":0.895}]}
//
// COMET pairs also carry "src". One request is in flight per process.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "xlf/subprocess.hpp"

namespace xlf {

inline constexpr int kProtocolVersion = 1;

enum class NeuralMetric { bertscore, comet };

std::string_view to_string(NeuralMetric m);
/// Throws ValidationError on an unknown name.
NeuralMetric parse_neural_metric(std::string_view name);

struct ScorePair {
  std::string candidate;
  std::string reference;
  std::optional<std::string> source;
};

struct ScoreRequest {
  std::int64_t request_id = 0;
  NeuralMetric metric = NeuralMetric::bertscore;
  std::vector<ScorePair> pairs;

  /// Pairs must be non-empty; COMET pairs must carry a source.
  void validate() const;
};

struct NeuralScore {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  double value = 0.0;  ///< BERTScore F1, or the raw COMET score (may be negative)
};

struct ScoreResponse {
  std::int64_t request_id = 0;
  std::vector<NeuralScore> scores;
};

namespace protocol {

struct Handshake {
  int version = kProtocolVersion;
  std::set<NeuralMetric> metrics;
  std::map<std::string, std::string> models;
};

std::string encode_hello();
std::string encode_handshake(const Handshake& h);
/// Throws ProtocolError.
Handshake decode_handshake(std::string_view line);

std::string encode_request(const ScoreRequest& req);
ScoreRequest decode_request(std::string_view line);

std::string encode_response(const ScoreResponse& resp);
ScoreResponse decode_response(std::string_view line);

}  // namespace protocol

/// Anything that can produce neural metric scores.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual bool supports(NeuralMetric metric) const = 0;

  /// Scores align 1:1 with request pairs and are never clamped or rounded.
  virtual ScoreResponse score_batch(const ScoreRequest& request) = 0;

  /// Model identifiers for provenance (metric name -> model id).
  virtual std::map<std::string, std::string> model_ids() const { return {}; }
};

/// Scorer backed by a child process.
class PluginScorer final : public Scorer {
 public:
  static constexpr std::chrono::seconds kDefaultHandshakeTimeout{30};
  static constexpr std::chrono::seconds kDefaultRequestTimeout{600};

  /// Spawns the plugin and performs the handshake.
  /// Throws SpawnError, TransportError (timeout/early exit) or ProtocolError (version mismatch).
  static std::unique_ptr<PluginScorer> start(
      std::string_view command_line,
      std::chrono::milliseconds handshake_timeout = kDefaultHandshakeTimeout);

  bool supports(NeuralMetric metric) const override;

  /// Throws ValidationError for unsupported metrics (checked before anything is
  /// sent), TransportError if the plugin dies, ProtocolError on a malformed reply.
  ScoreResponse score_batch(const ScoreRequest& request) override;

  std::map<std::string, std::string> model_ids() const override { return handshake_.models; }

  void set_request_timeout(std::chrono::milliseconds t) { request_timeout_ = t; }

  /// Closes stdin and waits for the plugin to exit.
  void shutdown();

 private:
  PluginScorer(Subprocess proc, protocol::Handshake hs)
      : process_(std::move(proc)), handshake_(std::move(hs)) {}

  Subprocess process_;
  protocol::Handshake handshake_;
  std::chrono::milliseconds request_timeout_ = kDefaultRequestTimeout;
  bool broken_ = false;
};

/// Dice coefficient over the sets of character bigrams (code points).
/// Two strings without bigrams score 1 when equal, 0 otherwise.
double char_bigram_dice(std::string_view a, std::string_view b);

/// Offline stand-in: bertscore = Dice, comet = 2 * Dice - 1.
double mock_score(NeuralMetric metric, const ScorePair& pair);

/// In-process scorer using `mock_score`. Fixed values can be injected per
/// metric to test pass-through.
class MockScorer final : public Scorer {
 public:
  MockScorer() = default;
  explicit MockScorer(std::set<NeuralMetric> metrics) : metrics_(std::move(metrics)) {}

  void set_fixed_value(NeuralMetric metric, double value) { fixed_[metric] = value; }

  bool supports(NeuralMetric metric) const override { return metrics_.contains(metric); }
  ScoreResponse score_batch(const ScoreRequest& request) override;
  std::map<std::string, std::string> model_ids() const override;

 private:
  std::set<NeuralMetric> metrics_{NeuralMetric::bertscore, NeuralMetric::comet};
  std::map<NeuralMetric, double> fixed_;
};

}  // namespace xlf
