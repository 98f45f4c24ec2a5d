#include "xlf/scorer.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "xlf/error.hpp"
#include "xlf/unicode.hpp"

namespace xlf {

using nlohmann::json;

std::string_view to_string(NeuralMetric m) {
  switch (m) {
    case NeuralMetric::bertscore:
      return "bertscore";
    case NeuralMetric::comet:
      return "comet";
  }
  return "unknown";
}

NeuralMetric parse_neural_metric(std::string_view name) {
  if (name == "bertscore") return NeuralMetric::bertscore;
  if (name == "comet") return NeuralMetric::comet;
  throw ValidationError(fmt::format("unknown neural metric '{}'", name));
}

void ScoreRequest::validate() const {
  if (pairs.empty()) throw ValidationError("score request has no pairs");
  if (metric == NeuralMetric::comet) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!pairs[i].source) throw ValidationError(fmt::format("comet pair {} has no source text", i));
    }
  }
}

namespace protocol {

namespace {

json parse_line(std::string_view line) {
  try {
    json j = json::parse(line.begin(), line.end());
    if (!j.is_object()) throw ProtocolError("protocol message is not a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ProtocolError(fmt::format("malformed protocol message: {}", e.what()));
  }
}

template <class T>
T field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) throw ProtocolError(fmt::format("protocol message lacks '{}'", name));
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(fmt::format("protocol field '{}' has the wrong type", name));
  }
}

std::optional<double> optional_number(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ProtocolError(fmt::format("score field '{}' is not a number", name));
  return it->get<double>();
}

}  // namespace

std::string encode_hello() { return json{{"v", kProtocolVersion}, {"hello", true}}.dump(); }

std::string encode_handshake(const Handshake& h) {
  json metrics = json::array();
  for (auto m : h.metrics) metrics.push_back(to_string(m));
  json j{{"v", h.version}, {"metrics", metrics}};
  if (!h.models.empty()) j["models"] = h.models;
  return j.dump();
}

Handshake decode_handshake(std::string_view line) {
  const json j = parse_line(line);
  Handshake h;
  h.version = field<int>(j, "v");
  if (h.version != kProtocolVersion) {
    throw ProtocolError(
        fmt::format("plugin speaks protocol v{}, host expects v{}", h.version, kProtocolVersion));
  }
  if (const auto it = j.find("error"); it != j.end()) {
    throw ProtocolError(fmt::format("plugin reported error: {}", it->dump()));
  }
  for (const auto& name : field<std::vector<std::string>>(j, "metrics")) {
    // Unknown metrics are ignored so newer plugins stay usable.
    if (name == "bertscore" || name == "comet") h.metrics.insert(parse_neural_metric(name));
  }
  if (const auto it = j.find("models"); it != j.end() && it->is_object()) {
    for (const auto& [k, v] : it->items()) h.models[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return h;
}

std::string encode_request(const ScoreRequest& req) {
  json pairs = json::array();
  for (const auto& p : req.pairs) {
    json jp{{"cand", p.candidate}, {"ref", p.reference}};
    if (p.source) jp["src"] = *p.source;
    pairs.push_back(std::move(jp));
  }
  return json{{"id", req.request_id}, {"metric", to_string(req.metric)}, {"pairs", pairs}}.dump();
}

ScoreRequest decode_request(std::string_view line) {
  const json j = parse_line(line);
  ScoreRequest req;
  req.request_id = field<std::int64_t>(j, "id");
  try {
    req.metric = parse_neural_metric(field<std::string>(j, "metric"));
  } catch (const ValidationError& e) {
    throw ProtocolError(e.what());
  }
  const auto it = j.find("pairs");
  if (it == j.end() || !it->is_array()) throw ProtocolError("request lacks a 'pairs' array");
  for (const auto& jp : *it) {
    ScorePair p{field<std::string>(jp, "cand"), field<std::string>(jp, "ref"), std::nullopt};
    if (const auto src = jp.find("src"); src != jp.end() && src->is_string()) p.source = src->get<std::string>();
    req.pairs.push_back(std::move(p));
  }
  return req;
}

std::string encode_response(const ScoreResponse& resp) {
  json scores = json::array();
  for (const auto& s : resp.scores) {
    json js = json::object();
    if (s.precision) js["p"] = *s.precision;
    if (s.recall) js["r"] = *s.recall;
    if (s.f1) js["f1"] = *s.f1;
    js["value"] = s.value;
    scores.push_back(std::move(js));
  }
  return json{{"id", resp.request_id}, {"scores", scores}}.dump();
}

ScoreResponse decode_response(std::string_view line) {
  const json j = parse_line(line);
  ScoreResponse resp;
  resp.request_id = field<std::int64_t>(j, "id");
  const auto it = j.find("scores");
  if (it == j.end() || !it->is_array()) throw ProtocolError("response lacks a 'scores' array");
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& js = (*it)[i];
    if (!js.is_object()) throw ProtocolError(fmt::format("score {} is not an object", i));
    if (const auto err = js.find("error"); err != js.end()) {
      throw ProtocolError(fmt::format("plugin failed to score pair {}: {}", i, err->dump()));
    }
    NeuralScore s;
    s.precision = optional_number(js, "p");
    s.recall = optional_number(js, "r");
    s.f1 = optional_number(js, "f1");
    const auto value = optional_number(js, "value");
    if (!value) throw ProtocolError(fmt::format("score {} has no 'value'", i));
    s.value = *value;
    resp.scores.push_back(s);
  }
  return resp;
}

}  // namespace protocol

// ---------------------------------------------------------------- PluginScorer

std::unique_ptr<PluginScorer> PluginScorer::start(std::string_view command_line,
                                                  std::chrono::milliseconds handshake_timeout) {
  Subprocess proc = Subprocess::spawn(split_command_line(command_line));
  proc.write_line(protocol::encode_hello());
  const auto line = proc.read_line(handshake_timeout);
  if (!line) throw TransportError("plugin exited before completing the handshake");
  auto hs = protocol::decode_handshake(*line);
  return std::unique_ptr<PluginScorer>(new PluginScorer(std::move(proc), std::move(hs)));
}

bool PluginScorer::supports(NeuralMetric metric) const { return handshake_.metrics.contains(metric); }

ScoreResponse PluginScorer::score_batch(const ScoreRequest& request) {
  request.validate();
  if (!supports(request.metric)) {
    throw ValidationError(fmt::format("plugin does not support metric '{}'", to_string(request.metric)));
  }
  if (broken_) throw TransportError("plugin connection is broken");

  std::optional<std::string> line;
  try {
    process_.write_line(protocol::encode_request(request));
    line = process_.read_line(request_timeout_);
  } catch (const TransportError&) {
    broken_ = true;
    throw;
  }
  if (!line) {
    broken_ = true;
    throw TransportError("plugin exited while a request was pending");
  }

  ScoreResponse resp = protocol::decode_response(*line);
  if (resp.request_id != request.request_id) {
    throw ProtocolError(fmt::format("response id {} does not match request id {}", resp.request_id,
                                    request.request_id));
  }
  if (resp.scores.size() != request.pairs.size()) {
    throw ProtocolError(fmt::format("plugin returned {} scores for {} pairs", resp.scores.size(),
                                    request.pairs.size()));
  }
  return resp;
}

void PluginScorer::shutdown() { process_.terminate(); }

// ---------------------------------------------------------------- mock

double char_bigram_dice(std::string_view a, std::string_view b) {
  const auto bigrams = [](std::string_view s) {
    const std::u32string cps = unicode::decode(s);
    std::vector<std::u32string> out;
    for (std::size_t i = 0; i + 1 < cps.size(); ++i) out.push_back(cps.substr(i, 2));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  const auto ba = bigrams(a);
  const auto bb = bigrams(b);
  if (ba.empty() && bb.empty()) return a == b ? 1.0 : 0.0;
  std::vector<std::u32string> common;
  std::set_intersection(ba.begin(), ba.end(), bb.begin(), bb.end(), std::back_inserter(common));
  return 2.0 * static_cast<double>(common.size()) / static_cast<double>(ba.size() + bb.size());
}

double mock_score(NeuralMetric metric, const ScorePair& pair) {
  const double dice = char_bigram_dice(pair.candidate, pair.reference);
  return metric == NeuralMetric::bertscore ? dice : 2.0 * dice - 1.0;
}

ScoreResponse MockScorer::score_batch(const ScoreRequest& request) {
  request.validate();
  if (!supports(request.metric)) {
    throw ValidationError(fmt::format("mock scorer does not support '{}'", to_string(request.metric)));
  }
  ScoreResponse resp{request.request_id, {}};
  const auto fixed = fixed_.find(request.metric);
  for (const auto& pair : request.pairs) {
    NeuralScore s;
    s.value = fixed != fixed_.end() ? fixed->second : mock_score(request.metric, pair);
    if (request.metric == NeuralMetric::bertscore) {
      s.precision = s.recall = s.f1 = s.value;
    }
    resp.scores.push_back(s);
  }
  return resp;
}

std::map<std::string, std::string> MockScorer::model_ids() const {
  std::map<std::string, std::string> ids;
  for (auto m : metrics_) ids[std::string(to_string(m))] = "mock-char-bigram-dice";
  return ids;
}

}  // namespace xlf
