// Stand-in neural scorer plugin. Speaks the line-delimited JSON protocol on
// stdin/stdout and scores pairs by character-bigram overlap.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xlf/scorer.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mock BERTScore/COMET scorer plugin (stdio, JSON lines)"};
  std::string metrics = "bertscore,comet";
  std::optional<double> bertscore_value;
  std::optional<double> comet_value;
  int protocol_version = xlf::kProtocolVersion;
  bool silent = false;
  int crash_after = -1;
  app.add_option("--metrics", metrics, "Comma-separated metrics to advertise")->capture_default_str();
  app.add_option("--bertscore-value", bertscore_value, "Return this BERTScore for every pair");
  app.add_option("--comet-value", comet_value, "Return this COMET score for every pair");
  app.add_option("--protocol-version", protocol_version, "Protocol version to announce")->capture_default_str();
  app.add_flag("--silent", silent, "Read requests but never answer");
  app.add_option("--crash-after", crash_after, "Exit without answering after this many requests");
  CLI11_PARSE(app, argc, argv);

  std::set<xlf::NeuralMetric> advertised;
  std::stringstream names(metrics);
  for (std::string name; std::getline(names, name, ',');) {
    if (!name.empty()) advertised.insert(xlf::parse_neural_metric(name));
  }
  xlf::MockScorer scorer(advertised);
  if (bertscore_value) scorer.set_fixed_value(xlf::NeuralMetric::bertscore, *bertscore_value);
  if (comet_value) scorer.set_fixed_value(xlf::NeuralMetric::comet, *comet_value);

  std::string line;
  if (!std::getline(std::cin, line)) return 0;
  if (silent) {
    while (std::getline(std::cin, line)) {
    }
    return 0;
  }
  xlf::protocol::Handshake hs;
  hs.version = protocol_version;
  hs.metrics = advertised;
  hs.models = scorer.model_ids();
  std::cout << xlf::protocol::encode_handshake(hs) << '\n' << std::flush;

  int served = 0;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    if (crash_after >= 0 && served >= crash_after) return 3;
    ++served;
    std::int64_t id = 0;
    try {
      const xlf::ScoreRequest req = xlf::protocol::decode_request(line);
      id = req.request_id;
      xlf::ScoreResponse resp = scorer.score_batch(req);
      std::cout << xlf::protocol::encode_response(resp) << '\n' << std::flush;
    } catch (const std::exception& e) {
      std::cout << nlohmann::json{{"id", id}, {"error", e.what()}}.dump() << '\n' << std::flush;
    }
  }
  return 0;
}
