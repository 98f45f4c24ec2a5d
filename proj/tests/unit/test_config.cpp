#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "xlf/config.hpp"
#include "xlf/error.hpp"

using namespace xlf;
using nlohmann::json;

namespace {

json sample() {
  return json::parse(R"({
    "version": 1,
    "corpus": "articles.json",
    "target_language": "hi",
    "backends": {
      "libre": {"kind": "libre_translate_api", "endpoint": "http://localhost:5000", "api_key": "secret"},
      "gpt": {"kind": "llm_chat_api", "endpoint": "https://api.example.com/v1/chat/completions",
              "model": "gpt-4o", "prompt_template": "Translate {text} from {source} to {target}"}
    },
    "strategies": {
      "S1": {"translator": "libre"},
      "S2": {"translator": "libre", "paraphraser": "gpt"},
      "S3": {"llm": "gpt"}
    },
    "gate": {"ter_max": 80, "bert_min": 0.9, "fields_required": "document_only"},
    "max_parallel_articles": 2
  })");
}

}  // namespace

TEST(RunConfig, ParsesSample) {
  const RunConfig c = parse_run_config(sample());
  EXPECT_EQ(c.corpus, "articles.json");
  EXPECT_EQ(c.backends.size(), 2u);
  EXPECT_EQ(c.backends.at("libre").kind, BackendKind::libre_translate_api);
  EXPECT_EQ(c.backends.at("libre").api_key, "secret");
  EXPECT_EQ(c.backends.at("gpt").model, "gpt-4o");
  EXPECT_EQ(c.strategies.at(StrategyId::S2).paraphraser, "gpt");
  EXPECT_EQ(c.gate.ter_max, 80.0);
  EXPECT_EQ(c.gate.fields_required, FieldsRequired::document_only);
  EXPECT_EQ(c.max_parallel_articles, 2);
  EXPECT_EQ(c.plugin_timeout_seconds, 120.0);
}

TEST(RunConfig, Defaults) {
  const RunConfig c = parse_run_config_text(R"({"version":1,"backends":{"m":{}},"strategies":{"S1":{"translator":"m"}}})");
  EXPECT_EQ(c.gate.ter_max, 100.0);
  EXPECT_EQ(c.gate.bert_min, 0.85);
  EXPECT_EQ(c.gate.fields_required, FieldsRequired::both);
  EXPECT_EQ(c.backends.at("m").kind, BackendKind::mock);
  EXPECT_EQ(c.source_language, "en");
}

TEST(RunConfig, Rejections) {
  const auto rejects = [](json j) { EXPECT_THROW(parse_run_config(j), ConfigError) << j.dump(); };
  json j = sample();
  j.erase("version");
  rejects(j);
  j = sample();
  j["version"] = 2;
  rejects(j);
  j = sample();
  j["colour"] = "blue";
  rejects(j);
  j = sample();
  j["backends"]["libre"]["retries"] = 9;
  rejects(j);
  j = sample();
  j["strategies"]["S4"] = json::object();
  rejects(j);
  j = sample();
  j["strategies"]["S3"]["llm"] = "missing";
  rejects(j);
  j = sample();
  j["strategies"]["S1"]["enabled"] = false;
  rejects(j);
  j = sample();
  j["strategies"]["S2"].erase("paraphraser");
  rejects(j);
  j = sample();
  j["gate"]["ter_max"] = "high";
  rejects(j);
  j = sample();
  j["gate"]["bert_min"] = 2;
  rejects(j);
  j = sample();
  j["target_language"] = "en";
  rejects(j);
  j = sample();
  j["max_parallel_articles"] = 0;
  rejects(j);
  EXPECT_THROW(parse_run_config_text("{"), ConfigError);
}

TEST(RunConfig, DisabledStrategyIsNotBuilt) {
  json j = sample();
  j["strategies"]["S3"] = {{"enabled", false}};
  const RunConfig c = parse_run_config(j);
  const auto built = build_strategies(c, {});
  EXPECT_TRUE(built.contains(StrategyId::S2));
  EXPECT_FALSE(built.contains(StrategyId::S3));
}

TEST(RunConfig, BuildSharesInstancesByName) {
  const auto built = build_strategies(parse_run_config(sample()), {});
  EXPECT_EQ(built.at(StrategyId::S1).translator, built.at(StrategyId::S2).translator);
  EXPECT_EQ(built.at(StrategyId::S2).paraphraser, built.at(StrategyId::S3).llm);
  EXPECT_EQ(built.at(StrategyId::S1).corrector, nullptr);
}

TEST(RunConfig, SerializationDropsSecrets) {
  const RunConfig c = parse_run_config(sample());
  const json out = to_json(c);
  EXPECT_EQ(out.dump().find("secret"), std::string::npos);
  const RunConfig again = parse_run_config(out);
  EXPECT_EQ(to_json(again), out);
}

TEST(BackendOverride, AllMock) {
  RunConfig c = parse_run_config(sample());
  apply_backend_override(c, "mock");
  for (const auto& [_, b] : c.backends) EXPECT_EQ(b.kind, BackendKind::mock);
  EXPECT_NO_THROW(c.validate());

  RunConfig empty;
  apply_backend_override(empty, "mock");
  EXPECT_EQ(empty.backends.size(), 1u);
  EXPECT_EQ(empty.strategies.size(), 3u);
}

TEST(BackendOverride, NamedValues) {
  RunConfig c = parse_run_config(sample());
  apply_backend_override(c, "libre=http://10.0.0.2:5000");
  EXPECT_EQ(c.backends.at("libre").endpoint, "http://10.0.0.2:5000");
  apply_backend_override(c, "gpt=mock:paraphrase");
  EXPECT_EQ(c.backends.at("gpt").kind, BackendKind::mock);
  EXPECT_EQ(c.backends.at("gpt").mock_mode, MockMode::paraphrase);
  EXPECT_THROW(apply_backend_override(c, "nobody=http://x"), ConfigError);
  EXPECT_THROW(apply_backend_override(c, "libre"), ConfigError);
  EXPECT_THROW(apply_backend_override(c, "=x"), ConfigError);
  EXPECT_THROW(apply_backend_override(c, "gpt=mock:loud"), ValidationError);
}

TEST(DefaultMockConfig, IsValid) {
  const RunConfig c = default_mock_config();
  EXPECT_NO_THROW(c.validate());
  const auto built = build_strategies(c, {});
  EXPECT_EQ(built.size(), 3u);
  EXPECT_EQ(built.at(StrategyId::S1).translator, built.at(StrategyId::S3).llm);
}
