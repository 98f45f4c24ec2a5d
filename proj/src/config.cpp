#include "xlf/config.hpp"

#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "xlf/error.hpp"

namespace xlf {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
  }
}

const json& require_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
  return j;
}

template <class T>
T get_as(const json& j, std::string_view where) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("{}: wrong type ({})", where, j.type_name()));
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, std::string_view where) {
  if (const auto it = obj.find(key); it != obj.end()) out = get_as<T>(*it, fmt::format("{}.{}", where, key));
}

template <class T>
void read(const json& obj, const char* key, std::optional<T>& out, std::string_view where) {
  if (const auto it = obj.find(key); it != obj.end() && !it->is_null()) {
    out = get_as<T>(*it, fmt::format("{}.{}", where, key));
  }
}

BackendConfig parse_backend(const std::string& name, const json& j) {
  const std::string where = fmt::format("backends.{}", name);
  require_object(j, where);
  reject_unknown_keys(j,
                      {"kind", "endpoint", "api_key", "requests_per_minute", "timeout_seconds",
                       "max_parallel_requests", "prompt_template", "paraphrase_template", "model", "mock_mode",
                       "mock_tag"},
                      where);
  BackendConfig b;
  b.name = name;
  std::string kind = "mock";
  read(j, "kind", kind, where);
  b.kind = parse_backend_kind(kind);
  read(j, "endpoint", b.endpoint, where);
  read(j, "api_key", b.api_key, where);
  read(j, "requests_per_minute", b.requests_per_minute, where);
  read(j, "timeout_seconds", b.timeout_seconds, where);
  read(j, "max_parallel_requests", b.max_parallel_requests, where);
  read(j, "prompt_template", b.prompt_template, where);
  read(j, "paraphrase_template", b.paraphrase_template, where);
  read(j, "model", b.model, where);
  std::string mode = "exact";
  read(j, "mock_mode", mode, where);
  b.mock_mode = parse_mock_mode(mode);
  read(j, "mock_tag", b.mock_tag, where);
  return b;
}

StrategyAssignment parse_assignment(StrategyId id, const json& j) {
  const std::string where = fmt::format("strategies.{}", to_string(id));
  require_object(j, where);
  reject_unknown_keys(j, {"enabled", "translator", "corrector", "paraphraser", "llm"}, where);
  StrategyAssignment a;
  read(j, "enabled", a.enabled, where);
  read(j, "translator", a.translator, where);
  read(j, "corrector", a.corrector, where);
  read(j, "paraphraser", a.paraphraser, where);
  read(j, "llm", a.llm, where);
  return a;
}

}  // namespace

void RunConfig::validate() const {
  if (source_language.empty() || target_language.empty()) throw ConfigError("languages must be non-empty");
  if (source_language == target_language) throw ConfigError("source and target language must differ");
  if (max_parallel_articles < 1) throw ConfigError("max_parallel_articles must be >= 1");
  if (!(plugin_timeout_seconds > 0.0)) throw ConfigError("plugin_timeout_seconds must be > 0");
  gate.validate();
  for (const auto& [_, b] : backends) b.validate();

  const auto check_ref = [&](StrategyId id, const char* role, const std::string& name, bool required) {
    if (name.empty()) {
      if (required) throw ConfigError(fmt::format("strategy {} needs a {} backend", to_string(id), role));
      return;
    }
    if (!backends.contains(name)) {
      throw ConfigError(fmt::format("strategy {} references unknown backend '{}'", to_string(id), name));
    }
  };
  const auto s1 = strategies.find(StrategyId::S1);
  if (s1 == strategies.end() || !s1->second.enabled) throw ConfigError("strategy S1 must be enabled");
  for (const auto& [id, a] : strategies) {
    if (!a.enabled) continue;
    check_ref(id, "translator", a.translator, id != StrategyId::S3);
    check_ref(id, "corrector", a.corrector, false);
    check_ref(id, "paraphraser", a.paraphraser, id == StrategyId::S2);
    check_ref(id, "llm", a.llm, id == StrategyId::S3);
  }
}

RunConfig parse_run_config(const json& j) {
  require_object(j, "config");
  reject_unknown_keys(j,
                      {"version", "corpus", "source_language", "target_language", "backends", "strategies", "gate",
                       "plugin_cmd", "plugin_timeout_seconds", "cache_dir", "output_dir", "max_parallel_articles"},
                      "config");
  const auto version = j.find("version");
  if (version == j.end()) throw ConfigError("config: missing 'version'");
  if (!version->is_number_integer() || version->get<int>() != 1) {
    throw ConfigError(fmt::format("config: unsupported version {}", version->dump()));
  }

  RunConfig c;
  read(j, "corpus", c.corpus, "config");
  read(j, "source_language", c.source_language, "config");
  read(j, "target_language", c.target_language, "config");
  read(j, "plugin_cmd", c.plugin_cmd, "config");
  read(j, "plugin_timeout_seconds", c.plugin_timeout_seconds, "config");
  read(j, "cache_dir", c.cache_dir, "config");
  read(j, "output_dir", c.output_dir, "config");
  read(j, "max_parallel_articles", c.max_parallel_articles, "config");

  if (const auto it = j.find("backends"); it != j.end()) {
    for (const auto& [name, b] : require_object(*it, "backends").items()) c.backends[name] = parse_backend(name, b);
  }
  if (const auto it = j.find("strategies"); it != j.end()) {
    for (const auto& [name, s] : require_object(*it, "strategies").items()) {
      StrategyId id;
      try {
        id = parse_strategy(name);
      } catch (const ValidationError&) {
        throw ConfigError(fmt::format("strategies: unknown strategy '{}'", name));
      }
      c.strategies[id] = parse_assignment(id, s);
    }
  }
  if (const auto it = j.find("gate"); it != j.end()) {
    require_object(*it, "gate");
    reject_unknown_keys(*it, {"ter_max", "bert_min", "fields_required"}, "gate");
    read(*it, "ter_max", c.gate.ter_max, "gate");
    read(*it, "bert_min", c.gate.bert_min, "gate");
    std::string fields(to_string(c.gate.fields_required));
    read(*it, "fields_required", fields, "gate");
    c.gate.fields_required = parse_fields_required(fields);
  }
  c.validate();
  return c;
}

RunConfig parse_run_config_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  return parse_run_config(j);
}

RunConfig default_mock_config() {
  RunConfig c;
  BackendConfig mock;
  mock.name = "mock";
  mock.kind = BackendKind::mock;
  c.backends["mock"] = mock;
  c.strategies[StrategyId::S1] = {true, "mock", "", "", ""};
  c.strategies[StrategyId::S2] = {true, "mock", "", "mock", ""};
  c.strategies[StrategyId::S3] = {true, "", "", "", "mock"};
  return c;
}

void apply_backend_override(RunConfig& config, std::string_view spec) {
  if (spec == "mock") {
    for (auto& [name, b] : config.backends) {
      BackendConfig mock;
      mock.name = name;
      mock.kind = BackendKind::mock;
      b = mock;
    }
    if (config.backends.empty()) config = default_mock_config();
    return;
  }
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == spec.size()) {
    throw ConfigError(fmt::format("--backends expects 'mock' or <name>=<endpoint>, got '{}'", spec));
  }
  const std::string name(spec.substr(0, eq));
  const std::string_view value = spec.substr(eq + 1);
  const auto it = config.backends.find(name);
  if (it == config.backends.end()) throw ConfigError(fmt::format("--backends: unknown backend '{}'", name));
  if (value == "mock" || value.starts_with("mock:")) {
    BackendConfig mock;
    mock.name = name;
    mock.kind = BackendKind::mock;
    if (value.size() > 4) mock.mock_mode = parse_mock_mode(value.substr(5));
    it->second = mock;
  } else {
    it->second.endpoint = std::string(value);
  }
}

json to_json(const RunConfig& c) {
  json backends = json::object();
  for (const auto& [name, b] : c.backends) {
    json jb{{"kind", to_string(b.kind)},
            {"requests_per_minute", b.requests_per_minute},
            {"timeout_seconds", b.timeout_seconds},
            {"max_parallel_requests", b.max_parallel_requests}};
    if (!b.endpoint.empty()) jb["endpoint"] = b.endpoint;
    if (!b.model.empty()) jb["model"] = b.model;
    if (b.prompt_template) jb["prompt_template"] = *b.prompt_template;
    if (b.paraphrase_template) jb["paraphrase_template"] = *b.paraphrase_template;
    if (b.kind == BackendKind::mock) {
      jb["mock_mode"] = to_string(b.mock_mode);
      jb["mock_tag"] = b.mock_tag;
    }
    backends[name] = std::move(jb);
  }
  json strategies = json::object();
  for (const auto& [id, a] : c.strategies) {
    json js{{"enabled", a.enabled}};
    for (const auto& [key, value] :
         {std::pair{"translator", &a.translator}, {"corrector", &a.corrector}, {"paraphraser", &a.paraphraser},
          {"llm", &a.llm}}) {
      if (!value->empty()) js[key] = *value;
    }
    strategies[std::string(to_string(id))] = std::move(js);
  }
  json j{{"version", 1},
         {"source_language", c.source_language},
         {"target_language", c.target_language},
         {"backends", backends},
         {"strategies", strategies},
         {"gate",
          {{"ter_max", c.gate.ter_max},
           {"bert_min", c.gate.bert_min},
           {"fields_required", to_string(c.gate.fields_required)}}},
         {"plugin_timeout_seconds", c.plugin_timeout_seconds},
         {"max_parallel_articles", c.max_parallel_articles}};
  if (c.corpus) j["corpus"] = *c.corpus;
  if (c.plugin_cmd) j["plugin_cmd"] = *c.plugin_cmd;
  if (c.cache_dir) j["cache_dir"] = *c.cache_dir;
  if (c.output_dir) j["output_dir"] = *c.output_dir;
  return j;
}

std::map<StrategyId, StrategyBackends> build_strategies(const RunConfig& config, const BackendServices& services) {
  std::map<std::string, std::shared_ptr<Backend>> instances;
  const auto get = [&](const std::string& name) -> std::shared_ptr<Backend> {
    if (name.empty()) return nullptr;
    auto& slot = instances[name];
    if (!slot) slot = make_backend(config.backends.at(name), services);
    return slot;
  };
  std::map<StrategyId, StrategyBackends> out;
  for (const auto& [id, a] : config.strategies) {
    if (!a.enabled) continue;
    out[id] = {get(a.translator), get(a.corrector), get(a.paraphraser), get(a.llm)};
  }
  return out;
}

}  // namespace xlf
