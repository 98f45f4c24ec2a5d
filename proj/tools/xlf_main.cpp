// xlf: build a translated summarization corpus by back-translation gating.

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "xlf/annotation.hpp"
#include "xlf/config.hpp"
#include "xlf/corpus.hpp"
#include "xlf/error.hpp"
#include "xlf/io.hpp"
#include "xlf/metrics.hpp"
#include "xlf/pipeline.hpp"
#include "xlf/report.hpp"
#include "xlf/scorer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDefaultOutputDir = "xlf-out";

struct IngestArgs {
  std::string input;
  std::string output_dir = kDefaultOutputDir;
  bool split = false;
  std::uint64_t seed = 0;
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct RunArgs {
  std::optional<std::string> input;
  std::optional<std::string> config;
  std::optional<std::string> output_dir;
  std::optional<std::string> cache_dir;
  std::vector<std::string> backends;
  std::optional<std::string> plugin_cmd;
  std::optional<double> ter_max;
  std::optional<double> bert_min;
  std::optional<std::string> fields_required;
  std::optional<int> max_parallel_articles;
  std::optional<std::string> target_language;
};

struct EvaluateArgs {
  std::string candidate;
  std::string reference;
  std::optional<std::string> plugin_cmd;
  std::optional<std::string> output_dir;
};

struct RecordsArgs {
  std::string records;
  std::string input;
  std::string output_dir = kDefaultOutputDir;
  bool allow_partial = false;
  std::string target_language = "hi";
};

std::vector<xlf::PipelineRecord> load_records(const std::string& path) {
  return xlf::load_records_jsonl(xlf::io::read_file(path));
}

std::shared_ptr<xlf::PluginScorer> start_plugin(const std::string& cmd, double timeout_seconds) {
  auto plugin = std::shared_ptr<xlf::PluginScorer>(xlf::PluginScorer::start(cmd).release());
  plugin->set_request_timeout(std::chrono::milliseconds(static_cast<std::int64_t>(timeout_seconds * 1000)));
  return plugin;
}

int cmd_ingest(const IngestArgs& a) {
  const xlf::Corpus corpus = xlf::load_corpus_file(a.input);
  const fs::path dir = a.output_dir;
  fs::create_directories(dir);
  const std::string stem = fs::path(a.input).stem().string();
  xlf::io::write_file_atomic(dir / (stem + ".normalized.json"), xlf::dump_corpus(corpus));
  fmt::print("{} articles validated; wrote {}\n", corpus.size(), (dir / (stem + ".normalized.json")).string());
  if (a.split) {
    const xlf::SplitSpec spec{a.train, a.validation, a.test, a.seed};
    const xlf::CorpusSplit split = xlf::split_corpus(corpus, spec);
    xlf::write_split(split, dir, stem);
    fmt::print("split (seed {}): train {}, validation {}, test {}\n", a.seed, split.train.size(),
               split.validation.size(), split.test.size());
  }
  return 0;
}

int cmd_run(const RunArgs& a) {
  xlf::RunConfig config;
  if (a.config) {
    config = xlf::parse_run_config_text(xlf::io::read_file(*a.config));
  } else if (!a.backends.empty()) {
    config = xlf::default_mock_config();
  } else {
    throw xlf::ConfigError("run needs --config or --backends mock");
  }
  for (const auto& spec : a.backends) xlf::apply_backend_override(config, spec);
  if (a.input) config.corpus = *a.input;
  if (a.output_dir) config.output_dir = *a.output_dir;
  if (a.cache_dir) config.cache_dir = *a.cache_dir;
  if (a.plugin_cmd) config.plugin_cmd = *a.plugin_cmd;
  if (a.ter_max) config.gate.ter_max = *a.ter_max;
  if (a.bert_min) config.gate.bert_min = *a.bert_min;
  if (a.fields_required) config.gate.fields_required = xlf::parse_fields_required(*a.fields_required);
  if (a.max_parallel_articles) config.max_parallel_articles = *a.max_parallel_articles;
  if (a.target_language) config.target_language = *a.target_language;
  config.validate();
  if (!config.corpus) throw xlf::ConfigError("no corpus given (--input or \"corpus\" in the config)");

  const xlf::Corpus corpus = xlf::load_corpus_file(*config.corpus);
  if (corpus.source_language != config.source_language) {
    spdlog::warn("corpus language '{}' differs from configured source '{}'", corpus.source_language,
                 config.source_language);
  }

  xlf::BackendServices services;
  if (config.cache_dir) services.cache = std::make_shared<xlf::ResponseCache>(*config.cache_dir);

  xlf::PipelineConfig pc;
  pc.source_language = config.source_language;
  pc.target_language = config.target_language;
  pc.strategies = xlf::build_strategies(config, services);
  pc.policy = config.gate;
  pc.max_parallel_articles = config.max_parallel_articles;
  std::shared_ptr<xlf::PluginScorer> plugin;
  if (config.plugin_cmd) {
    plugin = start_plugin(*config.plugin_cmd, config.plugin_timeout_seconds);
    pc.scorer = plugin;
  }
  pc.provenance = {{"run_config", xlf::to_json(config)}};

  xlf::Pipeline pipeline(std::move(pc));
  const xlf::RunResult result = pipeline.run_corpus(corpus);
  if (plugin) plugin->shutdown();

  const fs::path dir = config.output_dir.value_or(kDefaultOutputDir);
  fs::create_directories(dir);
  xlf::io::write_file_atomic(dir / "records.jsonl", xlf::dump_records_jsonl(result.records));
  xlf::io::write_file_atomic(dir / "manifest.json", result.manifest.dump(2) + "\n");

  const json& outcomes = result.manifest["outcomes"];
  fmt::print("{} articles: S1 {}, S2 {}, S3 {}, needs annotation {}\n", result.records.size(),
             outcomes["S1"].get<int>(), outcomes["S2"].get<int>(), outcomes["S3"].get<int>(),
             outcomes["needs_annotation"].get<int>());
  fmt::print("wrote {} and {}\n", (dir / "records.jsonl").string(), (dir / "manifest.json").string());
  return 0;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(xlf::io::read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

int cmd_evaluate(const EvaluateArgs& a) {
  const auto cands = read_lines(a.candidate);
  const auto refs = read_lines(a.reference);
  if (cands.size() != refs.size()) {
    throw xlf::ValidationError(
        fmt::format("candidate has {} lines but reference has {}", cands.size(), refs.size()));
  }
  std::shared_ptr<xlf::PluginScorer> plugin;
  if (a.plugin_cmd) plugin = start_plugin(*a.plugin_cmd, 600.0);

  std::map<std::string, std::vector<std::optional<double>>> columns;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto c = xlf::metrics::tokenize_words(cands[i]);
    const auto r = xlf::metrics::tokenize_words(refs[i]);
    if (r.empty()) throw xlf::ValidationError(fmt::format("reference line {} is empty", i + 1));
    const std::vector<xlf::metrics::Tokens> rs{r};
    columns["bleu"].push_back(xlf::metrics::bleu(c, rs));
    columns["chrf"].push_back(xlf::metrics::chrf(cands[i], refs[i], xlf::metrics::ChrfConfig::chrf()));
    columns["chrfpp"].push_back(xlf::metrics::chrf(cands[i], refs[i], xlf::metrics::ChrfConfig::chrf_plus_plus()));
    columns["ter"].push_back(xlf::metrics::ter(c, r));
    columns["rouge1"].push_back(xlf::metrics::rouge_n(c, r, 1).f1);
    columns["rouge2"].push_back(xlf::metrics::rouge_n(c, r, 2).f1);
    columns["rougeL"].push_back(xlf::metrics::rouge_l(c, r).f1);
  }
  if (plugin && !cands.empty()) {
    for (xlf::NeuralMetric m : {xlf::NeuralMetric::bertscore, xlf::NeuralMetric::comet}) {
      if (!plugin->supports(m)) continue;
      xlf::ScoreRequest req;
      req.request_id = static_cast<std::int64_t>(m) + 1;
      req.metric = m;
      for (std::size_t i = 0; i < cands.size(); ++i) req.pairs.push_back({cands[i], refs[i], refs[i]});
      if (m == xlf::NeuralMetric::comet) {
        spdlog::warn("evaluate has no source text; COMET uses the reference as source");
      }
      auto& col = columns[std::string(xlf::to_string(m))];
      for (const auto& s : plugin->score_batch(req).scores) col.push_back(s.value);
    }
    plugin->shutdown();
  }

  json segments = json::array();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    json seg{{"line", i + 1}};
    for (const auto& [name, col] : columns) seg[name] = col[i] ? json(*col[i]) : json(nullptr);
    segments.push_back(std::move(seg));
  }
  json means = json::object();
  fmt::print("{:<10}{:>14}\n", "Metric", "Mean");
  for (const auto& [name, col] : columns) {
    double total = 0.0;
    for (const auto& v : col) total += v.value_or(0.0);
    const double mean = col.empty() ? 0.0 : total / static_cast<double>(col.size());
    means[name] = mean;
    fmt::print("{:<10}{:>14.6f}\n", name, mean);
  }
  if (a.output_dir) {
    fs::create_directories(*a.output_dir);
    const json out{{"segments", segments}, {"mean", means}, {"lines", cands.size()}};
    xlf::io::write_file_atomic(fs::path(*a.output_dir) / "evaluation.json", out.dump(2) + "\n");
  }
  return 0;
}

int cmd_export(const RecordsArgs& a) {
  const auto records = load_records(a.records);
  const std::string jsonl = xlf::export_tasks(records);
  fs::create_directories(a.output_dir);
  const fs::path out = fs::path(a.output_dir) / "annotations.jsonl";
  xlf::io::write_file_atomic(out, jsonl);
  const auto tasks = std::count(jsonl.begin(), jsonl.end(), '\n');
  fmt::print("{} annotation task(s) written to {}\n", tasks, out.string());
  return 0;
}

int cmd_import(const RecordsArgs& a) {
  auto records = load_records(a.records);
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.article.id);
  const auto results = xlf::import_results(xlf::io::read_file(a.input), ids);
  records = xlf::merge(std::move(records), results);
  fs::create_directories(a.output_dir);
  const fs::path out = fs::path(a.output_dir) / "records.jsonl";
  xlf::io::write_file_atomic(out, xlf::dump_records_jsonl(records));
  const auto pending =
      std::count_if(records.begin(), records.end(), [](const auto& r) { return r.needs_annotation(); });
  fmt::print("merged {} annotation(s); {} record(s) still need annotation; wrote {}\n", results.size(), pending,
             out.string());
  return 0;
}

int cmd_report(const RecordsArgs& a) {
  const auto records = load_records(a.records);
  std::vector<xlf::AggregateTable> tables;
  json j_tables = json::array();
  std::string text;
  for (xlf::StrategyId s : xlf::kAllStrategies) {
    tables.push_back(xlf::aggregate_scores(records, s));
    j_tables.push_back(xlf::to_json(tables.back()));
    text += xlf::render_text(tables.back()) + "\n";
  }
  const auto fidelity = xlf::fidelity_comparison(records);
  const fs::path dir = a.output_dir;
  fs::create_directories(dir);
  xlf::io::write_file_atomic(dir / "report.json", json{{"tables", j_tables}, {"records", records.size()}}.dump(2) + "\n");
  xlf::io::write_file_atomic(dir / "report.csv", xlf::render_csv(tables));
  xlf::io::write_file_atomic(dir / "report.txt", text);
  xlf::io::write_file_atomic(dir / "fidelity.csv", xlf::render_fidelity_csv(fidelity));
  fmt::print("{}", text);
  return 0;
}

int cmd_publish(const RecordsArgs& a) {
  const auto records = load_records(a.records);
  const xlf::PublishStats stats = xlf::publish_dataset(records, a.output_dir, a.allow_partial, a.target_language);
  fmt::print("published {} article(s): S1 {}, S2 {}, S3 {}, human {}\n", stats.published, stats.counts.at("S1"),
             stats.counts.at("S2"), stats.counts.at("S3"), stats.counts.at("human"));
  if (!stats.pending.empty()) fmt::print("left out {} pending article(s)\n", stats.pending.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("xlf"));

  CLI::App app{"xlf: translated summarization corpus builder"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate and normalize a corpus, optionally split it");
  c_ingest->add_option("--input", ingest.input, "Corpus JSON array of {id, document, summary}")->required();
  c_ingest->add_option("--output-dir", ingest.output_dir, "Output directory")->capture_default_str();
  c_ingest->add_flag("--split", ingest.split, "Also write train/validation/test files");
  c_ingest->add_option("--seed", ingest.seed, "Shuffle seed for --split")->capture_default_str();
  c_ingest->add_option("--train-fraction", ingest.train, "Train share for --split")->capture_default_str();
  c_ingest->add_option("--validation-fraction", ingest.validation, "Validation share for --split")
      ->capture_default_str();
  c_ingest->add_option("--test-fraction", ingest.test, "Test share for --split")->capture_default_str();

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Run the S1 -> S2 -> S3 cascade over a corpus");
  c_run->add_option("--input", run.input, "Corpus file (overrides the config's \"corpus\")");
  c_run->add_option("--config", run.config, "Run configuration JSON (\"version\": 1)");
  c_run->add_option("--output-dir", run.output_dir, "Where records.jsonl and manifest.json go");
  c_run->add_option("--cache-dir", run.cache_dir, "Response cache directory");
  c_run->add_option("--backends", run.backends,
                    "Backend override: 'mock', '<name>=mock[:exact|paraphrase|echo]' or '<name>=<endpoint>'");
  c_run->add_option("--plugin-cmd", run.plugin_cmd, "Neural scorer plugin command line");
  c_run->add_option("--ter-max", run.ter_max, "Gate: maximum TER (percent)");
  c_run->add_option("--bert-min", run.bert_min, "Gate: minimum BERTScore F1");
  c_run->add_option("--fields-required", run.fields_required, "Gate: document_only, summary_only or both");
  c_run->add_option("--max-parallel-articles", run.max_parallel_articles, "Articles processed concurrently");
  c_run->add_option("--target-language", run.target_language, "Target language code");

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Score line-aligned candidate and reference files");
  c_eval->add_option("--candidate", eval.candidate, "Candidate file, one segment per line")->required();
  c_eval->add_option("--reference", eval.reference, "Reference file, one segment per line")->required();
  c_eval->add_option("--plugin-cmd", eval.plugin_cmd, "Neural scorer plugin command line");
  c_eval->add_option("--output-dir", eval.output_dir, "Write evaluation.json here");

  RecordsArgs exp;
  auto* c_export = app.add_subcommand("export-annotations", "Write doccano JSONL tasks for failing articles");
  c_export->add_option("--records", exp.records, "records.jsonl from 'run'")->required();
  c_export->add_option("--output-dir", exp.output_dir, "Output directory")->capture_default_str();

  RecordsArgs imp;
  auto* c_import = app.add_subcommand("import-annotations", "Merge corrected translations into the records");
  c_import->add_option("--records", imp.records, "records.jsonl from 'run'")->required();
  c_import->add_option("--input", imp.input, "Annotated JSONL")->required();
  c_import->add_option("--output-dir", imp.output_dir, "Where the merged records.jsonl goes")->capture_default_str();

  RecordsArgs rep;
  auto* c_report = app.add_subcommand("report", "Per-strategy score tables and ROUGE fidelity data");
  c_report->add_option("--records", rep.records, "records.jsonl")->required();
  c_report->add_option("--output-dir", rep.output_dir, "Output directory")->capture_default_str();

  RecordsArgs pub;
  auto* c_publish = app.add_subcommand("publish", "Write the translated dataset and its stats");
  c_publish->add_option("--records", pub.records, "records.jsonl")->required();
  c_publish->add_option("--output-dir", pub.output_dir, "Output directory")->capture_default_str();
  c_publish->add_flag("--allow-partial", pub.allow_partial, "Publish even if some articles still need annotation");
  c_publish->add_option("--target-language", pub.target_language, "Language recorded in the stats")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*c_ingest) return cmd_ingest(ingest);
    if (*c_run) return cmd_run(run);
    if (*c_eval) return cmd_evaluate(eval);
    if (*c_export) return cmd_export(exp);
    if (*c_import) return cmd_import(imp);
    if (*c_report) return cmd_report(rep);
    if (*c_publish) return cmd_publish(pub);
  } catch (const xlf::ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 1;
}
