#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xlf/backends.hpp"
#include "xlf/corpus.hpp"
#include "xlf/metrics.hpp"
#include "xlf/scorer.hpp"

namespace xlf {

/// S1: translate -> correct -> back-translate.
/// S2: translate -> paraphrase (target language) -> correct -> back-translate.
/// S3: one-shot LLM translate -> back-translate.
enum class StrategyId { S1, S2, S3 };

inline constexpr std::array kAllStrategies{StrategyId::S1, StrategyId::S2, StrategyId::S3};

std::string_view to_string(StrategyId s);
StrategyId parse_strategy(std::string_view s);

enum class TextField { document, summary };

/// One intermediate text produced while running a strategy.
struct StepText {
  TextField field = TextField::document;
  std::string step;  ///< forward / correct / paraphrase / llm_forward / back
  std::string text;

  friend bool operator==(const StepText&, const StepText&) = default;
};

struct StageResult {
  std::string article_id;
  StrategyId strategy = StrategyId::S1;
  std::string forward_text;     ///< target-language document (final, after correction/paraphrase)
  std::string forward_summary;  ///< target-language summary
  std::string back_text;
  std::string back_summary;
  bool hallucination_flag = false;
  std::vector<StepText> steps;
  /// Identity of the backend used for the forward and back legs.
  std::string translation_backend;
  std::optional<std::string> error;  ///< set when a backend call failed

  bool ok() const noexcept { return !error.has_value(); }
};

/// Scores of one text field. Neural entries are absent (not zero) when no
/// scorer produced them.
struct FieldScores {
  std::optional<double> bertscore;
  double bleu = 0.0;
  double chrf = 0.0;
  double chrfpp = 0.0;
  double ter = 0.0;
  std::optional<double> comet;
};

struct MetricReport {
  FieldScores document;
  FieldScores summary;
  std::vector<std::string> warnings;

  const FieldScores& field(TextField f) const { return f == TextField::document ? document : summary; }
};

enum class FieldsRequired { document_only, summary_only, both };

std::string_view to_string(FieldsRequired f);
FieldsRequired parse_fields_required(std::string_view s);

struct GatePolicy {
  double ter_max = 100.0;
  double bert_min = 0.85;
  FieldsRequired fields_required = FieldsRequired::both;
  /// Gate on TER alone. Set when no neural scorer is configured.
  bool ter_only = false;

  void validate() const;
};

enum class Verdict { accept, escalate, human };

std::string_view to_string(Verdict v);

struct GateDecision {
  Verdict verdict = Verdict::escalate;
  std::vector<std::string> failing_fields;  ///< e.g. "document.ter", "summary.bertscore"

  friend bool operator==(const GateDecision&, const GateDecision&) = default;
};

struct StageAttempt {
  StageResult result;
  std::optional<MetricReport> report;  ///< absent when the stage failed
  GateDecision decision;
};

enum class FinalStatus { accepted, needs_annotation };

/// Who produced an accepted translation.
enum class AcceptedBy { S1, S2, S3, human };

std::string_view to_string(AcceptedBy a);
AcceptedBy parse_accepted_by(std::string_view s);

struct AcceptedTranslation {
  std::string document;
  std::string summary;

  friend bool operator==(const AcceptedTranslation&, const AcceptedTranslation&) = default;
};

/// Full history of one article through the cascade.
struct PipelineRecord {
  Article article;
  std::vector<StageAttempt> stages;
  FinalStatus final_status = FinalStatus::needs_annotation;
  std::optional<AcceptedBy> accepted_by;
  std::optional<AcceptedTranslation> accepted_translation;
  std::optional<std::string> annotator;  ///< set for human-annotated records
  std::vector<std::string> notes;

  bool needs_annotation() const noexcept { return final_status == FinalStatus::needs_annotation; }
};

/// Backends a strategy uses. The translator serves both legs of a round trip.
struct StrategyBackends {
  std::shared_ptr<Backend> translator;   ///< S1, S2
  std::shared_ptr<Backend> corrector;    ///< S1, S2; defaults to translator
  std::shared_ptr<Backend> paraphraser;  ///< S2
  std::shared_ptr<Backend> llm;          ///< S3: forward and back legs
};

// ---------------------------------------------------------------- operations

/// Runs one strategy over an article's document and summary. Backend failures
/// are caught and reported through StageResult::error.
StageResult run_strategy(StrategyId strategy, const Article& article, const StrategyBackends& backends,
                         std::string_view source_lang, std::string_view target_lang);

/// Lexical metrics of (back_text vs document) and (back_summary vs summary),
/// plus BERTScore/COMET when `scorer` is given and supports them. Scorer
/// failures leave neural entries absent and add a warning.
MetricReport evaluate_roundtrip(const Article& original, const StageResult& stage, Scorer* scorer);

/// accept iff every required field has ter <= ter_max and (unless ter_only)
/// bertscore >= bert_min; otherwise escalate, or human on the last stage.
GateDecision gate(const MetricReport& report, const GatePolicy& policy, bool is_last_stage);

struct PipelineConfig {
  std::string source_language = "en";
  std::string target_language = "hi";
  /// Enabled strategies. S1 is mandatory.
  std::map<StrategyId, StrategyBackends> strategies;
  GatePolicy policy;
  std::shared_ptr<Scorer> scorer;  ///< optional
  int max_parallel_articles = 4;
  /// Extra provenance merged into the manifest (plugin command, config path...).
  nlohmann::json provenance = nlohmann::json::object();

  /// Throws ConfigError.
  void validate() const;
};

struct RunResult {
  std::vector<PipelineRecord> records;
  nlohmann::json manifest;
};

/// Cascade runner. Shares one scorer across worker threads, serializing
/// access to it.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  /// Strategies in order until one is accepted; exhaustion means needs_annotation.
  PipelineRecord run_cascade(const Article& article);

  /// Runs every article with bounded parallelism. Output order is corpus order.
  /// A failing article becomes a needs_annotation record with a note.
  RunResult run_corpus(const Corpus& corpus);

  const PipelineConfig& config() const noexcept { return config_; }

  /// Policy actually applied (ter_only forced on when no scorer is configured).
  const GatePolicy& effective_policy() const noexcept { return policy_; }

  /// SHA-256 over the configuration as recorded in the manifest.
  std::string config_digest() const;

 private:
  nlohmann::json describe_config() const;

  PipelineConfig config_;
  GatePolicy policy_;
  std::shared_ptr<Scorer> scorer_;  ///< serialized wrapper around config_.scorer
  std::map<StrategyId, std::uint64_t> stage_requests_;
  std::mutex stats_mutex_;
};

// ---------------------------------------------------------------- persistence

nlohmann::json to_json(const PipelineRecord& record);
/// Throws ValidationError on a malformed record.
PipelineRecord record_from_json(const nlohmann::json& j);

/// One record per line.
std::string dump_records_jsonl(const std::vector<PipelineRecord>& records);
/// Throws ValidationError naming the offending line.
std::vector<PipelineRecord> load_records_jsonl(std::string_view text);

}  // namespace xlf
