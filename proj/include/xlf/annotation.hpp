#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "xlf/pipeline.hpp"

namespace xlf {

/// One needs_annotation record, presented with its best machine attempt.
struct AnnotationTask {
  std::string article_id;
  std::string source_document;
  std::string source_summary;
  std::string best_machine_document;
  std::string best_machine_summary;
  std::optional<StrategyId> best_stage;      ///< absent when no stage produced text
  std::optional<MetricReport> metric_snapshot;
};

struct AnnotationResult {
  std::string article_id;
  std::string corrected_document;
  std::string corrected_summary;
  std::optional<std::string> annotator;

  friend bool operator==(const AnnotationResult&, const AnnotationResult&) = default;
};

/// Index of the stage with the lowest document TER among scored stages
/// (ties go to the earlier stage). Falls back to the first stage that produced
/// text, or nullopt.
std::optional<std::size_t> best_stage_index(const PipelineRecord& record);

std::vector<AnnotationTask> annotation_tasks(const std::vector<PipelineRecord>& records);

/// doccano plain-text JSONL: {"text": <document>, "meta": {...}} per line.
std::string export_tasks(const std::vector<PipelineRecord>& records);

/// Parses annotated JSONL. Every line needs meta.article_id,
/// meta.corrected_document and meta.corrected_summary; meta.annotator is
/// optional. Throws ValidationError naming the line, or listing unknown ids
/// when `known_ids` is given.
std::vector<AnnotationResult> import_results(std::string_view jsonl,
                                             const std::optional<std::set<std::string>>& known_ids = std::nullopt);

/// Marks each targeted record accepted by a human. Throws ValidationError for
/// an unknown id or a record that is already accepted; on error nothing is
/// changed.
std::vector<PipelineRecord> merge(std::vector<PipelineRecord> records, const std::vector<AnnotationResult>& results);

}  // namespace xlf
