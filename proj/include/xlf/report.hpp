#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xlf/corpus.hpp"
#include "xlf/pipeline.hpp"

namespace xlf {

inline constexpr std::array<std::string_view, 6> kReportMetrics{"bertscore", "bleu", "chrf", "chrfpp", "ter", "comet"};

struct FieldAggregate {
  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> avg;
  std::size_t scored = 0;
};

/// One metric row of an aggregate score table, in the metric's native scale.
struct AggregateRow {
  std::string metric;
  FieldAggregate doc;
  FieldAggregate sum;
};

struct AggregateTable {
  StrategyId strategy = StrategyId::S1;
  std::vector<AggregateRow> rows;  ///< empty when the strategy never ran
  std::optional<std::string> note;
};

/// Min/max/mean over every stage of `strategy` that carries a MetricReport.
/// Absent neural scores are skipped and show up in `scored`.
AggregateTable aggregate_scores(const std::vector<PipelineRecord>& records, StrategyId strategy);

/// Aligned columns: Metric, Doc-Min, Doc-Max, Doc-Avg, Sum-Min, Sum-Max, Sum-Avg; six decimals.
std::string render_text(const AggregateTable& table);
std::string render_csv(const std::vector<AggregateTable>& tables);
nlohmann::json to_json(const AggregateTable& table);

struct RougeTriple {
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
};

/// ROUGE F1 of the summary against its document, in source and target language.
struct FidelityPoint {
  std::string article_id;
  RougeTriple source;
  RougeTriple target;
};

RougeTriple summary_fidelity(std::string_view document, std::string_view summary);

/// One point per accepted record, in record order.
std::vector<FidelityPoint> fidelity_comparison(const std::vector<PipelineRecord>& records);
std::string render_fidelity_csv(const std::vector<FidelityPoint>& points);

struct PublishStats {
  std::map<std::string, std::size_t> counts{{"S1", 0}, {"S2", 0}, {"S3", 0}, {"human", 0}};
  std::size_t published = 0;
  std::vector<std::string> pending;
};

/// Target-language corpus of accepted records, in record order. Throws
/// ValidationError listing pending ids unless `allow_partial`, in which case
/// they are left out.
Corpus published_corpus(const std::vector<PipelineRecord>& records, bool allow_partial, PublishStats* stats = nullptr);

/// Writes dataset.json and dataset.stats.json into `dir`.
PublishStats publish_dataset(const std::vector<PipelineRecord>& records, const std::filesystem::path& dir,
                             bool allow_partial, std::string_view target_language);

}  // namespace xlf
