#include "xlf/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "xlf/error.hpp"
#include "xlf/io.hpp"
#include "xlf/metrics.hpp"

namespace xlf {

using nlohmann::json;

namespace {

std::optional<double> metric_value(const FieldScores& s, std::string_view metric) {
  if (metric == "bertscore") return s.bertscore;
  if (metric == "bleu") return s.bleu;
  if (metric == "chrf") return s.chrf;
  if (metric == "chrfpp") return s.chrfpp;
  if (metric == "ter") return s.ter;
  if (metric == "comet") return s.comet;
  return std::nullopt;
}

FieldAggregate summarize(const std::vector<double>& values) {
  FieldAggregate a;
  a.scored = values.size();
  if (values.empty()) return a;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  a.min = *lo;
  a.max = *hi;
  a.avg = total / static_cast<double>(values.size());
  return a;
}

// Half away from zero on the decimal expansion, so 0.8964385 prints as 0.896439.
std::string six_decimals(double v) {
  if (!std::isfinite(v)) return fmt::format("{}", v);
  std::string digits = fmt::format("{:.12f}", std::fabs(v));
  const std::size_t dot = digits.find('.');
  const bool round_up = digits[dot + 7] >= '5';
  digits = digits.substr(0, dot) + digits.substr(dot + 1, 6);
  std::uint64_t scaled = std::stoull(digits) + (round_up ? 1 : 0);
  const char* sign = (v < 0 && scaled != 0) ? "-" : "";
  return fmt::format("{}{}.{:06}", sign, scaled / 1000000, scaled % 1000000);
}

std::string cell(const std::optional<double>& v) { return v ? six_decimals(*v) : std::string("-"); }

json cell_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

AggregateTable aggregate_scores(const std::vector<PipelineRecord>& records, StrategyId strategy) {
  AggregateTable table;
  table.strategy = strategy;
  std::vector<const MetricReport*> reports;
  for (const auto& rec : records) {
    for (const auto& st : rec.stages) {
      if (st.result.strategy == strategy && st.report) reports.push_back(&*st.report);
    }
  }
  if (reports.empty()) {
    table.note = fmt::format("strategy {} has no scored stages", to_string(strategy));
    return table;
  }
  for (std::string_view metric : kReportMetrics) {
    std::vector<double> doc;
    std::vector<double> sum;
    for (const MetricReport* r : reports) {
      if (const auto v = metric_value(r->document, metric)) doc.push_back(*v);
      if (const auto v = metric_value(r->summary, metric)) sum.push_back(*v);
    }
    table.rows.push_back({std::string(metric), summarize(doc), summarize(sum)});
  }
  return table;
}

std::string render_text(const AggregateTable& table) {
  std::string out = fmt::format("{} scores\n", to_string(table.strategy));
  if (table.rows.empty()) return out + fmt::format("({})\n", table.note.value_or("no data"));
  constexpr int kWidth = 12;
  out += fmt::format("{:<10}", "Metric");
  for (const char* h : {"Doc-Min", "Doc-Max", "Doc-Avg", "Sum-Min", "Sum-Max", "Sum-Avg"}) {
    out += fmt::format("{:>{}}", h, kWidth);
  }
  out += fmt::format("{:>8}\n", "Scored");
  for (const auto& r : table.rows) {
    out += fmt::format("{:<10}", r.metric);
    for (const auto& v : {r.doc.min, r.doc.max, r.doc.avg, r.sum.min, r.sum.max, r.sum.avg}) {
      out += fmt::format("{:>{}}", cell(v), kWidth);
    }
    out += fmt::format("{:>8}\n", std::max(r.doc.scored, r.sum.scored));
  }
  return out;
}

std::string render_csv(const std::vector<AggregateTable>& tables) {
  std::string out = "strategy,metric,doc_min,doc_max,doc_avg,sum_min,sum_max,sum_avg,doc_scored,sum_scored\n";
  const auto csv_cell = [](const std::optional<double>& v) {
    return v ? six_decimals(*v) : std::string();
  };
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", to_string(t.strategy), r.metric, csv_cell(r.doc.min),
                         csv_cell(r.doc.max), csv_cell(r.doc.avg), csv_cell(r.sum.min), csv_cell(r.sum.max),
                         csv_cell(r.sum.avg), r.doc.scored, r.sum.scored);
    }
  }
  return out;
}

json to_json(const AggregateTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    const auto field = [](const FieldAggregate& a) {
      return json{{"min", cell_json(a.min)}, {"max", cell_json(a.max)}, {"avg", cell_json(a.avg)}, {"scored", a.scored}};
    };
    rows.push_back({{"metric", r.metric}, {"doc", field(r.doc)}, {"sum", field(r.sum)}});
  }
  json j{{"strategy", to_string(table.strategy)}, {"rows", rows}};
  if (table.note) j["note"] = *table.note;
  return j;
}

RougeTriple summary_fidelity(std::string_view document, std::string_view summary) {
  const metrics::Tokens doc = metrics::tokenize_words(document);
  const metrics::Tokens sum = metrics::tokenize_words(summary);
  return {metrics::rouge_n(sum, doc, 1).f1, metrics::rouge_n(sum, doc, 2).f1, metrics::rouge_l(sum, doc).f1};
}

std::vector<FidelityPoint> fidelity_comparison(const std::vector<PipelineRecord>& records) {
  std::vector<FidelityPoint> points;
  for (const auto& rec : records) {
    if (!rec.accepted_translation) continue;
    points.push_back({rec.article.id, summary_fidelity(rec.article.document, rec.article.summary),
                      summary_fidelity(rec.accepted_translation->document, rec.accepted_translation->summary)});
  }
  return points;
}

std::string render_fidelity_csv(const std::vector<FidelityPoint>& points) {
  std::string out = "article_id,source_rouge1,source_rouge2,source_rougeL,target_rouge1,target_rouge2,target_rougeL\n";
  for (const auto& p : points) {
    std::string id = p.article_id;
    if (id.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : id) {
        if (c == '"') quoted.push_back('"');
        quoted.push_back(c);
      }
      id = quoted + "\"";
    }
    out += fmt::format("{},{},{},{},{},{},{}\n", id, six_decimals(p.source.rouge1), six_decimals(p.source.rouge2),
                       six_decimals(p.source.rougeL), six_decimals(p.target.rouge1), six_decimals(p.target.rouge2),
                       six_decimals(p.target.rougeL));
  }
  return out;
}

Corpus published_corpus(const std::vector<PipelineRecord>& records, bool allow_partial, PublishStats* stats) {
  PublishStats local;
  PublishStats& s = stats ? *stats : local;
  s = PublishStats{};
  Corpus out;
  for (const auto& rec : records) {
    if (!rec.accepted_translation || !rec.accepted_by) {
      s.pending.push_back(rec.article.id);
      continue;
    }
    out.articles.push_back({rec.article.id, rec.accepted_translation->document, rec.accepted_translation->summary});
    ++s.counts[std::string(to_string(*rec.accepted_by))];
  }
  if (!s.pending.empty() && !allow_partial) {
    throw ValidationError(fmt::format("{} record(s) still need annotation: {}", s.pending.size(),
                                      fmt::join(s.pending, ", ")));
  }
  s.published = out.articles.size();
  return out;
}

PublishStats publish_dataset(const std::vector<PipelineRecord>& records, const std::filesystem::path& dir,
                             bool allow_partial, std::string_view target_language) {
  PublishStats stats;
  Corpus corpus = published_corpus(records, allow_partial, &stats);
  corpus.source_language = std::string(target_language);
  std::filesystem::create_directories(dir);
  io::write_file_atomic(dir / "dataset.json", dump_corpus(corpus));
  json counts = json::object();
  for (const auto& [k, v] : stats.counts) counts[k] = v;
  const json j{{"counts", counts},
               {"published", stats.published},
               {"pending", stats.pending},
               {"language", target_language}};
  io::write_file_atomic(dir / "dataset.stats.json", j.dump(2) + "\n");
  return stats;
}

}  // namespace xlf
