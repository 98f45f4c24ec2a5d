#include "xlf/annotation.hpp"

#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "xlf/corpus.hpp"
#include "xlf/error.hpp"

namespace xlf {

using nlohmann::json;

std::optional<std::size_t> best_stage_index(const PipelineRecord& record) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < record.stages.size(); ++i) {
    const auto& report = record.stages[i].report;
    if (!report) continue;
    if (!best || report->document.ter < record.stages[*best].report->document.ter) best = i;
  }
  if (best) return best;
  for (std::size_t i = 0; i < record.stages.size(); ++i) {
    const StageResult& r = record.stages[i].result;
    if (!r.forward_text.empty() || !r.forward_summary.empty()) return i;
  }
  return std::nullopt;
}

std::vector<AnnotationTask> annotation_tasks(const std::vector<PipelineRecord>& records) {
  std::vector<AnnotationTask> tasks;
  for (const auto& rec : records) {
    if (!rec.needs_annotation()) continue;
    AnnotationTask t;
    t.article_id = rec.article.id;
    t.source_document = rec.article.document;
    t.source_summary = rec.article.summary;
    if (const auto best = best_stage_index(rec)) {
      const StageAttempt& st = rec.stages[*best];
      t.best_stage = st.result.strategy;
      t.best_machine_document = st.result.forward_text;
      t.best_machine_summary = st.result.forward_summary;
      t.metric_snapshot = st.report;
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::string export_tasks(const std::vector<PipelineRecord>& records) {
  std::string out;
  for (const auto& t : annotation_tasks(records)) {
    json meta{{"article_id", t.article_id},
              {"source_document", t.source_document},
              {"source_summary", t.source_summary},
              {"machine_summary", t.best_machine_summary},
              {"best_stage", t.best_stage ? json(to_string(*t.best_stage)) : json(nullptr)},
              {"ter_doc", nullptr},
              {"bertscore_doc", nullptr}};
    if (t.metric_snapshot) {
      meta["ter_doc"] = t.metric_snapshot->document.ter;
      if (t.metric_snapshot->document.bertscore) meta["bertscore_doc"] = *t.metric_snapshot->document.bertscore;
    }
    out += json{{"text", t.best_machine_document}, {"meta", meta}}.dump();
    out.push_back('\n');
  }
  return out;
}

namespace {

std::string required_text(const json& meta, const char* key, std::size_t lineno) {
  const auto it = meta.find(key);
  if (it == meta.end() || !it->is_string()) {
    throw ValidationError(fmt::format("annotation line {}: missing string field 'meta.{}'", lineno, key));
  }
  std::string text = normalize_text(it->get<std::string>());
  if (text.empty()) throw ValidationError(fmt::format("annotation line {}: 'meta.{}' is empty", lineno, key));
  return text;
}

}  // namespace

std::vector<AnnotationResult> import_results(std::string_view jsonl,
                                             const std::optional<std::set<std::string>>& known_ids) {
  std::vector<AnnotationResult> results;
  std::set<std::string> seen;
  std::vector<std::string> unknown;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(fmt::format("annotation line {}: invalid JSON: {}", lineno, e.what()));
    }
    if (!j.is_object() || !j.contains("meta") || !j["meta"].is_object()) {
      throw ValidationError(fmt::format("annotation line {}: expected an object with a 'meta' object", lineno));
    }
    const json& meta = j["meta"];
    AnnotationResult r;
    const auto id = meta.find("article_id");
    if (id == meta.end() || !id->is_string() || id->get<std::string>().empty()) {
      throw ValidationError(fmt::format("annotation line {}: missing string field 'meta.article_id'", lineno));
    }
    r.article_id = id->get<std::string>();
    r.corrected_document = required_text(meta, "corrected_document", lineno);
    r.corrected_summary = required_text(meta, "corrected_summary", lineno);
    if (const auto a = meta.find("annotator"); a != meta.end() && a->is_string()) r.annotator = a->get<std::string>();
    if (!seen.insert(r.article_id).second) {
      throw ValidationError(fmt::format("annotation line {}: duplicate article id '{}'", lineno, r.article_id));
    }
    if (known_ids && !known_ids->contains(r.article_id)) unknown.push_back(r.article_id);
    results.push_back(std::move(r));
  }
  if (!unknown.empty()) throw ValidationError(fmt::format("unknown article ids: {}", fmt::join(unknown, ", ")));
  return results;
}

std::vector<PipelineRecord> merge(std::vector<PipelineRecord> records, const std::vector<AnnotationResult>& results) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].article.id, i);

  std::vector<std::string> unknown;
  std::vector<std::string> already;
  for (const auto& r : results) {
    const auto it = index.find(r.article_id);
    if (it == index.end()) {
      unknown.push_back(r.article_id);
    } else if (!records[it->second].needs_annotation()) {
      already.push_back(r.article_id);
    }
  }
  if (!unknown.empty()) throw ValidationError(fmt::format("unknown article ids: {}", fmt::join(unknown, ", ")));
  if (!already.empty()) {
    throw ValidationError(fmt::format("records already accepted, refusing to overwrite: {}", fmt::join(already, ", ")));
  }

  for (const auto& r : results) {
    PipelineRecord& rec = records[index.at(r.article_id)];
    rec.final_status = FinalStatus::accepted;
    rec.accepted_by = AcceptedBy::human;
    rec.accepted_translation = AcceptedTranslation{r.corrected_document, r.corrected_summary};
    rec.annotator = r.annotator.value_or("unknown");
    rec.notes.push_back("human-annotated");
  }
  return records;
}

}  // namespace xlf
