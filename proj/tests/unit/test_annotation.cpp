#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "records.hpp"
#include "xlf/annotation.hpp"
#include "xlf/error.hpp"

using namespace xlf;
using fixtures::pending_record;
using fixtures::scored_stage;
using nlohmann::json;

namespace {

std::vector<json> lines(const std::string& jsonl) {
  std::vector<json> out;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    const auto end = jsonl.find('\n', start);
    out.push_back(json::parse(jsonl.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

std::string line_for(const std::string& id, const std::string& doc, const std::string& sum) {
  return json{{"text", doc}, {"meta", {{"article_id", id}, {"corrected_document", doc}, {"corrected_summary", sum}}}}
             .dump() +
         "\n";
}

std::vector<PipelineRecord> five_pending() {
  std::vector<PipelineRecord> out;
  for (int i = 0; i < 5; ++i) out.push_back(pending_record("a" + std::to_string(i), {scored_stage(StrategyId::S1, 120)}));
  return out;
}

std::size_t pending_count(const std::vector<PipelineRecord>& rs) {
  return static_cast<std::size_t>(std::count_if(rs.begin(), rs.end(), [](const auto& r) { return r.needs_annotation(); }));
}

}  // namespace

TEST(Export, EmptyWhenNothingFails) {
  EXPECT_EQ(export_tasks({}), "");
  EXPECT_EQ(export_tasks({fixtures::accepted_record("x", AcceptedBy::S1, "d", "s")}), "");
}

TEST(Export, BestStageIsLowestDocumentTer) {
  const auto rec = pending_record("a", {scored_stage(StrategyId::S1, 120), scored_stage(StrategyId::S2, 90),
                                        scored_stage(StrategyId::S3, 95)});
  EXPECT_EQ(best_stage_index(rec), 1u);
  const auto tasks = annotation_tasks({rec});
  ASSERT_EQ(tasks.size(), 1u);
  EXPECT_EQ(tasks[0].best_machine_document, "doc-S2");
  EXPECT_EQ(tasks[0].best_machine_summary, "sum-S2");
  EXPECT_EQ(tasks[0].best_stage, StrategyId::S2);
  ASSERT_TRUE(tasks[0].metric_snapshot.has_value());
  EXPECT_EQ(tasks[0].metric_snapshot->document.ter, 90.0);
}

TEST(Export, TieGoesToEarlierStage) {
  const auto rec = pending_record("a", {scored_stage(StrategyId::S1, 90), scored_stage(StrategyId::S3, 90)});
  EXPECT_EQ(best_stage_index(rec), 0u);
}

TEST(Export, UnscoredStagesFallBack) {
  StageAttempt failed;
  failed.result.strategy = StrategyId::S1;
  failed.result.error = "down";
  StageAttempt unscored;
  unscored.result.strategy = StrategyId::S3;
  unscored.result.forward_text = "text";
  EXPECT_EQ(best_stage_index(pending_record("a", {failed, unscored})), 1u);
  EXPECT_FALSE(best_stage_index(pending_record("a", {failed})).has_value());
  EXPECT_FALSE(best_stage_index(pending_record("a", {})).has_value());
}

TEST(Export, DoccanoSchema) {
  const auto rec = pending_record("a", {scored_stage(StrategyId::S1, 120), scored_stage(StrategyId::S2, 90)});
  const auto out = lines(export_tasks({rec}));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0]["text"], "doc-S2");
  const json& meta = out[0]["meta"];
  EXPECT_EQ(meta["article_id"], "a");
  EXPECT_EQ(meta["source_document"], "source document a");
  EXPECT_EQ(meta["source_summary"], "source summary a");
  EXPECT_EQ(meta["machine_summary"], "sum-S2");
  EXPECT_EQ(meta["best_stage"], "S2");
  EXPECT_EQ(meta["ter_doc"], 90.0);
}

TEST(Import, EmptyStream) {
  EXPECT_TRUE(import_results("").empty());
  EXPECT_TRUE(import_results("\n\n").empty());
}

TEST(Import, ParsesLines) {
  const std::string text =
      line_for("a", "doc a", "sum a") +
      json{{"text", "x"}, {"meta", {{"article_id", "b"}, {"corrected_document", "d"}, {"corrected_summary", "s"},
                                    {"annotator", "rk"}}}}
          .dump();
  const auto r = import_results(text);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], (AnnotationResult{"a", "doc a", "sum a", std::nullopt}));
  EXPECT_EQ(r[1].annotator, "rk");
}

TEST(Import, MissingFieldNamesTheLine) {
  const std::string bad = json{{"text", "x"}, {"meta", {{"article_id", "b"}, {"corrected_document", "d"}}}}.dump();
  try {
    import_results(line_for("a", "d", "s") + bad + "\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("corrected_summary"), std::string::npos) << e.what();
  }
  EXPECT_THROW(import_results("not json\n"), ValidationError);
  EXPECT_THROW(import_results(line_for("a", "  ", "s")), ValidationError);
  EXPECT_THROW(import_results(line_for("a", "d", "s") + line_for("a", "d", "s")), ValidationError);
}

TEST(Import, UnknownIdsAreListed) {
  const std::set<std::string> known{"a"};
  EXPECT_NO_THROW(import_results(line_for("a", "d", "s"), known));
  try {
    import_results(line_for("zz", "d", "s") + line_for("yy", "d", "s"), known);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("zz, yy"), std::string::npos) << e.what();
  }
}

TEST(Merge, ClosesTheRecord) {
  auto merged = merge({pending_record("a", {scored_stage(StrategyId::S1, 120)})},
                      {{"a", "fixed doc", "fixed sum", std::string("rk")}});
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0].final_status, FinalStatus::accepted);
  EXPECT_EQ(merged[0].accepted_by, AcceptedBy::human);
  EXPECT_EQ(merged[0].accepted_translation, (AcceptedTranslation{"fixed doc", "fixed sum"}));
  EXPECT_EQ(merged[0].annotator, "rk");
  EXPECT_EQ(merged[0].notes, std::vector<std::string>{"human-annotated"});
  EXPECT_EQ(merged[0].stages.size(), 1u);
}

TEST(Merge, RefusesToOverwriteAccepted) {
  std::vector<PipelineRecord> rs{fixtures::accepted_record("a", AcceptedBy::S1, "d", "s"),
                                 pending_record("b", {})};
  try {
    merge(rs, {{"b", "d", "s", {}}, {"a", "d", "s", {}}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("a"), std::string::npos);
  }
  EXPECT_THROW(merge(rs, {{"nope", "d", "s", {}}}), ValidationError);
}

TEST(Merge, PartialResults) {
  auto merged = merge(five_pending(), {{"a1", "d", "s", {}}, {"a3", "d", "s", {}}});
  EXPECT_EQ(pending_count(merged), 3u);
  EXPECT_EQ(merged.size(), 5u);
  EXPECT_EQ(merged[1].annotator, "unknown");
}

TEST(RoundTrip, UnmodifiedExportIsLossless) {
  std::vector<PipelineRecord> rs = five_pending();
  rs[2].stages.push_back(scored_stage(StrategyId::S3, 60));
  rs.push_back(fixtures::accepted_record("ok", AcceptedBy::S2, "d", "s"));

  std::string annotated;
  for (json line : lines(export_tasks(rs))) {
    line["meta"]["corrected_document"] = line["text"];
    line["meta"]["corrected_summary"] = line["meta"]["machine_summary"];
    annotated += line.dump() + "\n";
  }
  std::set<std::string> ids;
  for (const auto& r : rs) ids.insert(r.article.id);
  const auto merged = merge(rs, import_results(annotated, ids));

  EXPECT_EQ(pending_count(merged), 0u);
  ASSERT_EQ(merged.size(), rs.size());
  const auto tasks = annotation_tasks(rs);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    EXPECT_EQ(merged[i].accepted_translation->document, tasks[i].best_machine_document);
    EXPECT_EQ(merged[i].accepted_translation->summary, tasks[i].best_machine_summary);
  }
  EXPECT_EQ(merged[2].accepted_translation->document, "doc-S3");
  EXPECT_EQ(merged.back().accepted_by, AcceptedBy::S2);
}
