#include "xlf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "xlf/error.hpp"
#include "xlf/io.hpp"

namespace xlf {

using nlohmann::json;

// ---------------------------------------------------------------- enums

std::string_view to_string(StrategyId s) {
  switch (s) {
    case StrategyId::S1:
      return "S1";
    case StrategyId::S2:
      return "S2";
    case StrategyId::S3:
      return "S3";
  }
  return "?";
}

StrategyId parse_strategy(std::string_view s) {
  if (s == "S1") return StrategyId::S1;
  if (s == "S2") return StrategyId::S2;
  if (s == "S3") return StrategyId::S3;
  throw ValidationError(fmt::format("unknown strategy '{}'", s));
}

std::string_view to_string(FieldsRequired f) {
  switch (f) {
    case FieldsRequired::document_only:
      return "document_only";
    case FieldsRequired::summary_only:
      return "summary_only";
    case FieldsRequired::both:
      return "both";
  }
  return "?";
}

FieldsRequired parse_fields_required(std::string_view s) {
  if (s == "document_only") return FieldsRequired::document_only;
  if (s == "summary_only") return FieldsRequired::summary_only;
  if (s == "both") return FieldsRequired::both;
  throw ConfigError(fmt::format("unknown fields_required '{}'", s));
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::accept:
      return "accept";
    case Verdict::escalate:
      return "escalate";
    case Verdict::human:
      return "human";
  }
  return "?";
}

namespace {

Verdict parse_verdict(std::string_view s) {
  if (s == "accept") return Verdict::accept;
  if (s == "escalate") return Verdict::escalate;
  if (s == "human") return Verdict::human;
  throw ValidationError(fmt::format("unknown verdict '{}'", s));
}

std::string_view to_string(TextField f) { return f == TextField::document ? "document" : "summary"; }

TextField parse_field(std::string_view s) {
  if (s == "document") return TextField::document;
  if (s == "summary") return TextField::summary;
  throw ValidationError(fmt::format("unknown text field '{}'", s));
}

}  // namespace

std::string_view to_string(AcceptedBy a) {
  switch (a) {
    case AcceptedBy::S1:
      return "S1";
    case AcceptedBy::S2:
      return "S2";
    case AcceptedBy::S3:
      return "S3";
    case AcceptedBy::human:
      return "human";
  }
  return "?";
}

AcceptedBy parse_accepted_by(std::string_view s) {
  if (s == "human") return AcceptedBy::human;
  switch (parse_strategy(s)) {
    case StrategyId::S1:
      return AcceptedBy::S1;
    case StrategyId::S2:
      return AcceptedBy::S2;
    case StrategyId::S3:
      return AcceptedBy::S3;
  }
  return AcceptedBy::human;
}

void GatePolicy::validate() const {
  if (!(ter_max > 0.0)) throw ConfigError("gate ter_max must be > 0");
  if (!(bert_min >= 0.0 && bert_min <= 1.0)) throw ConfigError("gate bert_min must be in [0,1]");
}

// ---------------------------------------------------------------- run_strategy

StageResult run_strategy(StrategyId strategy, const Article& article, const StrategyBackends& backends,
                         std::string_view source_lang, std::string_view target_lang) {
  StageResult r;
  r.article_id = article.id;
  r.strategy = strategy;

  const auto require = [&](const std::shared_ptr<Backend>& b, const char* role) -> Backend& {
    if (!b) throw ConfigError(fmt::format("strategy {} has no {} backend", to_string(strategy), role));
    return *b;
  };

  try {
    for (TextField field : {TextField::document, TextField::summary}) {
      const std::string& source = field == TextField::document ? article.document : article.summary;
      const auto step = [&](const char* name, std::string text) {
        r.steps.push_back({field, name, text});
        return text;
      };

      std::string target;
      std::string back;
      switch (strategy) {
        case StrategyId::S1: {
          Backend& tr = require(backends.translator, "translator");
          Backend& corr = backends.corrector ? *backends.corrector : tr;
          r.translation_backend = tr.identity();
          const auto fwd = step("forward", tr.translate(source, source_lang, target_lang));
          target = step("correct", corr.correct_sentence(fwd, target_lang));
          back = step("back", tr.translate(target, target_lang, source_lang));
          break;
        }
        case StrategyId::S2: {
          Backend& tr = require(backends.translator, "translator");
          Backend& para = require(backends.paraphraser, "paraphraser");
          Backend& corr = backends.corrector ? *backends.corrector : tr;
          r.translation_backend = tr.identity();
          const auto fwd = step("forward", tr.translate(source, source_lang, target_lang));
          const auto rephrased = step("paraphrase", para.paraphrase(fwd, target_lang));
          target = step("correct", corr.correct_sentence(rephrased, target_lang));
          back = step("back", tr.translate(target, target_lang, source_lang));
          break;
        }
        case StrategyId::S3: {
          Backend& llm = require(backends.llm, "llm");
          r.translation_backend = llm.identity();
          const LlmTranslation fwd = llm.llm_translate(source, source_lang, target_lang);
          r.hallucination_flag = r.hallucination_flag || fwd.hallucination;
          target = step("llm_forward", fwd.text);
          back = step("back", llm.translate(target, target_lang, source_lang));
          break;
        }
      }
      if (field == TextField::document) {
        r.forward_text = std::move(target);
        r.back_text = std::move(back);
      } else {
        r.forward_summary = std::move(target);
        r.back_summary = std::move(back);
      }
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

// ---------------------------------------------------------------- evaluate

namespace {

FieldScores lexical_scores(const std::string& candidate, const std::string& reference) {
  using namespace metrics;
  const Tokens cand = tokenize_words(candidate);
  const Tokens ref = tokenize_words(reference);
  FieldScores s;
  const std::vector<Tokens> refs{ref};
  s.bleu = bleu(cand, refs);
  s.chrf = chrf(candidate, reference, ChrfConfig::chrf());
  s.chrfpp = chrf(candidate, reference, ChrfConfig::chrf_plus_plus());
  s.ter = ter(cand, ref);
  return s;
}

}  // namespace

MetricReport evaluate_roundtrip(const Article& original, const StageResult& stage, Scorer* scorer) {
  if (!stage.ok()) throw ValidationError("cannot evaluate a failed stage");
  MetricReport report;
  report.document = lexical_scores(stage.back_text, original.document);
  report.summary = lexical_scores(stage.back_summary, original.summary);
  if (scorer == nullptr) return report;

  for (NeuralMetric metric : {NeuralMetric::bertscore, NeuralMetric::comet}) {
    if (!scorer->supports(metric)) continue;
    ScoreRequest req;
    req.metric = metric;
    req.pairs = {ScorePair{stage.back_text, original.document, stage.forward_text},
                 ScorePair{stage.back_summary, original.summary, stage.forward_summary}};
    try {
      const ScoreResponse resp = scorer->score_batch(req);
      auto& doc = metric == NeuralMetric::bertscore ? report.document.bertscore : report.document.comet;
      auto& sum = metric == NeuralMetric::bertscore ? report.summary.bertscore : report.summary.comet;
      doc = resp.scores.at(0).value;
      sum = resp.scores.at(1).value;
    } catch (const std::exception& e) {
      report.warnings.push_back(fmt::format("{} unavailable: {}", to_string(metric), e.what()));
    }
  }
  return report;
}

// ---------------------------------------------------------------- gate

GateDecision gate(const MetricReport& report, const GatePolicy& policy, bool is_last_stage) {
  GateDecision d;
  std::vector<TextField> fields;
  if (policy.fields_required != FieldsRequired::summary_only) fields.push_back(TextField::document);
  if (policy.fields_required != FieldsRequired::document_only) fields.push_back(TextField::summary);

  for (TextField f : fields) {
    const FieldScores& s = report.field(f);
    if (!(s.ter <= policy.ter_max)) d.failing_fields.push_back(fmt::format("{}.ter", to_string(f)));
    if (policy.ter_only) continue;
    if (!s.bertscore) {
      d.failing_fields.push_back(fmt::format("{}.bertscore_absent", to_string(f)));
    } else if (!(*s.bertscore >= policy.bert_min)) {
      d.failing_fields.push_back(fmt::format("{}.bertscore", to_string(f)));
    }
  }
  d.verdict = d.failing_fields.empty() ? Verdict::accept : (is_last_stage ? Verdict::human : Verdict::escalate);
  return d;
}

// ---------------------------------------------------------------- Pipeline

namespace {

/// Serializes access to a scorer and hands out request ids.
class LockedScorer final : public Scorer {
 public:
  explicit LockedScorer(std::shared_ptr<Scorer> inner) : inner_(std::move(inner)) {}

  bool supports(NeuralMetric metric) const override { return inner_->supports(metric); }

  ScoreResponse score_batch(const ScoreRequest& request) override {
    std::lock_guard lock(mutex_);
    ScoreRequest numbered = request;
    numbered.request_id = ++next_id_;
    return inner_->score_batch(numbered);
  }

  std::map<std::string, std::string> model_ids() const override { return inner_->model_ids(); }

 private:
  std::shared_ptr<Scorer> inner_;
  std::mutex mutex_;
  std::int64_t next_id_ = 0;
};

std::string redact_url(const std::string& url) {
  std::string out = url;
  if (const auto q = out.find('?'); q != std::string::npos) out = out.substr(0, q) + "?<redacted>";
  const auto scheme = out.find("://");
  const auto at = out.find('@');
  const auto slash = out.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (scheme != std::string::npos && at != std::string::npos && (slash == std::string::npos || at < slash)) {
    out = out.substr(0, scheme + 3) + "<redacted>@" + out.substr(at + 1);
  }
  return out;
}

json describe_backend(const Backend& b) {
  const BackendConfig& c = b.config();
  json j{{"name", c.name}, {"kind", to_string(c.kind)}, {"identity", redact_url(c.identity())}};
  if (!c.endpoint.empty()) j["endpoint"] = redact_url(c.endpoint);
  if (!c.model.empty()) j["model"] = c.model;
  if (c.kind == BackendKind::mock) j["mock_mode"] = to_string(c.mock_mode);
  return j;
}

}  // namespace

void PipelineConfig::validate() const {
  if (!strategies.contains(StrategyId::S1)) throw ConfigError("strategy S1 must be enabled");
  for (const auto& [id, b] : strategies) {
    switch (id) {
      case StrategyId::S1:
        if (!b.translator) throw ConfigError("S1 needs a translator backend");
        break;
      case StrategyId::S2:
        if (!b.translator || !b.paraphraser) throw ConfigError("S2 needs translator and paraphraser backends");
        if (b.paraphraser->config().kind == BackendKind::libre_translate_api) {
          throw ConfigError("S2 paraphraser cannot be a libre_translate_api backend");
        }
        break;
      case StrategyId::S3:
        if (!b.llm) throw ConfigError("S3 needs an llm backend");
        if (b.llm->config().kind == BackendKind::libre_translate_api) {
          throw ConfigError("S3 llm backend must be llm_chat_api or mock");
        }
        break;
    }
  }
  if (source_language == target_language) throw ConfigError("source and target language must differ");
  if (max_parallel_articles < 1) throw ConfigError("max_parallel_articles must be >= 1");
  policy.validate();
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)), policy_(config_.policy) {
  config_.validate();
  if (config_.scorer) {
    scorer_ = std::make_shared<LockedScorer>(config_.scorer);
  } else {
    policy_.ter_only = true;
  }
}

PipelineRecord Pipeline::run_cascade(const Article& article) {
  PipelineRecord record;
  record.article = article;

  std::vector<StrategyId> enabled;
  for (StrategyId s : kAllStrategies) {
    if (config_.strategies.contains(s)) enabled.push_back(s);
  }

  for (std::size_t i = 0; i < enabled.size(); ++i) {
    const StrategyId s = enabled[i];
    const bool is_last = i + 1 == enabled.size();
    StageAttempt attempt;
    {
      RequestTally tally;
      attempt.result = run_strategy(s, article, config_.strategies.at(s), config_.source_language,
                                    config_.target_language);
      std::lock_guard lock(stats_mutex_);
      stage_requests_[s] += tally.count();
    }

    if (!attempt.result.ok()) {
      attempt.decision = {is_last ? Verdict::human : Verdict::escalate, {"stage_error"}};
      record.notes.push_back(fmt::format("{} failed: {}", to_string(s), *attempt.result.error));
    } else {
      attempt.report = evaluate_roundtrip(article, attempt.result, scorer_.get());
      attempt.decision = gate(*attempt.report, policy_, is_last);
      if (attempt.result.hallucination_flag) {
        attempt.decision.failing_fields.push_back("hallucination");
        attempt.decision.verdict = is_last ? Verdict::human : Verdict::escalate;
      }
    }

    const bool accepted = attempt.decision.verdict == Verdict::accept;
    record.stages.push_back(std::move(attempt));
    if (accepted) {
      const StageResult& r = record.stages.back().result;
      record.final_status = FinalStatus::accepted;
      record.accepted_by = static_cast<AcceptedBy>(static_cast<int>(s));
      record.accepted_translation = AcceptedTranslation{r.forward_text, r.forward_summary};
      return record;
    }
  }
  record.final_status = FinalStatus::needs_annotation;
  return record;
}

RunResult Pipeline::run_corpus(const Corpus& corpus) {
  const std::string started_at = io::utc_timestamp();
  const std::size_t n = corpus.size();
  std::vector<PipelineRecord> records(n);
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const Article& a = corpus.articles[i];
      try {
        records[i] = run_cascade(a);
      } catch (const std::exception& e) {
        spdlog::error("article '{}' failed: {}", a.id, e.what());
        PipelineRecord failed;
        failed.article = a;
        failed.final_status = FinalStatus::needs_annotation;
        failed.notes.push_back(fmt::format("cascade aborted: {}", e.what()));
        records[i] = std::move(failed);
      }
    }
  };
  {
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config_.max_parallel_articles), n);
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  json manifest;
  manifest["version"] = 1;
  manifest["started_at"] = started_at;
  manifest["finished_at"] = io::utc_timestamp();
  manifest["config"] = describe_config();
  manifest["config_digest"] = config_digest();
  manifest["corpus"] = {{"name", corpus.name}, {"articles", n}};
  manifest["gating"] = policy_.ter_only ? "ter_only" : "ter+bertscore";
  json warnings = json::array();
  if (policy_.ter_only) {
    warnings.push_back("no neural scorer configured: gating on TER alone, BERTScore threshold ignored");
    spdlog::warn("no neural scorer configured; gating on TER alone");
  }
  manifest["warnings"] = warnings;

  json backends = json::array();
  std::set<const Backend*> seen;
  for (const auto& [_, b] : config_.strategies) {
    for (const auto* p : {b.translator.get(), b.corrector.get(), b.paraphraser.get(), b.llm.get()}) {
      if (p == nullptr || !seen.insert(p).second) continue;
      json jb = describe_backend(*p);
      jb["requests"] = p->request_count();
      jb["cache_hits"] = p->cache_hits();
      backends.push_back(std::move(jb));
    }
  }
  manifest["backends"] = backends;
  manifest["scorer_models"] = scorer_ ? json(scorer_->model_ids()) : json(nullptr);

  json stage_requests = json::object();
  {
    std::lock_guard lock(stats_mutex_);
    for (const auto& [s, count] : stage_requests_) stage_requests[std::string(to_string(s))] = count;
  }
  manifest["stage_requests"] = stage_requests;

  json outcomes{{"S1", 0}, {"S2", 0}, {"S3", 0}, {"human", 0}, {"needs_annotation", 0}};
  for (const auto& r : records) {
    if (r.accepted_by) {
      outcomes[std::string(to_string(*r.accepted_by))] = outcomes[std::string(to_string(*r.accepted_by))].get<int>() + 1;
    } else {
      outcomes["needs_annotation"] = outcomes["needs_annotation"].get<int>() + 1;
    }
  }
  manifest["outcomes"] = outcomes;
  manifest["provenance"] = config_.provenance;

  return {std::move(records), std::move(manifest)};
}

json Pipeline::describe_config() const {
  json strategies = json::object();
  for (const auto& [id, b] : config_.strategies) {
    json js = json::object();
    if (b.translator) js["translator"] = describe_backend(*b.translator);
    if (b.corrector) js["corrector"] = describe_backend(*b.corrector);
    if (b.paraphraser) js["paraphraser"] = describe_backend(*b.paraphraser);
    if (b.llm) js["llm"] = describe_backend(*b.llm);
    strategies[std::string(to_string(id))] = std::move(js);
  }
  return json{{"source_language", config_.source_language},
              {"target_language", config_.target_language},
              {"strategies", strategies},
              {"policy",
               {{"ter_max", policy_.ter_max},
                {"bert_min", policy_.bert_min},
                {"fields_required", to_string(policy_.fields_required)},
                {"ter_only", policy_.ter_only}}},
              {"max_parallel_articles", config_.max_parallel_articles}};
}

std::string Pipeline::config_digest() const {
  json j = describe_config();
  j["provenance"] = config_.provenance;
  return io::sha256_hex(j.dump());
}

// ---------------------------------------------------------------- persistence

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional_number(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

json field_json(const FieldScores& s) {
  return json{{"bertscore", optional_number(s.bertscore)},
              {"bleu", s.bleu},
              {"chrf", s.chrf},
              {"chrfpp", s.chrfpp},
              {"ter", s.ter},
              {"comet", optional_number(s.comet)}};
}

FieldScores field_from_json(const json& j) {
  FieldScores s;
  s.bertscore = read_optional_number(j, "bertscore");
  s.bleu = j.at("bleu").get<double>();
  s.chrf = j.at("chrf").get<double>();
  s.chrfpp = j.at("chrfpp").get<double>();
  s.ter = j.at("ter").get<double>();
  s.comet = read_optional_number(j, "comet");
  return s;
}

template <class T>
json optional_string(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

json to_json(const PipelineRecord& record) {
  json stages = json::array();
  for (const auto& st : record.stages) {
    const StageResult& r = st.result;
    json steps = json::array();
    for (const auto& s : r.steps) steps.push_back({{"field", to_string(s.field)}, {"step", s.step}, {"text", s.text}});
    json result{{"strategy", to_string(r.strategy)},
                {"forward_text", r.forward_text},
                {"forward_summary", r.forward_summary},
                {"back_text", r.back_text},
                {"back_summary", r.back_summary},
                {"hallucination_flag", r.hallucination_flag},
                {"steps", steps},
                {"translation_backend", r.translation_backend},
                {"error", optional_string(r.error)}};
    json report = nullptr;
    if (st.report) {
      report = {{"document", field_json(st.report->document)},
                {"summary", field_json(st.report->summary)},
                {"warnings", st.report->warnings}};
    }
    stages.push_back({{"strategy", to_string(r.strategy)},
                      {"result", result},
                      {"report", report},
                      {"decision",
                       {{"verdict", to_string(st.decision.verdict)},
                        {"failing_fields", st.decision.failing_fields}}}});
  }
  json accepted = nullptr;
  if (record.accepted_translation) {
    accepted = {{"document", record.accepted_translation->document},
                {"summary", record.accepted_translation->summary}};
  }
  return json{{"id", record.article.id},
              {"article",
               {{"id", record.article.id},
                {"document", record.article.document},
                {"summary", record.article.summary}}},
              {"stages", stages},
              {"final_status", record.final_status == FinalStatus::accepted ? "accepted" : "needs_annotation"},
              {"accepted_by", record.accepted_by ? json(to_string(*record.accepted_by)) : json(nullptr)},
              {"accepted_translation", accepted},
              {"annotator", optional_string(record.annotator)},
              {"notes", record.notes}};
}

PipelineRecord record_from_json(const json& j) {
  try {
    PipelineRecord rec;
    const json& a = j.at("article");
    rec.article = {a.at("id").get<std::string>(), a.at("document").get<std::string>(),
                   a.at("summary").get<std::string>()};
    for (const json& js : j.at("stages")) {
      StageAttempt st;
      const json& r = js.at("result");
      st.result.article_id = rec.article.id;
      st.result.strategy = parse_strategy(r.at("strategy").get<std::string>());
      st.result.forward_text = r.at("forward_text").get<std::string>();
      st.result.forward_summary = r.at("forward_summary").get<std::string>();
      st.result.back_text = r.at("back_text").get<std::string>();
      st.result.back_summary = r.at("back_summary").get<std::string>();
      st.result.hallucination_flag = r.at("hallucination_flag").get<bool>();
      for (const json& s : r.at("steps")) {
        st.result.steps.push_back(
            {parse_field(s.at("field").get<std::string>()), s.at("step").get<std::string>(), s.at("text").get<std::string>()});
      }
      st.result.translation_backend = r.value("translation_backend", "");
      if (const auto e = r.find("error"); e != r.end() && !e->is_null()) st.result.error = e->get<std::string>();
      if (const auto rep = js.find("report"); rep != js.end() && !rep->is_null()) {
        MetricReport m;
        m.document = field_from_json(rep->at("document"));
        m.summary = field_from_json(rep->at("summary"));
        m.warnings = rep->value("warnings", std::vector<std::string>{});
        st.report = std::move(m);
      }
      const json& d = js.at("decision");
      st.decision.verdict = parse_verdict(d.at("verdict").get<std::string>());
      st.decision.failing_fields = d.at("failing_fields").get<std::vector<std::string>>();
      rec.stages.push_back(std::move(st));
    }
    const std::string status = j.at("final_status").get<std::string>();
    if (status == "accepted") {
      rec.final_status = FinalStatus::accepted;
    } else if (status == "needs_annotation") {
      rec.final_status = FinalStatus::needs_annotation;
    } else {
      throw ValidationError(fmt::format("unknown final_status '{}'", status));
    }
    if (const auto it = j.find("accepted_by"); it != j.end() && !it->is_null()) {
      rec.accepted_by = parse_accepted_by(it->get<std::string>());
    }
    if (const auto it = j.find("accepted_translation"); it != j.end() && !it->is_null()) {
      rec.accepted_translation =
          AcceptedTranslation{it->at("document").get<std::string>(), it->at("summary").get<std::string>()};
    }
    if (const auto it = j.find("annotator"); it != j.end() && !it->is_null()) {
      rec.annotator = it->get<std::string>();
    }
    rec.notes = j.value("notes", std::vector<std::string>{});
    if ((rec.final_status == FinalStatus::accepted) != rec.accepted_translation.has_value()) {
      throw ValidationError(fmt::format("record '{}': accepted_translation inconsistent with final_status",
                                        rec.article.id));
    }
    return rec;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed pipeline record: {}", e.what()));
  }
}

std::string dump_records_jsonl(const std::vector<PipelineRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<PipelineRecord> load_records_jsonl(std::string_view text) {
  std::vector<PipelineRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ValidationError(fmt::format("records line {}: {}", lineno, e.what()));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("records line {}: {}", lineno, e.what()));
    }
  }
  return out;
}

}  // namespace xlf
