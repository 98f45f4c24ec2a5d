// One PASS/FAIL line per primary acceptance criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"
#include "xlf/annotation.hpp"
#include "xlf/corpus.hpp"
#include "xlf/metrics.hpp"
#include "xlf/pipeline.hpp"
#include "xlf/report.hpp"
#include "xlf/scorer.hpp"

namespace m = xlf::metrics;
using Clock = std::chrono::steady_clock;

namespace {

class Criterion {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void near(double actual, double expected, double tol, const std::string& what) {
    expect(std::fabs(actual - expected) <= tol, fmt::format("{}: got {:.12g}, want {:.12g}", what, actual, expected));
  }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

m::Tokens toks(std::string_view s) { return m::tokenize_words(s); }

std::shared_ptr<xlf::Scorer> plugin(const std::string& extra_args = "") {
  return std::shared_ptr<xlf::Scorer>(xlf::PluginScorer::start(fmt::format("'{}' {}", XLF_MOCK_SCORER_PATH, extra_args)));
}

xlf::RunResult run(const xlf::Corpus& corpus, std::map<xlf::StrategyId, xlf::StrategyBackends> strategies,
                   std::shared_ptr<xlf::Scorer> scorer, double ter_max = 100.0) {
  xlf::PipelineConfig c;
  c.strategies = std::move(strategies);
  c.scorer = std::move(scorer);
  c.policy.ter_max = ter_max;
  return xlf::Pipeline(std::move(c)).run_corpus(corpus);
}

std::set<std::string> pending_ids(const std::vector<xlf::PipelineRecord>& records) {
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (r.needs_annotation()) ids.insert(r.article.id);
  }
  return ids;
}

std::set<std::string> exported_ids(const std::string& jsonl) {
  std::set<std::string> ids;
  std::istringstream in(jsonl);
  for (std::string line; std::getline(in, line);) {
    ids.insert(nlohmann::json::parse(line)["meta"]["article_id"].get<std::string>());
  }
  return ids;
}

// ---------------------------------------------------------------- criteria

void metric_oracle_suite(Criterion& c) {
  const auto t0 = Clock::now();
  const auto r1 = m::rouge_n(toks("the cat sat"), toks("the cat ran"), 1);
  c.near(r1.precision, 2.0 / 3.0, 1e-9, "rouge-1 P");
  c.near(r1.recall, 2.0 / 3.0, 1e-9, "rouge-1 R");
  c.near(r1.f1, 2.0 / 3.0, 1e-9, "rouge-1 F1");
  const auto r2 = m::rouge_n(toks("the cat sat"), toks("the cat ran"), 2);
  c.near(r2.f1, 0.5, 1e-9, "rouge-2 F1");
  const auto rl = m::rouge_l(toks("the cat sat on mat"), toks("the cat on mat"));
  c.expect(m::lcs_length(toks("the cat sat on mat"), toks("the cat on mat")) == 4, "rouge-L LCS length");
  c.near(rl.recall, 1.0, 1e-9, "rouge-L R");
  c.near(rl.precision, 0.8, 1e-9, "rouge-L P");
  c.near(rl.f1, 16.0 / 18.0, 1e-9, "rouge-L F1");

  xlf::metrics::BleuConfig unigram;
  unigram.max_n = 1;
  unigram.smoothing = m::BleuSmoothing::none;
  const std::vector<m::Tokens> refs{toks("the cat sat down")};
  c.near(m::bleu(toks("the the the the"), refs, unigram), 25.0, 1e-4, "BLEU clipped precision");

  m::ChrfConfig chars{2.0, 1, 0};
  c.near(m::chrf("abc", "abd", chars), 200.0 / 3.0, 1e-4, "chrF hand case");

  c.near(m::ter(toks("a b x d"), toks("a b c d")), 25.0, 1e-4, "TER one substitution");
  c.near(m::ter(toks("b a c d"), toks("a b c d")), 25.0, 1e-4, "TER one shift");
  m::TerConfig no_shift;
  no_shift.shifts_enabled = false;
  c.near(m::ter(toks("b a c d"), toks("a b c d"), no_shift), 50.0, 1e-4, "TER shifts off");
  c.near(xlf::char_bigram_dice("abcd", "abce"), 2.0 / 3.0, 1e-9, "mock Dice");

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 1.0, fmt::format("took {:.3f} s", elapsed));
}

std::string random_word(std::mt19937& rng, std::size_t alphabet) {
  static const std::vector<std::string> words{"a", "b", "c", "d", "e", "f", "g", "h"};
  return words[std::uniform_int_distribution<std::size_t>(0, alphabet - 1)(rng)];
}

void randomized_oracles(Criterion& c) {
  std::mt19937 rng(20240601);
  std::uniform_int_distribution<std::size_t> len(0, 10);
  std::uniform_int_distribution<std::size_t> alpha(2, 8);
  m::TerConfig no_shift;
  no_shift.shifts_enabled = false;
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = alpha(rng);
    oracle::Tokens a;
    oracle::Tokens b;
    for (std::size_t n = len(rng); n > 0; --n) a.push_back(random_word(rng, k));
    for (std::size_t n = std::max<std::size_t>(1, len(rng)); n > 0; --n) b.push_back(random_word(rng, k));
    if (std::fabs(m::rouge_l(a, b).f1 - oracle::rouge_l_f1(a, b)) > 1e-12) {
      ++mismatches;
      c.expect(false, fmt::format("rouge-L mismatch: [{}] vs [{}]", fmt::join(a, " "), fmt::join(b, " ")));
    }
    const double want = 100.0 * oracle::edit_distance(a, b) / static_cast<double>(b.size());
    if (std::fabs(m::ter(a, b, no_shift) - want) > 1e-9) {
      ++mismatches;
      c.expect(false, fmt::format("TER mismatch: [{}] vs [{}]", fmt::join(a, " "), fmt::join(b, " ")));
    }
  }
  c.expect(mismatches == 0, fmt::format("{} mismatches", mismatches));
}

void identity_properties(Criterion& c) {
  static const std::vector<std::string> pieces{"a", "b", "Z", "7", "ß", "é", "न", "म", "स्ते", "!", ",", "-", " ", "  "};
  std::mt19937 rng(99);
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> len(1, 30);
  int failures = 0;
  for (int i = 0; i < 100; ++i) {
    std::string x;
    for (int n = len(rng); n > 0; --n) x += pieces[pick(rng)];
    x += pieces[pick(rng) % 12];
    const m::Tokens t = toks(x);
    const std::vector<m::Tokens> refs{t};
    const bool ok = m::chrf(x, x) == 100.0 && m::ter(t, t) == 0.0 && std::fabs(m::bleu(t, refs) - 100.0) < 1e-9 &&
                    m::rouge_n(t, t, 1).f1 == 1.0;
    if (!ok) {
      ++failures;
      c.expect(false, fmt::format("identity failed for '{}'", x));
    }
  }
  c.expect(failures == 0, fmt::format("{} failures", failures));
}

void ter_unclamped(Criterion& c) {
  const m::Tokens ref = toks("the bridge opens in spring");
  m::Tokens cand;
  for (int i = 0; i < 10; ++i) cand.insert(cand.end(), ref.begin(), ref.end());
  const double t = m::ter(cand, ref);
  c.expect(t > 100.0, fmt::format("ter = {}", t));
  c.near(t, 900.0, 1e-9, "10x candidate");
}

struct EndToEnd {
  xlf::Corpus corpus;
  std::vector<xlf::PipelineRecord> paraphrase_records;
};

void offline_end_to_end(Criterion& c, EndToEnd& out) {
  const auto t0 = Clock::now();
  out.corpus = xlf::load_corpus(xlf::dump_corpus(fixtures::synthetic_corpus(25)), "synthetic");
  const auto& corpus = out.corpus;
  c.expect(corpus.size() == 25, "corpus has 25 articles");

  const auto exact =
      run(corpus, fixtures::mock_strategies(xlf::MockMode::exact, xlf::MockMode::exact), plugin());
  std::size_t at_s1 = 0;
  for (const auto& r : exact.records) at_s1 += r.accepted_by == xlf::AcceptedBy::S1 && r.stages.size() == 1;
  c.expect(at_s1 == 25, fmt::format("{}/25 accepted at S1", at_s1));
  c.expect(exact.manifest["gating"] == "ter+bertscore", "neural gating active");

  const xlf::AggregateTable table = xlf::aggregate_scores(exact.records, xlf::StrategyId::S1);
  std::vector<std::string> metrics;
  for (const auto& row : table.rows) {
    metrics.push_back(row.metric);
    for (const auto* f : {&row.doc, &row.sum}) {
      c.expect(f->min && f->max && f->avg, fmt::format("{} has min/max/avg", row.metric));
    }
  }
  c.expect(metrics == std::vector<std::string>{"bertscore", "bleu", "chrf", "chrfpp", "ter", "comet"},
           fmt::format("rows [{}]", fmt::join(metrics, ",")));
  const std::string text = xlf::render_text(table);
  const std::string header = text.substr(text.find('\n') + 1, text.find('\n', text.find('\n') + 1) - text.find('\n') - 1);
  std::vector<std::string> columns;
  std::istringstream hs(header);
  for (std::string col; hs >> col;) columns.push_back(col);
  c.expect(columns == std::vector<std::string>{"Metric", "Doc-Min", "Doc-Max", "Doc-Avg", "Sum-Min", "Sum-Max",
                                               "Sum-Avg", "Scored"},
           "column order: " + header);

  std::vector<std::string> dumps;
  for (int pass = 0; pass < 2; ++pass) {
    auto strategies = fixtures::mock_strategies(xlf::MockMode::paraphrase, xlf::MockMode::paraphrase);
    const auto result = run(corpus, strategies, plugin(), 5.0);
    dumps.push_back(xlf::dump_records_jsonl(result.records));
    if (pass == 0) out.paraphrase_records = result.records;
  }
  c.expect(dumps[0] == dumps[1], "paraphrase runs are byte-identical");

  const auto& records = out.paraphrase_records;
  std::set<std::string> expected;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (fixtures::has_short_summary(i)) expected.insert(corpus.articles[i].id);
  }
  const std::set<std::string> failing = pending_ids(records);
  c.expect(!failing.empty() && failing.size() < corpus.size(), fmt::format("{} failing articles", failing.size()));
  c.expect(failing == expected, fmt::format("failing ids [{}]", fmt::join(failing, ",")));
  for (const auto& r : records) {
    if (r.needs_annotation()) {
      c.expect(r.stages.size() == 3, r.article.id + " cascaded through S1, S2, S3");
    }
  }
  c.expect(exported_ids(xlf::export_tasks(records)) == failing, "export contains exactly the failing ids");

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 30.0, fmt::format("took {:.1f} s", elapsed));
}

void annotation_round_trip(Criterion& c, const EndToEnd& e2e) {
  const auto& records = e2e.paraphrase_records;
  c.expect(!pending_ids(records).empty(), "there is something to annotate");
  std::string annotated;
  std::istringstream in(xlf::export_tasks(records));
  for (std::string line; std::getline(in, line);) {
    auto j = nlohmann::json::parse(line);
    j["meta"]["corrected_document"] = j["text"];
    j["meta"]["corrected_summary"] = j["meta"]["machine_summary"];
    annotated += j.dump() + "\n";
  }
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.article.id);
  const auto tasks = xlf::annotation_tasks(records);
  const auto merged = xlf::merge(records, xlf::import_results(annotated, ids));
  c.expect(pending_ids(merged).empty(), "no record needs annotation after merge");
  for (const auto& t : tasks) {
    const auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& r) { return r.article.id == t.article_id; });
    c.expect(it->accepted_translation->document == t.best_machine_document &&
                 it->accepted_translation->summary == t.best_machine_summary,
             t.article_id + " keeps the machine text");
  }

  testing_support::TempDir dir;
  const auto stats = xlf::publish_dataset(merged, dir.path(), false, "hi");
  const xlf::Corpus published = xlf::load_corpus_file(dir / "dataset.json");
  c.expect(published.size() == 25, fmt::format("published {} articles", published.size()));
  c.expect(stats.counts.at("human") == tasks.size(), "stats count human annotations");
  for (std::size_t i = 0; i < published.size() && i < e2e.corpus.size(); ++i) {
    c.expect(published.articles[i].id == e2e.corpus.articles[i].id, "corpus order kept");
  }
}

void comet_passthrough(Criterion& c) {
  const auto result = run(fixtures::synthetic_corpus(3), fixtures::mock_strategies(xlf::MockMode::exact, xlf::MockMode::exact),
                          plugin("--comet-value -0.19"));
  for (const auto& r : result.records) {
    for (const auto& s : r.stages) {
      c.expect(s.report && s.report->document.comet == -0.19 && s.report->summary.comet == -0.19,
               r.article.id + " comet is -0.19");
    }
  }
  const auto reloaded = xlf::load_records_jsonl(xlf::dump_records_jsonl(result.records));
  c.expect(reloaded[0].stages[0].report->document.comet == -0.19, "comet survives persistence");
  const auto table = xlf::aggregate_scores(reloaded, xlf::StrategyId::S1);
  const auto& comet = table.rows.back();
  c.expect(comet.metric == "comet" && comet.doc.min == -0.19 && comet.doc.max == -0.19, "aggregate keeps -0.19");
  c.expect(xlf::render_text(table).find("-0.190000") != std::string::npos, "text report shows -0.190000");
  c.expect(xlf::render_csv({table}).find("S1,comet,-0.190000") != std::string::npos, "csv report shows -0.190000");
}

void fidelity_product(Criterion& c) {
  const xlf::Corpus corpus = fixtures::synthetic_corpus(25);
  auto untagged = fixtures::mock_backend(xlf::MockMode::exact, false);
  const auto result = run(corpus, {{xlf::StrategyId::S1, {untagged, nullptr, nullptr, nullptr}}}, plugin());
  const auto points = xlf::fidelity_comparison(result.records);
  c.expect(points.size() == 25, fmt::format("{} fidelity points", points.size()));
  for (const auto& p : points) {
    c.expect(p.source.rouge1 == p.target.rouge1, fmt::format("{} rouge1 {} vs {}", p.article_id, p.source.rouge1,
                                                             p.target.rouge1));
    c.expect(p.source.rouge1 > 0.0 && p.source.rouge1 <= 1.0, p.article_id + " rouge1 in (0,1]");
  }
  const std::string csv = xlf::render_fidelity_csv(points);
  c.expect(std::count(csv.begin(), csv.end(), '\n') == 26, "fidelity.csv has one row per article");
}

}  // namespace

int main() {
  EndToEnd e2e;
  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
      {"metric oracle suite", metric_oracle_suite},
      {"randomized oracle equivalence", randomized_oracles},
      {"identity properties", identity_properties},
      {"TER unclamped", ter_unclamped},
      {"offline end-to-end", [&](Criterion& c) { offline_end_to_end(c, e2e); }},
      {"annotation round trip", [&](Criterion& c) { annotation_round_trip(c, e2e); }},
      {"COMET passthrough", comet_passthrough},
      {"fidelity data product", fidelity_product},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Criterion c;
    const auto t0 = Clock::now();
    try {
      check(c);
    } catch (const std::exception& e) {
      c.expect(false, fmt::format("exception: {}", e.what()));
    }
    const double elapsed = seconds_since(t0);
    if (c.failures().empty()) {
      fmt::print("PASS {} ({:.3f} s)\n", name, elapsed);
    } else {
      ++failed;
      fmt::print("FAIL {} ({:.3f} s)\n", name, elapsed);
      for (const auto& f : c.failures()) fmt::print("     {}\n", f);
    }
  }
  return failed;
}
