// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <json.hpp>
#include <random>
#include <sstream>

#include "psdeob/error.hpp"
#include "psdeob/eval.hpp"
#include "psdeob/synth.hpp"
#include "stub_llm.hpp"
#include "test_support.hpp"

using namespace psdeob;
using psdeob::testing::StubLlm;
using psdeob::testing::TempDir;
using psdeob::testing::write_file;

namespace {

std::vector<GroundTruthEntry> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_ground_truth(in);
}

ExtractionResult got(std::vector<std::string> urls) { return make_extraction(urls, Provenance::Static); }

GroundTruthEntry truth(std::string id, std::vector<std::string> urls) { return {std::move(id), id + ".ps1", std::move(urls)}; }

// 10-sample corpus written once per test binary.
const std::filesystem::path& small_corpus() {
  static TempDir dir("eval-corpus");
  static bool written = [] {
    write_corpus(dir.path(), generate_corpus(10, 1, all_techniques()));
    return true;
  }();
  (void)written;
  return dir.path();
}

}  // namespace

TEST(GroundTruth, Parses) {
  auto t = parse("{\"sample_id\":\"a\",\"script_path\":\"a.ps1\",\"urls\":[\"http://x.example/\"]}\n\n"
                 "{\"sample_id\":\"b\",\"script_path\":\"b.ps1\",\"urls\":[\"HTTP://Y.example/z\"]}\n");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[1].sample_id, "b");
  EXPECT_EQ(t[1].urls.size(), 1u);
}

TEST(GroundTruth, ErrorsCarryLine) {
  const std::string good = "{\"sample_id\":\"a\",\"script_path\":\"a.ps1\",\"urls\":[\"http://x.example/\"]}\n";
  for (std::string bad : {std::string("[1]"), std::string("{\"sample_id\":\"b\",\"script_path\":\"b\"}"),
                          std::string("{\"sample_id\":\"b\",\"script_path\":\"b\",\"urls\":[]}"),
                          std::string("{\"sample_id\":\"b\",\"script_path\":\"b\",\"urls\":[\"ftp://q.r/\"]}"),
                          std::string("{not json")}) {
    try {
      parse(good + bad + "\n");
      FAIL() << bad;
    } catch (const TruthFormatError& e) {
      EXPECT_EQ(e.line(), 2u) << bad;
    }
  }
  EXPECT_THROW(parse(good + good), DuplicateSampleId);
}

TEST(GroundTruth, LineRoundTrip) {
  GroundTruthEntry e = truth("id1", {"http://a.example/x", "https://b.example/"});
  auto back = parse(truth_to_jsonl_line(e) + "\n");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].sample_id, e.sample_id);
  EXPECT_EQ(back[0].script_path, e.script_path);
  EXPECT_EQ(back[0].urls, e.urls);
}

TEST(ScoreSample, Examples) {
  auto s = score_sample(got({"http://a.example/1", "http://evil.example/"}),
                        truth("s", {"http://a.example/1", "http://a.example/2", "https://www.b.example/"}));
  EXPECT_EQ(s.true_positive_urls, (std::vector<std::string>{"http://a.example/1"}));
  EXPECT_EQ(s.missed_urls.size(), 2u);
  EXPECT_EQ(s.truth_url_count, 3u);
  EXPECT_EQ(s.truth_domain_count, 2u);
  EXPECT_EQ(s.true_positive_domains, (std::vector<std::string>{"a.example"}));
  EXPECT_EQ(s.hallucinated_domains, (std::vector<std::string>{"evil.example"}));
}

TEST(ScoreSample, TrailingSlashAndWww) {
  auto t = truth("s", {"https://www.b.example/p/"});
  auto strict = score_sample(got({"https://b.example/p"}), t);
  EXPECT_TRUE(strict.true_positive_urls.empty());
  EXPECT_EQ(strict.hallucinated_domains.size(), 1u);
  auto lenient = score_sample(got({"https://www.b.example/p"}), t, {true, false});
  EXPECT_EQ(lenient.true_positive_urls.size(), 1u);
  auto folded = score_sample(got({"https://b.example/q"}), t, {false, true});
  EXPECT_EQ(folded.true_positive_domains.size(), 1u);
  EXPECT_TRUE(folded.hallucinated_domains.empty());
}

TEST(ScoreSample, SymmetryProperty) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto urls = random_urls(seed, 1 + seed % 9);
    auto s = score_sample(got(urls), truth("s", urls));
    EXPECT_TRUE(s.missed_urls.empty());
    EXPECT_TRUE(s.hallucinated_domains.empty());
    EXPECT_EQ(s.true_positive_urls.size(), s.truth_url_count);
  }
}

TEST(Aggregate, MicroAverage) {
  // 7 of 10 URLs overall; per-sample 1/1 and 6/9, so macro differs.
  PerSampleScore a, b;
  a.true_positive_urls = {"u"};
  a.truth_url_count = 1;
  b.true_positive_urls = std::vector<std::string>(6, "u");
  b.truth_url_count = 9;
  auto r = aggregate({a, b});
  EXPECT_TRUE(r.url_accuracy.equals(7, 10));
  EXPECT_DOUBLE_EQ(r.url_accuracy.value(), 0.7);
  EXPECT_DOUBLE_EQ(r.macro_url_accuracy, (1.0 + 6.0 / 9.0) / 2.0);
}

TEST(Aggregate, ExactFractionAtScale) {
  // 100 samples of 100 URLs; the first 56 samples get 70 right, the rest 69.
  std::vector<PerSampleScore> scores(100);
  std::uint64_t hand = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::size_t tp = i < 56 ? 70 : 69;
    scores[i].true_positive_urls.assign(tp, "u");
    scores[i].truth_url_count = 100;
    hand += tp;
  }
  ASSERT_EQ(hand, 6956u);
  auto r = aggregate(scores);
  EXPECT_EQ(r.url_accuracy.num, 6956u);
  EXPECT_EQ(r.url_accuracy.den, 10000u);
  EXPECT_TRUE(r.url_accuracy.equals(6956, 10000));
  EXPECT_DOUBLE_EQ(r.url_accuracy.value(), 0.6956);
}

TEST(Aggregate, HallucinationsAreAMultiset) {
  std::vector<PerSampleScore> scores(3);
  scores[0].hallucinated_domains = {"x.example", "y.example"};
  scores[1].hallucinated_domains = {"x.example"};
  scores[2].hallucinated_domains = {"x.example", "z.example"};
  for (auto& s : scores) s.truth_url_count = 1;
  auto r = aggregate(scores, 2);
  EXPECT_EQ(r.hallucinated_domain_count, 5u);
  ASSERT_EQ(r.top_hallucinated.size(), 2u);
  EXPECT_EQ(r.top_hallucinated[0], std::make_pair(std::string("x.example"), std::size_t{3}));
  EXPECT_EQ(r.top_hallucinated[1], std::make_pair(std::string("y.example"), std::size_t{1}));
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937 rng(21);
  std::vector<PerSampleScore> scores(30);
  for (auto& s : scores) {
    s.truth_url_count = 1 + rng() % 9;
    s.true_positive_urls.assign(rng() % (s.truth_url_count + 1), "u");
    s.truth_domain_count = s.truth_url_count;
    s.true_positive_domains.assign(rng() % (s.truth_domain_count + 1), "d");
    for (int k = 0, n = static_cast<int>(rng() % 3); k < n; ++k)
      s.hallucinated_domains.push_back("h" + std::to_string(rng() % 4) + ".example");
    s.refused = rng() % 5 == 0;
  }
  auto base = aggregate(scores);
  for (int round = 0; round < 20; ++round) {
    std::shuffle(scores.begin(), scores.end(), rng);
    auto r = aggregate(scores);
    EXPECT_EQ(r.url_accuracy.num, base.url_accuracy.num);
    EXPECT_EQ(r.url_accuracy.den, base.url_accuracy.den);
    EXPECT_EQ(r.domain_accuracy.num, base.domain_accuracy.num);
    EXPECT_EQ(r.hallucinated_domain_count, base.hallucinated_domain_count);
    EXPECT_EQ(r.top_hallucinated, base.top_hallucinated);
    EXPECT_EQ(r.refusal_count, base.refusal_count);
    EXPECT_NEAR(r.macro_url_accuracy, base.macro_url_accuracy, 1e-12);
  }
}

TEST(Aggregate, EmptyIsAnError) { EXPECT_THROW(aggregate({}), EmptyCorpus); }

TEST(Report, SummaryAndJson) {
  PerSampleScore s;
  s.true_positive_urls = {"u"};
  s.truth_url_count = 2;
  s.true_positive_domains = {"d"};
  s.truth_domain_count = 1;
  s.hallucinated_domains = {"h.example"};
  auto r = aggregate({s});
  EXPECT_EQ(report_summary(r), "url 50.0% domain 100.0% halluc 1 refusals 0");
  auto j = nlohmann::json::parse(report_to_json(r));
  EXPECT_EQ(j["hallucinated_domain_count"], 1);
  EXPECT_EQ(j["refusal_count"], 0);
  auto csv = report_to_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(RunCorpus, StaticRecoversEverything) {
  CorpusOptions o;
  auto r = run_corpus(small_corpus(), small_corpus() / kTruthFileName, o);
  EXPECT_EQ(r.per_sample.size(), 10u);
  EXPECT_TRUE(r.url_accuracy.equals(1, 1));
  EXPECT_EQ(r.hallucinated_domain_count, 0u);
  EXPECT_EQ(r.error_count, 0u);
  EXPECT_EQ(report_summary(r), "url 100.0% domain 100.0% halluc 0 refusals 0");
}

TEST(RunCorpus, ParallelMatchesSerial) {
  CorpusOptions serial, parallel;
  parallel.jobs = 4;
  auto a = run_corpus(small_corpus(), small_corpus() / kTruthFileName, serial);
  auto b = run_corpus(small_corpus(), small_corpus() / kTruthFileName, parallel);
  EXPECT_EQ(report_to_json(a), report_to_json(b));
}

TEST(RunCorpus, LlmEmptyArrays) {
  StubLlm stub(StubLlm::always("[]"));
  LlmClient client(stub.config());
  CorpusOptions o;
  o.analyze.engine = Engine::Llm;
  o.analyze.client = &client;
  auto r = run_corpus(small_corpus(), small_corpus() / kTruthFileName, o);
  EXPECT_EQ(r.url_accuracy.num, 0u);
  EXPECT_DOUBLE_EQ(r.url_accuracy.value(), 0.0);
  EXPECT_EQ(r.refusal_count, 0u);
  EXPECT_EQ(stub.hits(), 10u);
}

TEST(RunCorpus, LlmRefusals) {
  StubLlm stub(StubLlm::always("I'm sorry, I cannot extract URLs from this Powershell code"));
  LlmClient client(stub.config());
  CorpusOptions o;
  o.analyze.engine = Engine::Llm;
  o.analyze.client = &client;
  o.jobs = 3;
  auto r = run_corpus(small_corpus(), small_corpus() / kTruthFileName, o);
  EXPECT_EQ(r.refusal_count, 10u);
}

TEST(RunCorpus, FallbackOnlyWhenStaticFindsNothing) {
  StubLlm stub(StubLlm::always("I'm designed solely to process and generate text, so I'm unable to assist you with that."));
  LlmClient client(stub.config());
  CorpusOptions o;
  o.analyze.engine = Engine::StaticThenLlm;
  o.analyze.client = &client;
  auto r = run_corpus(small_corpus(), small_corpus() / kTruthFileName, o);
  EXPECT_TRUE(r.url_accuracy.equals(1, 1));
  EXPECT_EQ(stub.hits(), 0u);
}

TEST(RunCorpus, MissingScriptIsPerSampleError) {
  TempDir dir("eval-missing");
  write_file(dir.path() / "present.ps1", "$u='http://a.example/x'");
  std::vector<GroundTruthEntry> t = {{"p", "present.ps1", {"http://a.example/x"}},
                                     {"m", "missing.ps1", {"http://b.example/y"}}};
  auto r = run_corpus(dir.path(), t, {});
  EXPECT_EQ(r.error_count, 1u);
  EXPECT_TRUE(r.url_accuracy.equals(1, 2));
}

TEST(RunCorpus, EmptyDirectory) {
  TempDir dir("eval-empty");
  std::vector<GroundTruthEntry> t = {{"p", "p.ps1", {"http://a.example/x"}}};
  EXPECT_THROW(run_corpus(dir.path(), t, {}), EmptyCorpus);
}
