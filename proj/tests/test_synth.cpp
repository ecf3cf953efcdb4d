// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "psdeob/engine.hpp"
#include "psdeob/error.hpp"
#include "psdeob/synth.hpp"
#include "test_support.hpp"

using namespace psdeob;
using psdeob::testing::read_file;
using psdeob::testing::TempDir;

namespace {

std::vector<std::string> recovered(std::string_view bytes) {
  AnalyzeOptions o;
  return analyze_bytes(bytes, o).iocs.urls;
}

}  // namespace

TEST(Synth, SingleUrlRoundTrip) {
  auto s = generate_synthetic_sample({"http://a.example/x"}, 1, all_techniques());
  EXPECT_EQ(recovered(s.script), (std::vector<std::string>{"http://a.example/x"}));
  EXPECT_EQ(s.truth.urls, (std::vector<std::string>{"http://a.example/x"}));
  EXPECT_EQ(s.truth.sample_id, sha256_hex(s.script));
}

TEST(Synth, Deterministic) {
  auto urls = random_urls(9, 6);
  auto a = generate_synthetic_sample(urls, 42, all_techniques());
  auto b = generate_synthetic_sample(urls, 42, all_techniques());
  EXPECT_EQ(a.script, b.script);
  EXPECT_NE(a.script, generate_synthetic_sample(urls, 43, all_techniques()).script);
}

TEST(Synth, NoTechniquesIsNearPlain) {
  const std::string u = "https://b.example/path/";
  auto s = generate_synthetic_sample({u}, 1, {});
  EXPECT_NE(s.script.find("downloadfile"), std::string::npos);
  EXPECT_EQ(s.script.find('`'), std::string::npos);
  EXPECT_EQ(s.script.find("-f"), std::string::npos);
  EXPECT_EQ(recovered(s.script), (std::vector<std::string>{u}));
}

TEST(Synth, EachTechniqueAloneRoundTrips) {
  for (auto t : all_techniques()) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto urls = random_urls(seed * 31, 1 + seed % 9);
      auto s = generate_synthetic_sample(urls, seed, {t});
      EXPECT_EQ(recovered(s.script), urls) << to_string(t) << " seed " << seed << "\n" << s.script;
    }
  }
}

TEST(Synth, TechniquesLeaveTraces) {
  auto urls = random_urls(3, 5);
  auto has = [&](Technique t, const std::string& needle) {
    bool any = false;
    for (std::uint64_t seed = 1; seed <= 10 && !any; ++seed)
      any = generate_synthetic_sample(urls, seed, {t}).script.find(needle) != std::string::npos;
    return any;
  };
  EXPECT_TRUE(has(Technique::FormatOp, "-f"));
  EXPECT_TRUE(has(Technique::Backticks, "`"));
  EXPECT_TRUE(has(Technique::CharCast, "[char]"));
  EXPECT_TRUE(has(Technique::ReplaceToken, "replace"));
}

TEST(Synth, RejectsBadUrls) {
  EXPECT_THROW(generate_synthetic_sample({}, 1, {}), std::invalid_argument);
  EXPECT_THROW(generate_synthetic_sample({"ftp://a.example/"}, 1, {}), std::invalid_argument);
  EXPECT_THROW(generate_synthetic_sample({"http://a.example/@x"}, 1, {}), std::invalid_argument);
}

TEST(Synth, RandomUrlsAreValidAndDistinct) {
  auto urls = random_urls(5, 200);
  EXPECT_EQ(urls.size(), 200u);
  EXPECT_EQ(std::set<std::string>(urls.begin(), urls.end()).size(), 200u);
  for (const auto& u : urls) EXPECT_EQ(validate_url(u), u);
}

TEST(Synth, CorpusShape) {
  auto corpus = generate_corpus(40, 1, all_techniques());
  ASSERT_EQ(corpus.size(), 40u);
  double total = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& c = corpus[i];
    EXPECT_GE(c.truth.urls.size(), 4u);
    EXPECT_LE(c.truth.urls.size(), 9u);
    total += static_cast<double>(c.truth.urls.size());
    EXPECT_EQ(c.truth.sample_id, sha256_hex(c.content));
    EXPECT_EQ(c.truth.script_path, c.file_name);
    auto enc = decode_input(c.content).encoding_detected;
    EXPECT_EQ(enc, i % 2 ? Encoding::Base64Utf16le : Encoding::PlainUtf8) << i;
    EXPECT_EQ(recovered(c.content), c.truth.urls) << c.file_name;
  }
  EXPECT_GT(total / 40, 5.0);
  EXPECT_LT(total / 40, 8.0);
}

TEST(Synth, WriteCorpusIsReproducible) {
  TempDir a("synth-a"), b("synth-b");
  write_corpus(a.path(), generate_corpus(5, 7, all_techniques()));
  write_corpus(b.path(), generate_corpus(5, 7, all_techniques()));
  for (const auto& e : std::filesystem::directory_iterator(a.path()))
    EXPECT_EQ(read_file(e.path()), read_file(b.path() / e.path().filename())) << e.path();
  auto t = load_ground_truth(a.path() / kTruthFileName);
  EXPECT_EQ(t.size(), 5u);
}

TEST(Synth, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Synth, TechniqueNames) {
  for (auto t : all_techniques()) EXPECT_EQ(parse_technique(to_string(t)), t);
  EXPECT_FALSE(parse_technique("rot13"));
}
