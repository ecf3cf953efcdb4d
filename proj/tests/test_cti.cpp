// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <json.hpp>
#include <random>
#include <set>

#include "psdeob/cti.hpp"
#include "psdeob/error.hpp"
#include "stub_llm.hpp"
#include "test_support.hpp"

using namespace psdeob;
using psdeob::testing::read_data;
using psdeob::testing::StubLlm;
using psdeob::testing::TempDir;
using psdeob::testing::write_file;

namespace {

std::vector<std::string> ids(const CtiReport& r) {
  std::vector<std::string> out;
  for (const auto& m : r.methods) out.push_back(m.id);
  return out;
}

}  // namespace

TEST(CtiFromLlm, ReplaysFixture) {
  StubLlm stub(StubLlm::always(read_data("fig9.json")));
  LlmClient client(stub.config());
  auto code = read_data("fig2a.ps1");
  auto deob = deobfuscate_source(code);
  auto r = cti_from_llm(code, client, deob);
  EXPECT_EQ(r.source, CtiSource::Llm);
  EXPECT_EQ(ids(r), (std::vector<std::string>{"T1566", "T1105", "T1059", "T1027"}));
  EXPECT_EQ(r.iocs.urls.size(), 8u);
  // The prompt that went out is the CTI one.
  auto body = nlohmann::json::parse(stub.bodies().at(0));
  EXPECT_NE(body["messages"][1]["content"].get<std::string>().find("mitre att&ck"), std::string::npos);
}

TEST(CtiFromLlm, JsonRoundTripsToFixture) {
  StubLlm stub(StubLlm::always(read_data("fig9.json")));
  LlmClient client(stub.config());
  auto code = read_data("fig2a.ps1");
  auto out = nlohmann::json::parse(cti_to_json(cti_from_llm(code, client, deobfuscate_source(code))));
  auto want = nlohmann::json::parse(read_data("fig9.json"));
  EXPECT_EQ(out["description"], want["description"]);
  EXPECT_EQ(out["mitre_attack_methods"], want["mitre_attack_methods"]);
}

TEST(CtiFromLlm, RefusalFallsBack) {
  StubLlm stub(StubLlm::always("I'm sorry, I cannot help with that."));
  LlmClient client(stub.config());
  auto r = cti_from_llm("$a=1", client, deobfuscate_source("$a=1"));
  EXPECT_EQ(r.source, CtiSource::Heuristic);
}

TEST(CtiFromLlm, MalformedFallsBack) {
  StubLlm stub(StubLlm::always("{\"description\": 3"));
  LlmClient client(stub.config());
  auto code = read_data("fig2a.ps1");
  auto deob = deobfuscate_source(code);
  auto r = cti_from_llm(code, client, deob);
  EXPECT_EQ(r.source, CtiSource::Heuristic);
  EXPECT_EQ(ids(r), ids(cti_heuristic(deob)));
}

TEST(CtiFromLlm, TransportErrorPropagates) {
  StubLlm stub([](const std::string&, std::size_t) { return psdeob::testing::StubReply{401, "{}"}; });
  LlmClient client(stub.config());
  EXPECT_THROW(cti_from_llm("$a=1", client, deobfuscate_source("$a=1")), AuthError);
}

TEST(CtiFromLlm, DuplicateIdsCollapse) {
  StubLlm stub(StubLlm::always(
      R"({"description":"d","mitre_attack_methods":[{"ID":"T1105","name":"a"},{"ID":"T1105","name":"b"}]})"));
  LlmClient client(stub.config());
  auto r = cti_from_llm("$a=1", client, deobfuscate_source("$a=1"));
  EXPECT_EQ(ids(r), (std::vector<std::string>{"T1105"}));
}

TEST(CtiHeuristic, Golden) {
  auto r = cti_heuristic(deobfuscate_source(read_data("fig2a.ps1")));
  EXPECT_EQ(r.source, CtiSource::Heuristic);
  EXPECT_EQ(ids(r), (std::vector<std::string>{"T1105", "T1059", "T1027"}));
  EXPECT_FALSE(r.description.empty());
  EXPECT_EQ(r.iocs.urls.size(), 8u);
}

TEST(CtiHeuristic, PlainScriptIsOnlyInterpreter) {
  auto r = cti_heuristic(deobfuscate_source("echo hi"));
  EXPECT_EQ(ids(r), (std::vector<std::string>{"T1059"}));
  EXPECT_EQ(r.methods[0].name, "Command and Scripting Interpreter");
}

TEST(CtiHeuristic, NeverEmitsPhishing) {
  for (std::string src : {std::string("echo hi"), read_data("fig2a.ps1"), std::string("$c.downloadfile('a','b')")})
    for (const auto& id : ids(cti_heuristic(deobfuscate_source(src)))) EXPECT_NE(id, "T1566");
}

// More evidence never removes a technique.
TEST(CtiHeuristic, MonotoneProperty) {
  std::mt19937 rng(3);
  const auto& rules = default_cti_rules();
  for (int i = 0; i < 200; ++i) {
    DeobResult small;
    small.evidence.statements = rng() % 3;
    small.evidence.transforms = rng() % 2;
    if (rng() % 2) small.evidence.methods.insert("downloadfile");
    DeobResult big = small;
    big.evidence.statements += rng() % 3;
    big.evidence.transforms += rng() % 3;
    if (rng() % 2) big.evidence.methods.insert("downloadfile");
    auto a = ids(cti_heuristic(small, rules)), b = ids(cti_heuristic(big, rules));
    std::set<std::string> bs(b.begin(), b.end());
    for (const auto& id : a) EXPECT_TRUE(bs.count(id)) << id;
  }
}

TEST(CtiJson, SchemaKeys) {
  auto j = nlohmann::json::parse(cti_to_json(cti_heuristic(deobfuscate_source(read_data("fig2a.ps1")))));
  std::set<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.insert(it.key());
  EXPECT_EQ(keys, (std::set<std::string>{"description", "mitre_attack_methods", "extensions"}));
  for (const auto& m : j["mitre_attack_methods"]) {
    EXPECT_EQ(m.size(), 2u);
    EXPECT_TRUE(is_technique_id(m["ID"].get<std::string>()));
    EXPECT_FALSE(m["name"].get<std::string>().empty());
  }
  EXPECT_EQ(j["extensions"]["source"], "heuristic");
  EXPECT_EQ(j["extensions"]["iocs"]["urls"].size(), 8u);
}

TEST(CtiRules, BuiltInMatchesDataFile) {
  auto loaded = load_cti_rules(std::filesystem::path(PSDEOB_TEST_DATA_DIR) / ".." / ".." / "data" / "mitre_rules.json");
  ASSERT_EQ(loaded.size(), default_cti_rules().size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded[i].id, default_cti_rules()[i].id);
    EXPECT_EQ(loaded[i].evidence, default_cti_rules()[i].evidence);
  }
}

TEST(CtiRules, BadTableIsConfigError) {
  TempDir dir("cti");
  write_file(dir.path() / "r.json", R"([{"ID":"T1","name":"x","evidence":"moon-phase"}])");
  EXPECT_THROW(load_cti_rules(dir.path() / "r.json"), ConfigError);
  write_file(dir.path() / "r.json", "{");
  EXPECT_THROW(load_cti_rules(dir.path() / "r.json"), ConfigError);
}
