// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned here.
// Exit status is nonzero when any criterion fails.
#include <sys/socket.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <string>
#include <thread>

#include "psdeob/cti.hpp"
#include "psdeob/engine.hpp"
#include "psdeob/eval.hpp"
#include "psdeob/parser.hpp"
#include "psdeob/synth.hpp"
#include "sandbox.hpp"
#include "stub_llm.hpp"
#include "test_support.hpp"

using namespace psdeob;
using namespace psdeob::testing;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kGoldenBudgetS = 1.0;
constexpr double kRoundTripBudgetS = 30.0;
constexpr std::size_t kRoundTripSamples = 500;
constexpr std::uint64_t kRoundTripSeed = 1;
constexpr std::size_t kMinFoldFixtures = 50;

const char* kGpt4Refusal =
    "I'm sorry, I cannot extract URLs from this Powershell code as it appears to be obfuscated and possibly "
    "malicious. As a language model, I prioritise ethical and safe utilisation of technology.";
const char* kGeminiRefusal = "I'm designed solely to process and generate text, so I'm unable to assist you with that.";

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Shared 500-sample corpus for criteria 2, 8 and 9.
struct Corpus {
  TempDir dir{"acceptance"};
  std::vector<CorpusSample> samples;
  double generate_s = 0;
};

Corpus& corpus() {
  static Corpus c;
  static bool ready = [] {
    auto t0 = Clock::now();
    c.samples = generate_corpus(kRoundTripSamples, kRoundTripSeed, all_techniques());
    write_corpus(c.dir.path(), c.samples);
    c.generate_s = seconds_since(t0);
    return true;
  }();
  (void)ready;
  return c;
}

Outcome ac1() {
  const auto bytes = read_data("fig2a.ps1");
  auto t0 = Clock::now();
  AnalyzeOptions o;
  auto a = analyze_bytes(bytes, o);
  const double s = seconds_since(t0);
  const std::vector<std::string> want(std::begin(kGoldenUrls), std::end(kGoldenUrls));
  bool exact = a.iocs.urls == want;
  return {exact && s < kGoldenBudgetS, std::to_string(a.iocs.urls.size()) + " urls, exact=" + (exact ? "yes" : "no") +
                                           ", " + fmt("%.3f", s) + " s (limit " + fmt("%.0f", kGoldenBudgetS) + " s)"};
}

Outcome ac2() {
  auto& c = corpus();
  auto t0 = Clock::now();
  CorpusOptions o;
  o.jobs = std::max(1u, std::thread::hardware_concurrency());
  auto r = run_corpus(c.dir.path(), c.dir.path() / kTruthFileName, o);
  const double s = c.generate_s + seconds_since(t0);
  bool ok = r.per_sample.size() == kRoundTripSamples && r.url_accuracy.equals(1, 1) && r.hallucinated_domain_count == 0 &&
            r.error_count == 0 && s < kRoundTripBudgetS;
  return {ok, std::to_string(r.url_accuracy.num) + "/" + std::to_string(r.url_accuracy.den) + " urls, halluc " +
                  std::to_string(r.hallucinated_domain_count) + ", " + fmt("%.2f", s) + " s (limit " +
                  fmt("%.0f", kRoundTripBudgetS) + " s)"};
}

Outcome ac3() {
  std::istringstream in(read_data("fold_cases.jsonl"));
  std::string line;
  std::size_t n = 0, ok = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++n;
    auto c = nlohmann::json::parse(line);
    const std::string expr = c["expr"];
    auto v = fold_expr(parse_expression(tokenize(expr), expr), {});
    if (c["expected"].is_array())
      ok += v == Value::of_list(c["expected"].get<std::vector<std::string>>());
    else
      ok += v.is_text() && v.text == c["expected"].get<std::string>();
  }
  return {n >= kMinFoldFixtures && ok == n,
          std::to_string(ok) + "/" + std::to_string(n) +
              " fixtures byte-equal to committed values (no interpreter in CI; values cross-checked by the "
              "reference evaluator test)"};
}

Outcome ac4() {
  // 100 samples x 100 truth URLs; 56 samples recover 70, 44 recover 69.
  std::vector<PerSampleScore> scores;
  std::uint64_t planted = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    auto urls = random_urls(1000 + i, 100);
    const std::size_t tp = i < 56 ? 70 : 69;
    planted += tp;
    std::vector<std::string> found(urls.begin(), urls.begin() + static_cast<std::ptrdiff_t>(tp));
    scores.push_back(score_sample(make_extraction(found, Provenance::Llm), {std::to_string(i), "x", urls}));
  }
  auto r = aggregate(scores);
  bool ok = planted == 6956 && r.url_accuracy.num == 6956 && r.url_accuracy.den == 10000 &&
            r.url_accuracy.equals(6956, 10000);
  return {ok, std::to_string(r.url_accuracy.num) + "/" + std::to_string(r.url_accuracy.den) + " = " +
                  fmt("%.4f", r.url_accuracy.value()) + " (tolerance 0, exact rational)"};
}

Outcome ac5() {
  bool su = prompt_to_text(build_deobf_prompt("$a=1", PromptStyle::SystemUser)) == read_data("golden/deobf_system_user.txt");
  bool is = prompt_to_text(build_deobf_prompt("$a=1", PromptStyle::InstSys)) == read_data("golden/deobf_inst_sys.txt");
  bool ct = prompt_to_text(build_cti_prompt("$a=1")) == read_data("golden/cti.txt");
  StubLlm stub(StubLlm::always("[]"));
  LlmClient client(stub.config());
  client.complete(build_deobf_prompt("$a=1", PromptStyle::SystemUser));
  client.complete(build_cti_prompt("$a=1"));
  std::size_t zero = 0;
  for (const auto& b : stub.bodies()) {
    auto j = nlohmann::json::parse(b);
    zero += j.contains("temperature") && j["temperature"].get<double>() == 0.0;
  }
  bool temp = zero == stub.bodies().size() && zero == 2;
  return {su && is && ct && temp, std::string("goldens system-user=") + (su ? "equal" : "DIFF") +
                                      " inst-sys=" + (is ? "equal" : "DIFF") + " cti=" + (ct ? "equal" : "DIFF") +
                                      ", temperature 0 in " + std::to_string(zero) + "/" +
                                      std::to_string(stub.bodies().size()) + " captured bodies"};
}

Outcome ac6() {
  // Alternate the two quotes across requests.
  StubLlm stub([](const std::string&, std::size_t n) {
    return StubReply{200, chat_envelope(n % 2 ? kGeminiRefusal : kGpt4Refusal)};
  });
  LlmClient client(stub.config());
  TempDir dir("acceptance-refusal");
  write_corpus(dir.path(), generate_corpus(10, 2, all_techniques()));

  bool classified = parse_json_response(kGpt4Refusal, Expected::Deobf).kind == AnswerKind::Refusal &&
                    parse_json_response(kGeminiRefusal, Expected::Deobf).kind == AnswerKind::Refusal;
  CorpusOptions llm;
  llm.analyze.engine = Engine::Llm;
  llm.analyze.client = &client;
  auto r = run_corpus(dir.path(), dir.path() / kTruthFileName, llm);

  // Fallback mode: recoverable samples keep their static URLs; a script with
  // nothing static still reports (empty) static results after the refusal.
  CorpusOptions fb = llm;
  fb.analyze.engine = Engine::StaticThenLlm;
  auto f = run_corpus(dir.path(), dir.path() / kTruthFileName, fb);
  auto plain = analyze_bytes("Write-Host 'x'", fb.analyze);
  bool fallback = f.url_accuracy.equals(1, 1) && plain.llm_used && plain.answer &&
                  plain.answer->kind == AnswerKind::Refusal && plain.iocs.urls.empty() && plain.llm_error.empty();

  bool ok = classified && r.refusal_count == r.per_sample.size() && r.per_sample.size() == 10 && fallback;
  return {ok, std::string("both quotes -> refusal: ") + (classified ? "yes" : "no") + ", refusal_count " +
                  std::to_string(r.refusal_count) + "/" + std::to_string(r.per_sample.size()) +
                  ", fallback static url accuracy " + fmt("%.3f", f.url_accuracy.value()) +
                  ", no-url script after refusal " + (fallback ? "ok" : "BAD")};
}

Outcome ac7() {
  const auto fixture = read_data("fig9.json");
  StubLlm stub(StubLlm::always(fixture));
  LlmClient client(stub.config());
  const auto code = read_data("fig2a.ps1");
  auto out = nlohmann::json::parse(cti_to_json(cti_from_llm(code, client, deobfuscate_source(code))));
  auto want = nlohmann::json::parse(fixture);
  nlohmann::json core = {{"description", out["description"]}, {"mitre_attack_methods", out["mitre_attack_methods"]}};
  bool ok = core == want && out["extensions"]["source"] == "llm";
  return {ok, std::to_string(out["mitre_attack_methods"].size()) + " methods, JSON " +
                  (core == want ? "equal" : "DIFFERENT") + " to fixture"};
}

Outcome ac8() {
  if (!sandbox_available()) return {false, "seccomp unavailable"};
  auto control = run_sandboxed([] { return ::socket(AF_INET, SOCK_STREAM, 0) >= 0 ? 0 : 1; });
  auto& c = corpus();
  auto r = run_sandboxed([&] {
    CorpusOptions o;  // single thread inside the child
    auto rep = run_corpus(c.dir.path(), c.dir.path() / kTruthFileName, o);
    return rep.url_accuracy.equals(1, 1) && rep.error_count == 0 ? 0 : 1;
  });
  bool ok = control.violation && r.clean();
  return {ok, std::to_string(c.samples.size()) + " samples under no-network/no-write filter: " + r.describe() +
                  "; negative control " + (control.violation ? "caught" : "MISSED")};
}

Outcome ac9() {
  auto fixed = [](std::string_view text) {
    auto first = deobfuscate_source(text).rendered;
    return deobfuscate_source(first).rendered == first &&
           count_unknown_statements(parse_source(first).statements) == 0;
  };
  std::size_t n = 0, ok = 0;
  ++n;
  ok += fixed(read_data("fig2a.ps1"));
  for (const auto& s : corpus().samples) {
    ++n;
    ok += fixed(decode_input(s.content).decoded);
  }
  return {ok == n, std::to_string(ok) + "/" + std::to_string(n) + " fixtures reach a fixed point"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"AC1 golden sample", ac1},       {"AC2 synthetic round trip", ac2}, {"AC3 fold differential", ac3},
      {"AC4 metric self-check", ac4},   {"AC5 prompt fidelity", ac5},      {"AC6 refusal handling", ac6},
      {"AC7 cti schema", ac7},          {"AC8 safety", ac8},              {"AC9 idempotence", ac9},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/9 criteria passed\n", 9 - failed);
  return failed ? 1 : 0;
}
