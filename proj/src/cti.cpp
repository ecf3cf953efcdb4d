// SPDX-License-Identifier: Apache-2.0
#include "psdeob/cti.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "psdeob/error.hpp"

namespace psdeob {

namespace {

constexpr std::array<std::string_view, 6> kDownloadMethods = {
    "downloadfile", "downloadstring", "downloaddata", "downloadfileasync", "downloadstringasync",
    "downloaddataasync"};
constexpr std::array<std::string_view, 8> kDownloadCmdlets = {
    "invoke-webrequest", "iwr", "wget", "curl", "invoke-restmethod", "irm", "start-bitstransfer",
    "bitsadmin"};

bool known_evidence(std::string_view e) {
  return e == "download-call" || e == "script-present" || e == "obfuscation-transforms";
}

std::string phrase(std::string_view evidence) {
  if (evidence == "download-call") return "downloads files from remote URLs";
  if (evidence == "script-present") return "runs as a PowerShell script";
  return "assembles its strings at run time to hide them";
}

}  // namespace

std::string_view to_string(CtiSource s) { return s == CtiSource::Llm ? "llm" : "heuristic"; }

const std::vector<CtiRule>& default_cti_rules() {
  static const std::vector<CtiRule> rules = {
      {"T1105", "Ingress Tool Transfer", "download-call"},
      {"T1059", "Command and Scripting Interpreter", "script-present"},
      {"T1027", "Obfuscated Files or Information", "obfuscation-transforms"},
  };
  return rules;
}

std::vector<CtiRule> load_cti_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read rule table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto j = nlohmann::json::parse(ss.str(), nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw ConfigError("rule table must be a JSON array");
  std::vector<CtiRule> rules;
  for (const auto& row : j) {
    if (!row.is_object() || !row.contains("ID") || !row.contains("name") || !row.contains("evidence") ||
        !row["ID"].is_string() || !row["name"].is_string() || !row["evidence"].is_string())
      throw ConfigError("rule rows need string ID, name and evidence");
    CtiRule r{row["ID"], row["name"], row["evidence"]};
    if (!is_technique_id(r.id)) throw ConfigError("bad technique id '" + r.id + "'");
    if (!known_evidence(r.evidence)) throw ConfigError("unknown evidence '" + r.evidence + "'");
    rules.push_back(std::move(r));
  }
  return rules;
}

bool evidence_holds(std::string_view evidence, const Evidence& facts) {
  if (evidence == "download-call") {
    for (auto m : kDownloadMethods)
      if (facts.methods.count(std::string(m))) return true;
    for (auto c : kDownloadCmdlets)
      if (facts.cmdlets.count(std::string(c))) return true;
    return false;
  }
  if (evidence == "script-present") return facts.statements > 0;
  if (evidence == "obfuscation-transforms") return facts.transforms > 0;
  return false;
}

CtiReport cti_heuristic(const DeobResult& result, const std::vector<CtiRule>& rules, const IocOptions& ioc) {
  CtiReport r;
  r.source = CtiSource::Heuristic;
  r.iocs = extract_urls(result, ioc);
  std::set<std::string> ids;
  std::vector<std::string> phrases;
  for (const auto& rule : rules) {
    if (!evidence_holds(rule.evidence, result.evidence)) continue;
    if (ids.insert(rule.id).second) r.methods.push_back({rule.id, rule.name});
    auto p = phrase(rule.evidence);
    if (std::find(phrases.begin(), phrases.end(), p) == phrases.end()) phrases.push_back(p);
  }
  if (!phrases.empty()) {
    r.description = "The script";
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      r.description += i == 0 ? " " : i + 1 == phrases.size() ? " and " : ", ";
      r.description += phrases[i];
    }
    r.description += ".";
  }
  return r;
}

CtiReport cti_from_llm(std::string_view code, LlmClient& client, const DeobResult& static_result,
                       const std::vector<CtiRule>& rules, const IocOptions& ioc) {
  const auto& cfg = client.config();
  Prompt prompt;
  try {
    prompt = build_cti_prompt(code, cfg.max_chars);
  } catch (const PromptTooLarge&) {
    const auto overhead = cti_template().system_text.size() + cti_template().user_text_with_code_slot.size();
    auto reduced = reduce_script(code, cfg.max_chars > overhead ? cfg.max_chars - overhead : 0);
    prompt = build_cti_prompt(reduced, cfg.max_chars);
  }
  auto answer = parse_json_response(client.complete(prompt), Expected::Cti, cfg.refusal_patterns);
  if (answer.kind != AnswerKind::Cti || answer.cti.description.empty())
    return cti_heuristic(static_result, rules, ioc);
  CtiReport r;
  r.source = CtiSource::Llm;
  r.description = answer.cti.description;
  r.methods = answer.cti.methods;
  r.iocs = extract_urls(static_result, ioc);
  return r;
}

std::string cti_to_json(const CtiReport& report, int indent) {
  using ojson = nlohmann::ordered_json;
  ojson methods = ojson::array();
  for (const auto& m : report.methods) methods.push_back({{"ID", m.id}, {"name", m.name}});
  ojson iocs = {{"urls", report.iocs.urls},
                {"domains", report.iocs.domains},
                {"provenance", std::string(to_string(report.iocs.provenance))}};
  if (report.iocs.longest_string) iocs["longest_string"] = *report.iocs.longest_string;
  ojson out = {{"description", report.description},
               {"mitre_attack_methods", std::move(methods)},
               {"extensions", {{"source", std::string(to_string(report.source))}, {"iocs", std::move(iocs)}}}};
  return out.dump(indent);
}

}  // namespace psdeob
