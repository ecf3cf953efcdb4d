// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "psdeob/ioc.hpp"
#include "psdeob/llm_client.hpp"
#include "psdeob/partial_eval.hpp"

namespace psdeob {

enum class CtiSource { Llm, Heuristic };

std::string_view to_string(CtiSource s);

/// One row of the technique table: emitted when `evidence` holds.
struct CtiRule {
  std::string id;
  std::string name;
  std::string evidence;  // download-call | script-present | obfuscation-transforms
};

struct CtiReport {
  std::string description;
  std::vector<MitreMethod> methods;  // unique by id
  ExtractionResult iocs;
  CtiSource source = CtiSource::Heuristic;
};

/// Built-in copy of data/mitre_rules.json.
const std::vector<CtiRule>& default_cti_rules();
/// Throws ConfigError on a malformed table or an unknown evidence name.
std::vector<CtiRule> load_cti_rules(const std::filesystem::path& path);

bool evidence_holds(std::string_view evidence, const Evidence& facts);

CtiReport cti_heuristic(const DeobResult& result, const std::vector<CtiRule>& rules = default_cti_rules(),
                        const IocOptions& ioc = {});

/// Asks the model; a refusal or malformed answer falls back to the heuristic.
/// Transport errors propagate.
CtiReport cti_from_llm(std::string_view code, LlmClient& client, const DeobResult& static_result,
                       const std::vector<CtiRule>& rules = default_cti_rules(), const IocOptions& ioc = {});

/// {"description", "mitre_attack_methods": [{"ID", "name"}], "extensions": {"source", "iocs"}}
std::string cti_to_json(const CtiReport& report, int indent = 2);

}  // namespace psdeob
