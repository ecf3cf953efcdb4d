// SPDX-License-Identifier: Apache-2.0
//
// One sample through the chain: decode, deobfuscate, extract, and optionally
// ask the model.
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "psdeob/ioc.hpp"
#include "psdeob/lexer.hpp"
#include "psdeob/llm_client.hpp"
#include "psdeob/partial_eval.hpp"

namespace psdeob {

enum class Engine { Static, Llm, StaticThenLlm };

std::string_view to_string(Engine e);
std::optional<Engine> parse_engine(std::string_view s);

struct AnalyzeOptions {
  Engine engine = Engine::Static;
  IocOptions ioc;
  RenderOptions render;
  LlmClient* client = nullptr;  // required unless engine is Static
  /// Read undecodable bytes as Latin-1 instead of throwing.
  bool lossy_fallback = true;
};

struct Analysis {
  SourceText source;
  DeobResult deob;
  ExtractionResult static_iocs;
  ExtractionResult iocs;  // what the selected engine reports
  std::size_t unknown_statements = 0;
  bool llm_used = false;
  std::optional<LlmAnswer> answer;
  std::string llm_error;  // set when a fallback call failed
};

/// Throws UndecodableInput for empty input (or any undecodable input when
/// lossy_fallback is off). In Llm mode transport errors propagate; in
/// StaticThenLlm mode they are recorded in `llm_error`.
Analysis analyze_bytes(std::string_view raw_bytes, const AnalyzeOptions& options);

/// Prompt for `code`, shrinking the script if it does not fit.
Prompt fitted_deobf_prompt(std::string_view code, const LlmConfig& config);

/// URLs from a parsed model answer ("kk" strings are split on the separators).
ExtractionResult extraction_from_answer(const LlmAnswer& answer, const IocOptions& options);

}  // namespace psdeob
