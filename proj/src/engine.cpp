// SPDX-License-Identifier: Apache-2.0
#include "psdeob/engine.hpp"

#include <stdexcept>

#include "psdeob/error.hpp"
#include "psdeob/parser.hpp"

namespace psdeob {

std::string_view to_string(Engine e) {
  switch (e) {
    case Engine::Static: return "static";
    case Engine::Llm: return "llm";
    case Engine::StaticThenLlm: return "static-then-llm";
  }
  return "static";
}

std::optional<Engine> parse_engine(std::string_view s) {
  if (s == "static") return Engine::Static;
  if (s == "llm") return Engine::Llm;
  if (s == "static-then-llm") return Engine::StaticThenLlm;
  return std::nullopt;
}

Prompt fitted_deobf_prompt(std::string_view code, const LlmConfig& config) {
  try {
    return build_deobf_prompt(code, config.style, config.max_chars);
  } catch (const PromptTooLarge&) {
    const auto& t = deobf_template(config.style);
    const auto overhead = t.system_text.size() + t.user_text_with_code_slot.size() + 32;
    auto reduced = reduce_script(code, config.max_chars > overhead ? config.max_chars - overhead : 0);
    return build_deobf_prompt(reduced, config.style, config.max_chars);
  }
}

ExtractionResult extraction_from_answer(const LlmAnswer& answer, const IocOptions& options) {
  if (answer.kind == AnswerKind::UrlList) return make_extraction(answer.urls, Provenance::Llm, options);
  if (answer.kind == AnswerKind::LongestString) {
    auto r = make_extraction(urls_in_text(answer.longest, options), Provenance::Llm, options);
    if (r.urls.empty()) r.longest_string = answer.longest;
    return r;
  }
  ExtractionResult r;
  r.provenance = Provenance::Llm;
  return r;
}

Analysis analyze_bytes(std::string_view raw_bytes, const AnalyzeOptions& options) {
  Analysis a;
  try {
    a.source = decode_input(raw_bytes);
  } catch (const UndecodableInput&) {
    if (!options.lossy_fallback || raw_bytes.empty()) throw;
    a.source = decode_lossy(raw_bytes);
  }
  auto ast = parse_source(a.source.decoded);
  a.unknown_statements = count_unknown_statements(ast.statements);
  a.deob = run_script(ast, options.render);
  a.static_iocs = extract_urls(a.deob, options.ioc);
  a.iocs = a.static_iocs;
  if (options.engine == Engine::Static) return a;
  if (options.engine == Engine::StaticThenLlm && !a.static_iocs.urls.empty()) return a;
  if (!options.client) throw std::invalid_argument("LLM engine needs a client");

  auto ask = [&] {
    auto prompt = fitted_deobf_prompt(a.source.decoded, options.client->config());
    a.llm_used = true;
    a.answer = parse_json_response(options.client->complete(prompt), Expected::Deobf,
                                   options.client->config().refusal_patterns);
  };
  if (options.engine == Engine::Llm) {
    ask();
    a.iocs = extraction_from_answer(*a.answer, options.ioc);
    return a;
  }
  try {
    ask();
    auto llm = extraction_from_answer(*a.answer, options.ioc);
    if (!llm.urls.empty()) a.iocs = std::move(llm);
  } catch (const LlmError& e) {
    a.llm_error = e.what();
  } catch (const PromptTooLarge& e) {
    a.llm_error = e.what();
  }
  return a;
}

}  // namespace psdeob
