// SPDX-License-Identifier: Apache-2.0
//
// File and corpus level driver behind the psdeob command.
//
// Exit codes:
//   0  success (including garbage input, which yields an empty extraction)
//   1  usage or configuration error
//   2  unreadable, empty or unwritable input/output
//   3  model failure with the llm engine
//   4  malformed ground truth or empty corpus
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "psdeob/engine.hpp"
#include "psdeob/synth.hpp"

namespace psdeob {

enum class Mode { Deobfuscate, Extract, Evaluate, Cti, Synth };

std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kInput = 2;
inline constexpr int kLlm = 3;
inline constexpr int kTruth = 4;
}  // namespace exit_code

struct RunConfig {
  Mode mode = Mode::Extract;
  Engine engine = Engine::Static;
  std::vector<std::filesystem::path> inputs;  // files or directories; the corpus for evaluate
  std::optional<std::filesystem::path> truth;
  std::optional<std::filesystem::path> llm_config;
  std::optional<std::filesystem::path> out;  // file, or the corpus directory for synth
  std::size_t jobs = 1;
  bool lenient = false;
  bool fold_www = false;
  std::uint64_t seed = 1;
  std::size_t count = 10;
  std::set<Technique> techniques = all_techniques();
};

/// Empty when the configuration is usable, otherwise the reason.
std::optional<std::string> validate_config(const RunConfig& config);

/// Static chain on one file, then the model when the engine asks for it.
/// Throws UndecodableInput for empty files, Error for unreadable ones and
/// LlmError or PromptTooLarge in llm mode.
Analysis deobfuscate_file(const std::filesystem::path& path, const RunConfig& config, LlmClient* client);

/// {"input", "encoding", "engine", ["rendered"], "iocs", "llm_used", ...}
std::string analysis_to_json(const Analysis& analysis, const std::filesystem::path& input, const RunConfig& config,
                             bool include_render, int indent = 2);

/// Runs one mode. JSON goes to `out` (or the --out file), the human summary
/// and diagnostics to `err`. `client` overrides the one built from
/// --llm-config.
int run_pipeline(const RunConfig& config, std::ostream& out, std::ostream& err, LlmClient* client = nullptr);

}  // namespace psdeob
