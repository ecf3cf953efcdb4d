// SPDX-License-Identifier: Apache-2.0
//
// Synthetic obfuscated droppers with known URL lists.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "psdeob/eval.hpp"

namespace psdeob {

enum class Technique { SplitStrings, FormatOp, ReplaceToken, CharCast, Backticks, DeadCode, RandomNames };

std::string_view to_string(Technique t);
std::optional<Technique> parse_technique(std::string_view s);
std::set<Technique> all_techniques();

struct SyntheticSample {
  std::string script;
  GroundTruthEntry truth;  // sample_id is the SHA-256 of `script`
};

/// Deterministic in (urls, seed, techniques). `urls` must be non-empty and
/// valid.
SyntheticSample generate_synthetic_sample(const std::vector<std::string>& urls, std::uint64_t seed,
                                          const std::set<Technique>& techniques);

/// `count` distinct plausible dropper URLs.
std::vector<std::string> random_urls(std::uint64_t seed, std::size_t count);

struct CorpusSample {
  std::string file_name;
  std::string content;  // bytes as written; odd-numbered samples are base64 UTF-16LE
  GroundTruthEntry truth;
};

/// Sample i gets 4..9 URLs; sample ids hash the written bytes.
std::vector<CorpusSample> generate_corpus(std::size_t count, std::uint64_t seed,
                                          const std::set<Technique>& techniques);

/// Writes the samples and `truth.jsonl` into `dir` (created if missing).
/// Throws std::filesystem::filesystem_error or Error on I/O failure.
void write_corpus(const std::filesystem::path& dir, const std::vector<CorpusSample>& samples);

inline constexpr std::string_view kTruthFileName = "truth.jsonl";

std::string sha256_hex(std::string_view bytes);

}  // namespace psdeob
