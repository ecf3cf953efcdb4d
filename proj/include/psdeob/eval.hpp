// SPDX-License-Identifier: Apache-2.0
//
// Ground truth, per-sample scoring and corpus-level aggregation.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "psdeob/engine.hpp"
#include "psdeob/ioc.hpp"

namespace psdeob {

struct GroundTruthEntry {
  std::string sample_id;
  std::string script_path;  // relative to the corpus directory
  std::vector<std::string> urls;
};

/// JSON lines with sample_id, script_path and urls. Throws TruthFormatError
/// (1-based line) or DuplicateSampleId. Blank lines are skipped.
std::vector<GroundTruthEntry> parse_ground_truth(std::istream& in);
std::vector<GroundTruthEntry> load_ground_truth(const std::filesystem::path& path);
std::string truth_to_jsonl_line(const GroundTruthEntry& entry);

struct ScoreOptions {
  /// Ignore trailing slashes when comparing URLs.
  bool lenient = false;
  bool fold_www = false;
};

struct PerSampleScore {
  std::string sample_id;
  ExtractionResult extracted;
  std::vector<std::string> true_positive_urls;
  std::vector<std::string> missed_urls;
  std::vector<std::string> true_positive_domains;
  std::vector<std::string> hallucinated_domains;
  std::size_t truth_url_count = 0;
  std::size_t truth_domain_count = 0;
  bool refused = false;
  std::string error;  // I/O, decode or transport failure for this sample
};

PerSampleScore score_sample(const ExtractionResult& extracted, const GroundTruthEntry& truth,
                            const ScoreOptions& options = {});

/// Exact ratio; equality compares cross products.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 0;
  double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
  bool equals(std::uint64_t n, std::uint64_t d) const { return num * d == n * den; }
};

struct EvalReport {
  Fraction url_accuracy;     // micro-average over truth URLs
  Fraction domain_accuracy;  // micro-average over unique truth domains per sample
  double macro_url_accuracy = 0;
  double macro_domain_accuracy = 0;
  std::size_t hallucinated_domain_count = 0;
  std::vector<std::pair<std::string, std::size_t>> top_hallucinated;
  std::vector<PerSampleScore> per_sample;
  std::size_t refusal_count = 0;
  std::size_t error_count = 0;
};

inline constexpr std::size_t kTopHallucinated = 20;

/// Throws EmptyCorpus for an empty list.
EvalReport aggregate(std::vector<PerSampleScore> scores, std::size_t top_k = kTopHallucinated);

std::string report_to_json(const EvalReport& report, bool include_macro = true, int indent = 2);
std::string report_to_csv(const EvalReport& report);
/// "url 100.0% domain 100.0% halluc 0 refusals 0"
std::string report_summary(const EvalReport& report);

struct CorpusOptions {
  AnalyzeOptions analyze;
  ScoreOptions score;
  std::size_t jobs = 1;
};

/// Scores every truth entry against its script. Per-sample failures are kept
/// in the report. Throws EmptyCorpus when the directory has no files or the
/// truth has no entries.
EvalReport run_corpus(const std::filesystem::path& corpus_dir, const std::filesystem::path& truth_path,
                      const CorpusOptions& options);
EvalReport run_corpus(const std::filesystem::path& corpus_dir, const std::vector<GroundTruthEntry>& truth,
                      const CorpusOptions& options);

}  // namespace psdeob
