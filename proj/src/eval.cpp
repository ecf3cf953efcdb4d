// SPDX-License-Identifier: Apache-2.0
#include "psdeob/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "psdeob/error.hpp"

namespace psdeob {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::vector<GroundTruthEntry> parse_ground_truth(std::istream& in) {
  std::vector<GroundTruthEntry> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw TruthFormatError("not a JSON object", line_no);
    auto str = [&](const char* key) {
      if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty())
        throw TruthFormatError(std::string("missing or empty \"") + key + "\"", line_no);
      return j[key].get<std::string>();
    };
    GroundTruthEntry e;
    e.sample_id = str("sample_id");
    e.script_path = str("script_path");
    if (!j.contains("urls") || !j["urls"].is_array() || j["urls"].empty())
      throw TruthFormatError("\"urls\" must be a non-empty array", line_no);
    for (const auto& u : j["urls"]) {
      if (!u.is_string()) throw TruthFormatError("url entries must be strings", line_no);
      auto url = validate_url(u.get<std::string>());
      if (!url) throw TruthFormatError("invalid URL '" + u.get<std::string>() + "'", line_no);
      e.urls.push_back(*url);
    }
    if (!ids.insert(e.sample_id).second) throw DuplicateSampleId("duplicate sample_id " + e.sample_id);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<GroundTruthEntry> load_ground_truth(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TruthFormatError("cannot read " + path.string(), 0);
  return parse_ground_truth(in);
}

std::string truth_to_jsonl_line(const GroundTruthEntry& entry) {
  ojson j = {{"sample_id", entry.sample_id}, {"script_path", entry.script_path}, {"urls", entry.urls}};
  return j.dump();
}

namespace {

std::string url_key(std::string url, bool lenient) {
  if (lenient)
    while (!url.empty() && url.back() == '/') url.pop_back();
  return url;
}

}  // namespace

PerSampleScore score_sample(const ExtractionResult& extracted, const GroundTruthEntry& truth,
                            const ScoreOptions& options) {
  PerSampleScore s;
  s.sample_id = truth.sample_id;
  s.extracted = extracted;

  std::set<std::string> got;
  for (const auto& u : extracted.urls) got.insert(url_key(u, options.lenient));
  std::set<std::string> seen;
  for (const auto& u : truth.urls) {
    auto norm = validate_url(u).value_or(u);
    auto key = url_key(norm, options.lenient);
    if (!seen.insert(key).second) continue;
    (got.count(key) ? s.true_positive_urls : s.missed_urls).push_back(norm);
  }
  s.truth_url_count = seen.size();

  std::set<std::string> truth_domains;
  for (const auto& u : truth.urls) truth_domains.insert(url_to_domain(validate_url(u).value_or(u), options.fold_www));
  s.truth_domain_count = truth_domains.size();
  std::set<std::string> got_domains;
  for (const auto& u : extracted.urls) {
    auto d = url_to_domain(u, options.fold_www);
    if (!got_domains.insert(d).second) continue;
    (truth_domains.count(d) ? s.true_positive_domains : s.hallucinated_domains).push_back(d);
  }
  return s;
}

EvalReport aggregate(std::vector<PerSampleScore> scores, std::size_t top_k) {
  if (scores.empty()) throw EmptyCorpus("no samples to aggregate");
  EvalReport r;
  std::map<std::string, std::size_t> halluc;
  double macro_url = 0;
  double macro_domain = 0;
  for (const auto& s : scores) {
    r.url_accuracy.num += s.true_positive_urls.size();
    r.url_accuracy.den += s.truth_url_count;
    r.domain_accuracy.num += s.true_positive_domains.size();
    r.domain_accuracy.den += s.truth_domain_count;
    if (s.truth_url_count) macro_url += static_cast<double>(s.true_positive_urls.size()) / s.truth_url_count;
    if (s.truth_domain_count)
      macro_domain += static_cast<double>(s.true_positive_domains.size()) / s.truth_domain_count;
    r.hallucinated_domain_count += s.hallucinated_domains.size();
    for (const auto& d : s.hallucinated_domains) ++halluc[d];
    if (s.refused) ++r.refusal_count;
    if (!s.error.empty()) ++r.error_count;
  }
  r.macro_url_accuracy = macro_url / static_cast<double>(scores.size());
  r.macro_domain_accuracy = macro_domain / static_cast<double>(scores.size());
  r.top_hallucinated.assign(halluc.begin(), halluc.end());
  std::stable_sort(r.top_hallucinated.begin(), r.top_hallucinated.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (r.top_hallucinated.size() > top_k) r.top_hallucinated.resize(top_k);
  r.per_sample = std::move(scores);
  return r;
}

std::string report_to_json(const EvalReport& r, bool include_macro, int indent) {
  auto frac = [](const Fraction& f) {
    return ojson{{"value", f.value()}, {"numerator", f.num}, {"denominator", f.den}};
  };
  ojson top = ojson::array();
  for (const auto& [d, n] : r.top_hallucinated) top.push_back({{"domain", d}, {"count", n}});
  ojson samples = ojson::array();
  for (const auto& s : r.per_sample) {
    ojson row = {{"sample_id", s.sample_id},
                 {"extracted_urls", s.extracted.urls},
                 {"provenance", std::string(to_string(s.extracted.provenance))},
                 {"true_positive_urls", s.true_positive_urls},
                 {"missed_urls", s.missed_urls},
                 {"true_positive_domains", s.true_positive_domains},
                 {"hallucinated_domains", s.hallucinated_domains},
                 {"refused", s.refused}};
    if (!s.error.empty()) row["error"] = s.error;
    samples.push_back(std::move(row));
  }
  ojson j = {{"url_accuracy", frac(r.url_accuracy)}, {"domain_accuracy", frac(r.domain_accuracy)}};
  if (include_macro) {
    j["macro_url_accuracy"] = r.macro_url_accuracy;
    j["macro_domain_accuracy"] = r.macro_domain_accuracy;
  }
  j["hallucinated_domain_count"] = r.hallucinated_domain_count;
  j["top_hallucinated"] = std::move(top);
  j["refusal_count"] = r.refusal_count;
  j["error_count"] = r.error_count;
  j["per_sample"] = std::move(samples);
  return j.dump(indent);
}

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "sample_id,truth_urls,true_positive_urls,truth_domains,true_positive_domains,hallucinated_domains,refused,error\n";
  for (const auto& s : r.per_sample) {
    std::string err = s.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    out << s.sample_id << ',' << s.truth_url_count << ',' << s.true_positive_urls.size() << ','
        << s.truth_domain_count << ',' << s.true_positive_domains.size() << ','
        << s.hallucinated_domains.size() << ',' << (s.refused ? 1 : 0) << ",\"" << err << "\"\n";
  }
  return out.str();
}

std::string report_summary(const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "url %.1f%% domain %.1f%% halluc %zu refusals %zu", r.url_accuracy.value() * 100.0,
                r.domain_accuracy.value() * 100.0, r.hallucinated_domain_count, r.refusal_count);
  return buf;
}

EvalReport run_corpus(const fs::path& corpus_dir, const fs::path& truth_path, const CorpusOptions& options) {
  return run_corpus(corpus_dir, load_ground_truth(truth_path), options);
}

EvalReport run_corpus(const fs::path& corpus_dir, const std::vector<GroundTruthEntry>& truth,
                      const CorpusOptions& options) {
  std::error_code ec;
  bool has_files = false;
  for (fs::directory_iterator it(corpus_dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file()) {
      has_files = true;
      break;
    }
  }
  if (!has_files) throw EmptyCorpus("no script files in " + corpus_dir.string());
  if (truth.empty()) throw EmptyCorpus("ground truth has no entries");

  std::vector<PerSampleScore> scores(truth.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < truth.size();) {
      const auto& entry = truth[i];
      ExtractionResult extracted;
      std::string error;
      bool refused = false;
      try {
        std::ifstream in(corpus_dir / entry.script_path, std::ios::binary);
        if (!in) throw Error("cannot read " + (corpus_dir / entry.script_path).string());
        std::stringstream ss;
        ss << in.rdbuf();
        auto a = analyze_bytes(ss.str(), options.analyze);
        extracted = a.iocs;
        refused = a.answer && a.answer->kind == AnswerKind::Refusal;
        error = a.llm_error;
      } catch (const std::exception& e) {
        error = e.what();
      }
      scores[i] = score_sample(extracted, entry, options.score);
      scores[i].refused = refused;
      scores[i].error = error;
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, truth.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return aggregate(std::move(scores));
}

}  // namespace psdeob
