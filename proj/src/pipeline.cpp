// SPDX-License-Identifier: Apache-2.0
#include "psdeob/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <sstream>
#include <thread>

#include "psdeob/cti.hpp"
#include "psdeob/error.hpp"
#include "psdeob/eval.hpp"

namespace psdeob {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Deobfuscate: return "deobfuscate";
    case Mode::Extract: return "extract";
    case Mode::Evaluate: return "evaluate";
    case Mode::Cti: return "cti";
    case Mode::Synth: return "synth";
  }
  return "extract";
}

std::optional<Mode> parse_mode(std::string_view s) {
  for (auto m : {Mode::Deobfuscate, Mode::Extract, Mode::Evaluate, Mode::Cti, Mode::Synth})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

std::optional<std::string> validate_config(const RunConfig& c) {
  if (c.jobs < 1) return "--jobs must be at least 1";
  if (c.mode == Mode::Synth) {
    if (!c.out) return "synth needs --out <directory>";
    return std::nullopt;
  }
  if (c.inputs.empty()) return std::string(to_string(c.mode)) + " needs --input";
  if (c.mode == Mode::Evaluate) {
    if (!c.truth) return "evaluate needs --truth";
    if (c.inputs.size() != 1) return "evaluate takes exactly one corpus directory";
  }
  if (c.engine != Engine::Static && !c.llm_config) return "the llm engines need --llm-config";
  return std::nullopt;
}

namespace {

std::string read_file(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Error("cannot read " + path.string() + ": not a regular file");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error("cannot read " + path.string());
  return ss.str();
}

AnalyzeOptions analyze_options(const RunConfig& c, LlmClient* client) {
  AnalyzeOptions o;
  o.engine = c.engine;
  o.ioc.fold_www = c.fold_www;
  o.client = client;
  return o;
}

ojson iocs_json(const ExtractionResult& r) {
  ojson j = {{"urls", r.urls}, {"domains", r.domains}, {"provenance", std::string(to_string(r.provenance))}};
  if (r.longest_string) j["longest_string"] = *r.longest_string;
  return j;
}

// Directories expand to their regular files in name order.
std::vector<fs::path> expand_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& p : inputs) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<fs::path> files;
      for (fs::directory_iterator it(p, ec), end; !ec && it != end; it.increment(ec))
        if (it->is_regular_file()) files.push_back(it->path());
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

// Writes to --out when given, otherwise to `out`.
bool emit(const RunConfig& c, std::ostream& out, std::ostream& err, const std::string& text) {
  const char* tail = !text.empty() && text.back() == '\n' ? "" : "\n";
  if (!c.out) {
    out << text << tail;
    return true;
  }
  std::ofstream f(*c.out, std::ios::binary);
  f << text << tail;
  if (!f) {
    err << "psdeob: cannot write " << c.out->string() << '\n';
    return false;
  }
  return true;
}

struct FileJob {
  fs::path path;
  std::string json;
  std::string summary;
  std::string message;
  int code = exit_code::kOk;
};

template <typename F>
void for_each_parallel(std::vector<FileJob>& jobs, std::size_t workers, F fn) {
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) fn(jobs[i]);
  };
  workers = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  if (workers == 1) {
    loop();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
}

template <typename F>
int run_files(const RunConfig& c, std::ostream& out, std::ostream& err, F analyze_one) {
  std::vector<FileJob> jobs;
  for (auto& p : expand_inputs(c.inputs)) jobs.push_back({p, {}, {}, {}, exit_code::kOk});
  if (jobs.empty()) {
    err << "psdeob: no input files\n";
    return exit_code::kInput;
  }
  for_each_parallel(jobs, c.jobs, [&](FileJob& job) {
    try {
      analyze_one(job);
    } catch (const UndecodableInput& e) {
      job.code = exit_code::kInput;
      job.message = e.what();
    } catch (const LlmError& e) {
      job.code = exit_code::kLlm;
      job.message = e.what();
    } catch (const PromptTooLarge& e) {
      job.code = exit_code::kLlm;
      job.message = e.what();
    } catch (const std::exception& e) {
      job.code = exit_code::kInput;
      job.message = e.what();
    }
  });

  int code = exit_code::kOk;
  std::vector<const FileJob*> done;
  for (const auto& job : jobs) {
    if (job.code != exit_code::kOk) {
      err << "psdeob: " << job.path.string() << ": " << job.message << '\n';
      code = std::max(code, job.code);
      continue;
    }
    err << job.path.string() << ": " << job.summary << '\n';
    done.push_back(&job);
  }
  if (done.empty()) return code;
  std::string text;
  if (jobs.size() == 1) {
    text = done.front()->json;
  } else {
    text = "[";
    for (std::size_t i = 0; i < done.size(); ++i) text += (i ? ",\n" : "\n") + done[i]->json;
    text += "\n]";
  }
  if (!emit(c, out, err, text)) return exit_code::kInput;
  return code;
}

std::string ioc_summary(const Analysis& a) {
  std::string s = std::to_string(a.iocs.urls.size()) + " urls, " + std::to_string(a.iocs.domains.size()) +
                  " domains (" + std::string(to_string(a.iocs.provenance)) + ")";
  if (a.answer && a.answer->kind == AnswerKind::Refusal) s += ", model refused";
  if (!a.llm_error.empty()) s += ", model unavailable: " + a.llm_error;
  return s;
}

int run_evaluate(const RunConfig& c, std::ostream& out, std::ostream& err, LlmClient* client) {
  const auto& corpus = c.inputs.front();
  std::error_code ec;
  if (!fs::is_directory(corpus, ec)) {
    err << "psdeob: corpus directory " << corpus.string() << " not found\n";
    return exit_code::kInput;
  }
  EvalReport report;
  try {
    CorpusOptions o;
    o.analyze = analyze_options(c, client);
    o.score = {c.lenient, c.fold_www};
    o.jobs = c.jobs;
    report = run_corpus(corpus, *c.truth, o);
  } catch (const TruthFormatError& e) {
    err << "psdeob: " << c.truth->string() << ": " << e.what() << '\n';
    return exit_code::kTruth;
  } catch (const DuplicateSampleId& e) {
    err << "psdeob: " << c.truth->string() << ": " << e.what() << '\n';
    return exit_code::kTruth;
  } catch (const EmptyCorpus& e) {
    err << "psdeob: " << e.what() << '\n';
    return exit_code::kTruth;
  }
  const bool csv = c.out && c.out->extension() == ".csv";
  if (!emit(c, out, err, csv ? report_to_csv(report) : report_to_json(report))) return exit_code::kInput;
  err << report_summary(report) << '\n';
  return exit_code::kOk;
}

int run_synth(const RunConfig& c, std::ostream& err) {
  try {
    write_corpus(*c.out, generate_corpus(c.count, c.seed, c.techniques));
  } catch (const std::exception& e) {
    err << "psdeob: " << e.what() << '\n';
    return exit_code::kInput;
  }
  err << "wrote " << c.count << " samples to " << c.out->string() << '\n';
  return exit_code::kOk;
}

}  // namespace

Analysis deobfuscate_file(const fs::path& path, const RunConfig& config, LlmClient* client) {
  return analyze_bytes(read_file(path), analyze_options(config, client));
}

std::string analysis_to_json(const Analysis& a, const fs::path& input, const RunConfig& c, bool include_render,
                             int indent) {
  ojson j = {{"input", input.string()},
             {"encoding", std::string(to_string(a.source.encoding_detected))},
             {"engine", std::string(to_string(c.engine))}};
  if (include_render) {
    j["rendered"] = a.deob.rendered;
    j["unknown_statements"] = a.unknown_statements;
  }
  j["iocs"] = iocs_json(a.iocs);
  j["llm_used"] = a.llm_used;
  if (a.answer) j["llm_answer"] = std::string(to_string(a.answer->kind));
  if (!a.llm_error.empty()) j["llm_error"] = a.llm_error;
  return j.dump(indent);
}

int run_pipeline(const RunConfig& c, std::ostream& out, std::ostream& err, LlmClient* client) {
  if (auto problem = validate_config(c)) {
    err << "psdeob: " << *problem << '\n';
    return exit_code::kUsage;
  }
  std::unique_ptr<LlmClient> owned;
  if (c.engine != Engine::Static && c.mode != Mode::Synth && !client) {
    try {
      owned = std::make_unique<LlmClient>(load_llm_config(*c.llm_config));
    } catch (const std::exception& e) {
      err << "psdeob: " << c.llm_config->string() << ": " << e.what() << '\n';
      return exit_code::kUsage;
    }
    client = owned.get();
  }

  switch (c.mode) {
    case Mode::Deobfuscate:
    case Mode::Extract: {
      const bool render = c.mode == Mode::Deobfuscate;
      return run_files(c, out, err, [&](FileJob& job) {
        auto a = deobfuscate_file(job.path, c, client);
        job.json = analysis_to_json(a, job.path, c, render);
        job.summary = ioc_summary(a);
      });
    }
    case Mode::Cti:
      return run_files(c, out, err, [&](FileJob& job) {
        RunConfig static_only = c;
        static_only.engine = Engine::Static;
        auto a = deobfuscate_file(job.path, static_only, nullptr);
        IocOptions ioc;
        ioc.fold_www = c.fold_www;
        CtiReport report;
        if (c.engine == Engine::Static) {
          report = cti_heuristic(a.deob, default_cti_rules(), ioc);
        } else {
          try {
            report = cti_from_llm(a.source.decoded, *client, a.deob, default_cti_rules(), ioc);
          } catch (const std::exception& e) {
            if (c.engine == Engine::Llm) throw;
            report = cti_heuristic(a.deob, default_cti_rules(), ioc);
            job.summary = "model unavailable: " + std::string(e.what()) + "; ";
          }
        }
        job.json = cti_to_json(report);
        job.summary += std::to_string(report.methods.size()) + " techniques (" +
                       std::string(to_string(report.source)) + ")";
      });
    case Mode::Evaluate:
      return run_evaluate(c, out, err, client);
    case Mode::Synth:
      return run_synth(c, err);
  }
  return exit_code::kUsage;
}

}  // namespace psdeob
