// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>

#include "psdeob/pipeline.hpp"

namespace psdeob {

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Static PowerShell deobfuscation and URL extraction, with optional LLM fallback.", "psdeob"};
  app.set_version_flag("--version", "psdeob 0.1.0");

  RunConfig c;
  std::string mode_flag;
  std::string engine = "static";
  std::vector<std::string> positionals;
  std::vector<std::string> inputs;
  std::vector<std::string> techniques;
  std::string truth, llm_config, out_path;

  app.add_option("args", positionals, "[mode] [inputs...]; mode is deobfuscate|extract|evaluate|cti|synth");
  app.add_option("--mode", mode_flag, "deobfuscate | extract | evaluate | cti | synth");
  app.add_option("--engine", engine, "static | llm | static-then-llm")->capture_default_str();
  app.add_option("-i,--input", inputs, "script file, directory, or corpus directory for evaluate");
  app.add_option("--truth", truth, "ground-truth JSONL (evaluate)");
  app.add_option("--llm-config", llm_config, "LLM endpoint configuration (JSON)");
  app.add_option("-o,--out", out_path, "output file; corpus directory for synth");
  app.add_option("-j,--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--lenient", c.lenient, "ignore trailing slashes when matching URLs");
  app.add_flag("--fold-www", c.fold_www, "treat www.example.com as example.com");
  app.add_option("--seed", c.seed, "generator seed (synth)")->capture_default_str();
  app.add_option("--count", c.count, "number of samples (synth)")->capture_default_str();
  app.add_option("--technique", techniques, "obfuscation technique for synth (repeatable; default all)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  auto usage = [&](const std::string& msg) {
    err << "psdeob: " << msg << "\nRun with --help for usage.\n";
    return exit_code::kUsage;
  };

  std::size_t first_input = 0;
  std::optional<Mode> mode;
  if (!positionals.empty()) {
    if (auto m = parse_mode(positionals.front())) {
      mode = m;
      first_input = 1;
    }
  }
  if (!mode_flag.empty()) {
    auto m = parse_mode(mode_flag);
    if (!m) return usage("unknown mode '" + mode_flag + "'");
    if (mode && *mode != *m) return usage("conflicting modes '" + positionals.front() + "' and '" + mode_flag + "'");
    mode = m;
  }
  if (!mode) {
    if (positionals.empty()) return usage("no mode given");
    return usage("unknown mode '" + positionals.front() + "'");
  }
  c.mode = *mode;

  auto e = parse_engine(engine);
  if (!e) return usage("unknown engine '" + engine + "'");
  c.engine = *e;

  for (const auto& in : inputs) c.inputs.emplace_back(in);
  for (std::size_t i = first_input; i < positionals.size(); ++i) c.inputs.emplace_back(positionals[i]);
  if (!truth.empty()) c.truth = truth;
  if (!llm_config.empty()) c.llm_config = llm_config;
  if (!out_path.empty()) c.out = out_path;
  if (!techniques.empty()) {
    c.techniques.clear();
    for (const auto& t : techniques) {
      auto parsed = parse_technique(t);
      if (!parsed) return usage("unknown technique '" + t + "'");
      c.techniques.insert(*parsed);
    }
  }
  return run_pipeline(c, out, err);
}

}  // namespace psdeob
