// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "psdeob/cti.hpp"
#include "psdeob/engine.hpp"
#include "psdeob/error.hpp"
#include "psdeob/eval.hpp"
#include "psdeob/synth.hpp"

namespace py = pybind11;
using namespace psdeob;

namespace {

// Scripts may arrive as bytes (raw file content) or str (already text).
std::string as_bytes(const py::object& data) {
  if (py::isinstance<py::bytes>(data)) return data.cast<std::string>();
  if (py::isinstance<py::str>(data)) return data.cast<std::string>();
  throw py::type_error("expected bytes or str");
}

py::dict extraction_dict(const ExtractionResult& r) {
  py::dict d;
  d["urls"] = r.urls;
  d["domains"] = r.domains;
  d["provenance"] = std::string(to_string(r.provenance));
  d["longest_string"] = r.longest_string ? py::cast(*r.longest_string) : py::none();
  return d;
}

py::list prompt_list(const Prompt& p) {
  py::list out;
  for (const auto& m : p.messages) {
    py::dict d;
    d["role"] = m.role;
    d["content"] = m.content;
    out.append(d);
  }
  return out;
}

std::set<Technique> techniques_from(const std::optional<std::vector<std::string>>& names) {
  if (!names) return all_techniques();
  std::set<Technique> out;
  for (const auto& n : *names) {
    auto t = parse_technique(n);
    if (!t) throw py::value_error("unknown technique '" + n + "'");
    out.insert(*t);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_psdeob, m) {
  m.doc() = "Bindings for the psdeob C++ core";
  m.attr("__version__") = "0.1.0";
  py::register_exception<Error>(m, "PsdeobError");

  m.def(
      "decode_input",
      [](const py::bytes& raw) {
        auto src = decode_input(raw.cast<std::string>());
        return py::make_tuple(std::string(to_string(src.encoding_detected)), src.decoded);
      },
      py::arg("raw"), "(encoding, text) for raw script bytes.");

  m.def(
      "deobfuscate",
      [](const py::object& data) {
        AnalyzeOptions o;
        auto a = analyze_bytes(as_bytes(data), o);
        py::dict d;
        d["encoding"] = std::string(to_string(a.source.encoding_detected));
        d["rendered"] = a.deob.rendered;
        d["string_pool"] = a.deob.string_pool;
        d["unknown_statements"] = a.unknown_statements;
        d["iocs"] = extraction_dict(a.iocs);
        return d;
      },
      py::arg("data"), "Static deobfuscation: rendered script, string pool and IOCs.");

  m.def(
      "extract",
      [](const py::object& data, bool fold_www) {
        AnalyzeOptions o;
        o.ioc.fold_www = fold_www;
        return extraction_dict(analyze_bytes(as_bytes(data), o).iocs);
      },
      py::arg("data"), py::arg("fold_www") = false);

  m.def("cti_json", [](const py::object& data) {
    AnalyzeOptions o;
    auto a = analyze_bytes(as_bytes(data), o);
    return cti_to_json(cti_heuristic(a.deob));
  });

  m.def("validate_url", &validate_url, py::arg("candidate"));
  m.def("url_to_domain", &url_to_domain, py::arg("url"), py::arg("fold_www") = false);

  m.def("eval_format", &eval_format, py::arg("format"), py::arg("args"));
  m.def(
      "eval_replace",
      [](const std::string& s, const std::string& a, const std::string& b) { return eval_replace(s, a, b); },
      py::arg("subject"), py::arg("needle"), py::arg("replacement"));
  m.def("eval_split", &eval_split, py::arg("subject"), py::arg("separator"));
  m.def("eval_charcast", &eval_charcast, py::arg("code"));
  m.def("quote_ps_string", &quote_ps_string, py::arg("text"));

  m.def(
      "build_deobf_prompt",
      [](const std::string& code, const std::string& style) {
        return prompt_list(build_deobf_prompt(code, parse_prompt_style(style)));
      },
      py::arg("code"), py::arg("style") = "system-user");
  m.def(
      "build_cti_prompt", [](const std::string& code) { return prompt_list(build_cti_prompt(code)); },
      py::arg("code"));

  m.def(
      "parse_json_response",
      [](const std::string& raw, const std::string& expected) {
        Expected e;
        if (expected == "deobf")
          e = Expected::Deobf;
        else if (expected == "cti")
          e = Expected::Cti;
        else
          throw py::value_error("expected must be 'deobf' or 'cti'");
        auto a = parse_json_response(raw, e);
        py::dict d;
        d["kind"] = std::string(to_string(a.kind));
        d["urls"] = a.urls;
        d["longest"] = a.longest;
        d["description"] = a.cti.description;
        py::list methods;
        for (const auto& mm : a.cti.methods) methods.append(py::make_tuple(mm.id, mm.name));
        d["methods"] = methods;
        d["reason"] = a.reason;
        return d;
      },
      py::arg("raw"), py::arg("expected") = "deobf");

  m.def(
      "generate_corpus",
      [](std::size_t count, std::uint64_t seed, std::optional<std::vector<std::string>> techniques) {
        py::list out;
        for (const auto& s : generate_corpus(count, seed, techniques_from(techniques))) {
          py::dict d;
          d["file_name"] = s.file_name;
          d["content"] = py::bytes(s.content);
          d["sample_id"] = s.truth.sample_id;
          d["urls"] = s.truth.urls;
          out.append(d);
        }
        return out;
      },
      py::arg("count"), py::arg("seed") = 1, py::arg("techniques") = py::none());
  m.def(
      "write_corpus",
      [](const std::string& dir, std::size_t count, std::uint64_t seed,
         std::optional<std::vector<std::string>> techniques) {
        write_corpus(dir, generate_corpus(count, seed, techniques_from(techniques)));
      },
      py::arg("dir"), py::arg("count"), py::arg("seed") = 1, py::arg("techniques") = py::none());

  m.def("evaluate_json", [](const std::string& dir, const std::string& truth, std::size_t jobs, bool lenient,
                            bool fold_www) {
    CorpusOptions o;
    o.jobs = jobs;
    o.score = {lenient, fold_www};
    o.analyze.ioc.fold_www = fold_www;
    py::gil_scoped_release release;
    return report_to_json(run_corpus(dir, truth, o));
  });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli_main(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the psdeob command in-process; returns (exit_code, stdout, stderr).");
}
