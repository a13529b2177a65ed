// Python bindings: a thin layer over the parser, graph paths, loss and metric
// helpers, the synthetic generator and the command-line entry point.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "semsin/cli.hpp"
#include "semsin/evaluation.hpp"
#include "semsin/graph.hpp"
#include "semsin/penman.hpp"
#include "semsin/synthetic.hpp"
#include "semsin/training.hpp"

namespace py = pybind11;
using namespace semsin;

namespace {

std::string roundtrip(const std::string& text) { return penman::serialize_penman(penman::parse_penman(text)); }

// Shortest paths between two variables as lists of alternating concept and
// role strings; inverse roles get a "^-1" suffix.
std::vector<std::vector<std::string>> paths_between(const std::string& amr, const std::string& v1,
                                                    const std::string& v2, std::size_t max_paths) {
  const auto sg = graph::build_semantic_graph(penman::parse_penman(amr), {});
  const auto a = sg.find_variable(v1);
  const auto b = sg.find_variable(v2);
  if (!a || !b) throw std::invalid_argument("unknown variable");
  std::vector<std::vector<std::string>> out;
  for (const auto& p : graph::shortest_paths(sg, *a, *b, max_paths)) {
    std::vector<std::string> seq{sg.nodes[p.nodes[0]].concept_name};
    for (std::size_t i = 0; i < p.length(); ++i) {
      const auto& r = sg.role_vocab[p.roles[i]];
      seq.push_back(r.label + (r.inverse ? "^-1" : ""));
      seq.push_back(sg.nodes[p.nodes[i + 1]].concept_name);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

py::tuple synthetic(std::size_t docs, std::uint64_t seed) {
  const auto syn = data::gen_synthetic(docs, seed);
  std::ostringstream corpus, truth;
  data::write_corpus(corpus, syn.records);
  for (const auto& t : syn.truth) truth << data::truth_to_json(t) << "\n";
  return py::make_tuple(corpus.str(), truth.str());
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> all{"semsin"};
  all.insert(all.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : all) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_semsin, m) {
  static py::exception<Error> semsin_error(m, "SemsinError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(semsin_error, (e.code() + ": " + e.what()).c_str());
    }
  });

  m.def("roundtrip_penman", &roundtrip, py::arg("text"), "Parse and re-serialize a PENMAN graph.");
  m.def("isomorphic", [](const std::string& a, const std::string& b) {
    return penman::isomorphic(penman::parse_penman(a), penman::parse_penman(b));
  });
  m.def("shortest_paths", &paths_between, py::arg("amr"), py::arg("v1"), py::arg("v2"),
        py::arg("max_paths") = graph::kDefaultMaxPaths);
  m.def("focal_loss", &training::focal_loss_value, py::arg("p_true"), py::arg("label"), py::arg("beta") = 0.5,
        py::arg("gamma") = 2.0);
  m.def("f1_from_pr", &eval::f1_from_pr, py::arg("precision"), py::arg("recall"));
  m.def("synthetic", &synthetic, py::arg("docs"), py::arg("seed"), "Returns (corpus_jsonl, truth_jsonl).");
  m.def("run_cli", &run_cli, py::arg("args"), "Runs a subcommand; returns (exit_code, stdout, stderr).");
}
