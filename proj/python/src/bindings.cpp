// Copyright 2026 The vngale Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vngale/certification.hpp"
#include "vngale/cli.hpp"
#include "vngale/error.hpp"
#include "vngale/instances.hpp"
#include "vngale/io.hpp"

namespace py = pybind11;

namespace {

using vng::io::Json;

struct PyProblem {
  vng::io::ProblemFile file;
};

struct PySolution {
  vng::Solution solution;
  vng::SolverOptions options;
  std::string digest;
};

std::map<std::string, Eigen::VectorXd> path_dict(const vng::Path& path,
                                                 const vng::ScenarioTree& tree) {
  std::map<std::string, Eigen::VectorXd> out;
  for (vng::NodeIndex n = 0; n < tree.size(); ++n) {
    out[tree.id(n)] = path[static_cast<std::size_t>(tree.depth(n))].at(tree, n);
  }
  return out;
}

py::dict certificate_dict(const vng::RapidityCertificate& c) {
  py::dict d;
  d["certified"] = c.certified;
  d["tol"] = c.tol;
  d["max_normalization"] = c.max_normalization;
  d["max_membership"] = c.max_membership;
  d["max_transition"] = c.max_transition;
  d["max_feasibility"] = c.max_feasibility;
  d["supermartingale"] = c.supermartingale;
  d["competitors"] = c.competitors;
  if (c.witness) {
    py::dict w;
    w["check"] = c.witness->check;
    w["t"] = c.witness->t;
    w["node"] = c.witness->node;
    w["value"] = c.witness->value;
    d["witness"] = w;
  } else {
    d["witness"] = py::none();
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Log-optimal paths with certified supporting duals";
  m.attr("__version__") = std::string(vng::io::tool_version());

  py::register_exception<vng::Error>(m, "VngaleError", PyExc_RuntimeError);

  py::class_<PyProblem>(m, "Problem")
      .def_static("from_json",
                  [](const std::string& text) {
                    return PyProblem{vng::io::parse_problem(Json::parse(text))};
                  })
      .def_static("from_file",
                  [](const std::string& path) {
                    return PyProblem{vng::io::read_problem(path)};
                  })
      .def_static("kelly",
                  [] { return PyProblem{{vng::kelly_problem(), {}}}; })
      .def_static(
          "random",
          [](std::uint64_t seed) { return PyProblem{{vng::random_problem(seed), {}}}; },
          py::arg("seed"))
      .def("to_json",
           [](const PyProblem& p) {
             return vng::io::dump(vng::io::problem_to_json(p.file));
           })
      .def("digest", [](const PyProblem& p) { return vng::io::digest(p.file); })
      .def_property_readonly(
          "horizon", [](const PyProblem& p) { return p.file.problem.market.horizon(); })
      .def_property_readonly(
          "assets", [](const PyProblem& p) { return p.file.problem.market.assets(); })
      .def_property_readonly("x0", [](const PyProblem& p) { return p.file.problem.x0; })
      .def("scaled",
           [](const PyProblem& p, double c) {
             PyProblem out = p;
             out.file.problem.x0 *= c;
             return out;
           })
      .def("constants", [](const PyProblem& p) {
        const vng::MarketConstants c = vng::market_constants(p.file.problem.market);
        py::dict d;
        d["nu"] = c.nu;
        d["c1"] = c.c1;
        d["c2"] = c.c2;
        d["k"] = c.k;
        d["h"] = c.h;
        return d;
      });

  py::class_<PySolution>(m, "Solution")
      .def_property_readonly("objective",
                             [](const PySolution& s) { return s.solution.objective; })
      .def_property_readonly("converged",
                             [](const PySolution& s) { return s.solution.converged; })
      .def_property_readonly("iterations",
                             [](const PySolution& s) { return s.solution.iterations; })
      .def_property_readonly("duality_gap",
                             [](const PySolution& s) { return s.solution.duality_gap; })
      .def_property_readonly("digest", [](const PySolution& s) { return s.digest; });

  m.def(
      "solve",
      [](const PyProblem& p, double tol, int max_iter) {
        vng::io::ProblemFile file = p.file;
        file.options.tol = tol;
        file.options.max_iter = max_iter;
        py::gil_scoped_release release;
        return PySolution{vng::solve_log_optimal(file.problem, file.options),
                          file.options, vng::io::digest(file)};
      },
      py::arg("problem"), py::arg("tol") = 1e-8, py::arg("max_iter") = 500);

  m.def(
      "path",
      [](const PyProblem& p, const PySolution& s) {
        return path_dict(s.solution.path, p.file.problem.market.tree());
      },
      py::arg("problem"), py::arg("solution"));

  m.def(
      "solution_json",
      [](const PyProblem& p, const PySolution& s) {
        return vng::io::dump(vng::io::solution_to_json(
            {s.solution, s.options, s.digest}, p.file.problem.market.tree()));
      },
      py::arg("problem"), py::arg("solution"));

  m.def(
      "certify",
      [](const PyProblem& p, const PySolution& s, double tol, int competitors,
         std::uint64_t seed) {
        const vng::DualPath dual = vng::extract_dual(s.solution, p.file.problem);
        return certificate_dict(vng::io::verify_with_competitors(
            s.solution.path, dual, p.file.problem.market, tol, competitors, seed));
      },
      py::arg("problem"), py::arg("solution"), py::arg("tol") = 1e-6,
      py::arg("competitors") = 200, py::arg("seed") = 0);

  m.def(
      "growth_table",
      [](const PyProblem& p, const PySolution& s, const std::string& strategy) {
        const vng::MarketData& md = p.file.problem.market;
        const vng::DualPath dual = vng::extract_dual(s.solution, p.file.problem);
        const vng::Path y = vng::cli::strategy_path(
            strategy, md, vng::market_constants(md), s.solution.path);
        const vng::GrowthTable table = vng::growth_dominance(dual, y, md, false);
        py::list rows;
        for (const vng::GrowthRow& r : table.rows) {
          rows.append(py::make_tuple(r.t, r.node, r.ratio, r.proviso));
        }
        return rows;
      },
      py::arg("problem"), py::arg("solution"), py::arg("strategy"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = vng::cli::run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
