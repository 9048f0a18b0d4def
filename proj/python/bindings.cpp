#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hypcse/checks.hpp"
#include "hypcse/decode.hpp"
#include "hypcse/entropy.hpp"
#include "hypcse/errors.hpp"
#include "hypcse/geometry.hpp"
#include "hypcse/pipeline.hpp"
#include "hypcse/tree.hpp"

namespace py = pybind11;
using namespace hypcse;

namespace {

using EdgeTuple = std::tuple<int, int, double>;

graph::WeightedGraph make_graph(int n, const std::vector<EdgeTuple>& edges) {
  std::vector<graph::Edge> list;
  list.reserve(edges.size());
  for (const auto& [u, v, w] : edges) list.push_back({u, v, w});
  return graph::WeightedGraph(n, std::move(list));
}

std::vector<geometry::PoincareVec> make_points(const std::vector<std::vector<double>>& rows) {
  std::vector<geometry::PoincareVec> z;
  z.reserve(rows.size());
  for (const auto& r : rows) z.push_back(geometry::PoincareVec{r});
  return z;
}

py::dict decode_points(const std::vector<std::vector<double>>& points, const std::string& method, int k) {
  const std::vector<geometry::PoincareVec> z = make_points(points);
  tree::Dendrogram d;
  if (method == "naive") {
    d = decode::decode_tree_naive(z);
  } else if (method == "fast") {
    d = decode::decode_tree_fast(z, k);
  } else {
    throw UsageError("method must be naive or fast, got " + method);
  }
  std::vector<std::tuple<int, int, int>> merges;
  for (const tree::Merge& m : d.merges) merges.emplace_back(m.a, m.b, m.id);
  py::dict out;
  out["merges"] = merges;
  out["newick"] = tree::to_newick(tree::PartitionTree::from_dendrogram(d));
  return out;
}

py::dict run(const std::map<std::string, std::string>& settings) {
  pipeline::RunConfig cfg;
  for (const auto& [key, value] : settings) cfg.set(key, value);
  pipeline::RunReport r;
  {
    py::gil_scoped_release release;
    r = pipeline::run_training(cfg);
  }
  py::dict out;
  out["dp"] = r.best.dp;
  out["se"] = r.best.se;
  out["dasgupta"] = r.best.dasgupta;
  out["best_epoch"] = r.best_epoch;
  out["reference_se"] = r.reference_se;
  out["max_manifold_error"] = r.max_manifold_error;
  out["newick"] = tree::to_newick(tree::PartitionTree::from_dendrogram(r.best_tree));
  out["losses_csv"] = pipeline::losses_csv(r);
  return out;
}

py::dict check(const std::string& name) {
  checks::CheckResult r;
  {
    py::gil_scoped_release release;
    r = checks::run_check(name);
  }
  py::dict out;
  out["name"] = r.name;
  out["passed"] = r.passed;
  out["cases"] = r.cases;
  out["worst"] = r.worst;
  out["detail"] = r.detail;
  out["seconds"] = r.seconds;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Structural-entropy hierarchical clustering in hyperbolic space";

  py::register_exception<DataError>(m, "DataError", PyExc_OSError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

  m.def(
      "geodesic_origin_distance",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        return geometry::geodesic_origin_distance(x, y);
      },
      py::arg("x"), py::arg("y"),
      "Distance from the origin to the geodesic segment between two Poincare points.");

  m.def(
      "structural_entropy",
      [](int n, const std::vector<EdgeTuple>& edges, const std::string& newick) {
        return entropy::structural_entropy(make_graph(n, edges), tree::parse_newick(newick));
      },
      py::arg("n"), py::arg("edges"), py::arg("newick"),
      "Structural entropy of a graph given as (u, v, w) edges under a Newick tree.");

  m.def(
      "dendrogram_purity",
      [](const std::string& newick, const std::vector<int>& labels) {
        return entropy::dendrogram_purity(tree::parse_newick(newick), labels);
      },
      py::arg("newick"), py::arg("labels"));

  m.def("decode_tree", &decode_points, py::arg("points"), py::arg("method") = "naive", py::arg("k") = 10,
        "Single-linkage hierarchy of Poincare points; returns merges and Newick text.");

  m.def("run", &run, py::arg("settings"),
        "Trains on settings given as config key to text value and returns the selected metrics.");

  m.def("run_check", &check, py::arg("name"));
}
