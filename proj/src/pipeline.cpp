#include "hypcse/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "hypcse/autodiff.hpp"
#include "hypcse/cse.hpp"
#include "hypcse/decode.hpp"
#include "hypcse/diag.hpp"
#include "hypcse/errors.hpp"
#include "hypcse/geometry.hpp"
#include "hypcse/gsl.hpp"
#include "hypcse/model.hpp"
#include "hypcse/objective.hpp"
#include "hypcse/optimizer.hpp"
#include "hypcse/random.hpp"

namespace hypcse::pipeline {

namespace fs = std::filesystem;

// Configuration ---------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_double(std::string_view s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  if (t.front() == '+') t.erase(0, 1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

double to_double(const std::string& key, const std::string& value) {
  const auto v = parse_double(value);
  if (!v) throw UsageError("config key '" + key + "' expects a number, got '" + value + "'");
  return *v;
}

int to_int(const std::string& key, const std::string& value) {
  const auto v = parse_int(value);
  if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) {
    throw UsageError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
  return static_cast<int>(*v);
}

bool to_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key '" + key + "' expects true or false, got '" + value + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10f", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "dataset",      "label",         "k",            "sigma",          "standardize",
      "p",            "tau",           "t1",           "r1",             "t2",
      "r2",           "eta1",          "eta2",         "epochs",         "n_prime",
      "n_seed",       "subgraph_min_n", "hidden",      "embed",          "max_norm",
      "cse_radius",   "learner",       "lr_riemannian", "lr_euclidean",  "edge_drop",
      "feature_mask", "seed",          "output",       "decode",         "decode_k",
      "rho_max"};
  return k;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "dataset") dataset = value;
  else if (key == "label") label = value;
  else if (key == "k") k = to_int(key, value);
  else if (key == "sigma") sigma = to_double(key, value);
  else if (key == "standardize") standardize = to_bool(key, value);
  else if (key == "p") p = to_int(key, value);
  else if (key == "tau") tau = to_double(key, value);
  else if (key == "t1") t1 = to_double(key, value);
  else if (key == "r1") r1 = to_double(key, value);
  else if (key == "t2") t2 = to_double(key, value);
  else if (key == "r2") r2 = to_double(key, value);
  else if (key == "eta1") eta1 = to_double(key, value);
  else if (key == "eta2") eta2 = to_double(key, value);
  else if (key == "epochs") epochs = to_int(key, value);
  else if (key == "n_prime") n_prime = to_int(key, value);
  else if (key == "n_seed") n_seed = to_int(key, value);
  else if (key == "subgraph_min_n") subgraph_min_n = to_int(key, value);
  else if (key == "hidden") hidden = to_int(key, value);
  else if (key == "embed") embed = to_int(key, value);
  else if (key == "max_norm") max_norm = to_double(key, value);
  else if (key == "cse_radius") cse_radius = to_double(key, value);
  else if (key == "learner") learner = value;
  else if (key == "lr_riemannian") lr_riemannian = to_double(key, value);
  else if (key == "lr_euclidean") lr_euclidean = to_double(key, value);
  else if (key == "edge_drop") edge_drop = to_double(key, value);
  else if (key == "feature_mask") feature_mask = to_double(key, value);
  else if (key == "seed") {
    const auto v = parse_int(value);
    if (!v || *v < 0) throw UsageError("config key 'seed' expects a non-negative integer");
    seed = static_cast<std::uint64_t>(*v);
  } else if (key == "output") output = value;
  else if (key == "decode") decode = value;
  else if (key == "decode_k") decode_k = to_int(key, value);
  else if (key == "rho_max") rho_max = to_double(key, value);
  else throw UsageError("unknown config key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
  if (key == "dataset") return dataset;
  if (key == "label") return label;
  if (key == "k") return std::to_string(k);
  if (key == "sigma") return format_double(sigma);
  if (key == "standardize") return standardize ? "true" : "false";
  if (key == "p") return std::to_string(p);
  if (key == "tau") return format_double(tau);
  if (key == "t1") return format_double(t1);
  if (key == "r1") return format_double(r1);
  if (key == "t2") return format_double(t2);
  if (key == "r2") return format_double(r2);
  if (key == "eta1") return format_double(eta1);
  if (key == "eta2") return format_double(eta2);
  if (key == "epochs") return std::to_string(epochs);
  if (key == "n_prime") return std::to_string(n_prime);
  if (key == "n_seed") return std::to_string(n_seed);
  if (key == "subgraph_min_n") return std::to_string(subgraph_min_n);
  if (key == "hidden") return std::to_string(hidden);
  if (key == "embed") return std::to_string(embed);
  if (key == "max_norm") return format_double(max_norm);
  if (key == "cse_radius") return format_double(cse_radius);
  if (key == "learner") return learner;
  if (key == "lr_riemannian") return format_double(lr_riemannian);
  if (key == "lr_euclidean") return format_double(lr_euclidean);
  if (key == "edge_drop") return format_double(edge_drop);
  if (key == "feature_mask") return format_double(feature_mask);
  if (key == "seed") return std::to_string(seed);
  if (key == "output") return output;
  if (key == "decode") return decode;
  if (key == "decode_k") return std::to_string(decode_k);
  if (key == "rho_max") return format_double(rho_max);
  throw UsageError("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("invalid config: " + what);
  };
  require(k >= 1, "k must be >= 1");
  require(sigma > 0.0, "sigma must be > 0");
  require(p >= 1, "p must be >= 1");
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  require(t1 > 0.0 && t2 > 0.0, "t1 and t2 must be > 0");
  require(std::isfinite(r1) && std::isfinite(r2), "r1 and r2 must be finite");
  require(eta1 >= 0.0 && eta2 >= 0.0, "eta1 and eta2 must be >= 0");
  require(epochs >= 0, "epochs must be >= 0");
  require(n_prime >= 2, "n_prime must be >= 2");
  require(n_seed >= 1 && n_seed <= n_prime, "n_seed must lie in [1, n_prime]");
  require(subgraph_min_n >= 2, "subgraph_min_n must be >= 2");
  require(hidden >= 1 && embed >= 2, "hidden must be >= 1 and embed >= 2");
  require(max_norm >= 0.0, "max_norm must be >= 0");
  require(cse_radius >= 0.0 && cse_radius < 1.0, "cse_radius must be in [0, 1)");
  require(learner == "auto" || learner == "gcn" || learner == "mlp", "learner must be auto, gcn or mlp");
  require(lr_riemannian > 0.0 && lr_euclidean > 0.0, "learning rates must be > 0");
  require(edge_drop >= 0.0 && edge_drop < 1.0, "edge_drop must lie in [0, 1)");
  require(feature_mask >= 0.0 && feature_mask < 1.0, "feature_mask must lie in [0, 1)");
  require(decode == "naive" || decode == "fast", "decode must be naive or fast");
  require(decode_k >= 1, "decode_k must be >= 1");
  require(rho_max > 0.0 && rho_max < 1.0, "rho_max must lie in (0, 1)");
}

RunConfig RunConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    cfg.set(trim(std::string_view(line).substr(0, eq)), std::string(line.substr(eq + 1)));
  }
  // Relative dataset paths resolve against the config file's directory.
  if (!cfg.dataset.empty() && fs::path(cfg.dataset).is_relative() && !fs::exists(cfg.dataset)) {
    const fs::path candidate = path.parent_path() / cfg.dataset;
    if (fs::exists(candidate)) cfg.dataset = candidate.string();
  }
  return cfg;
}

// Data ingestion ----------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

struct CsvRow {
  int line = 0;
  std::vector<std::string> cells;
};

std::vector<CsvRow> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<CsvRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    rows.push_back({lineno, split_csv_line(line)});
  }
  if (rows.empty()) throw DataError(path.string() + " is empty");
  return rows;
}

}  // namespace

Dataset load_dataset(const fs::path& path, const std::string& label_column) {
  const std::vector<CsvRow> rows = read_csv(path);
  const std::size_t width = rows.front().cells.size();
  if (width < 2) throw DataError(path.string() + ": need at least one feature and one label column");

  std::size_t label_idx = 0;
  bool header = false;
  if (const auto idx = parse_int(label_column)) {
    const long long w = static_cast<long long>(width);
    const long long i = *idx < 0 ? w + *idx : *idx;
    if (i < 0 || i >= w) throw DataError("label column index " + label_column + " out of range");
    label_idx = static_cast<std::size_t>(i);
    for (std::size_t c = 0; c < width; ++c) {
      if (c != label_idx && !parse_double(rows.front().cells[c])) header = true;
    }
  } else {
    const auto& first = rows.front().cells;
    const auto it = std::find(first.begin(), first.end(), label_column);
    if (it == first.end()) throw DataError("label column '" + label_column + "' not found in header");
    label_idx = static_cast<std::size_t>(it - first.begin());
    header = true;
  }

  Dataset d;
  const std::size_t n = rows.size() - (header ? 1 : 0);
  if (n == 0) throw DataError(path.string() + " has a header but no data rows");
  d.features = Matrix(n, width - 1);
  std::map<std::string, int> class_ids;
  for (std::size_t r = header ? 1 : 0, i = 0; r < rows.size(); ++r, ++i) {
    const CsvRow& row = rows[r];
    if (row.cells.size() != width) {
      throw DataError(path.string() + ":" + std::to_string(row.line) + ": expected " +
                      std::to_string(width) + " columns, found " + std::to_string(row.cells.size()));
    }
    std::size_t col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_idx) continue;
      const auto v = parse_double(row.cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(path.string() + ":" + std::to_string(row.line) + ": non-numeric value '" +
                        row.cells[c] + "' in column " + std::to_string(c));
      }
      d.features(i, col++) = *v;
    }
    const std::string& name = row.cells[label_idx];
    auto [it, inserted] = class_ids.try_emplace(name, static_cast<int>(d.class_names.size()));
    if (inserted) d.class_names.push_back(name);
    d.labels.push_back(it->second);
  }
  return d;
}

graph::WeightedGraph read_edge_list(const fs::path& path, int n) {
  const std::vector<CsvRow> rows = read_csv(path);
  std::vector<graph::Edge> edges;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& cells = rows[r].cells;
    const auto u = cells.size() >= 2 ? parse_int(cells[0]) : std::nullopt;
    const auto v = cells.size() >= 2 ? parse_int(cells[1]) : std::nullopt;
    if (!u || !v) {
      if (r == 0) continue;  // header
      throw DataError(path.string() + ":" + std::to_string(rows[r].line) + ": expected i,j[,w]");
    }
    double w = 1.0;
    if (cells.size() >= 3) {
      const auto pw = parse_double(cells[2]);
      if (!pw) throw DataError(path.string() + ":" + std::to_string(rows[r].line) + ": bad weight");
      w = *pw;
    }
    edges.push_back({static_cast<int>(std::min(*u, *v)), static_cast<int>(std::max(*u, *v)), w});
  }
  try {
    return graph::WeightedGraph(n, std::move(edges));
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<int> read_labels(const fs::path& path) {
  const std::vector<CsvRow> rows = read_csv(path);
  std::map<std::string, int> ids;
  std::vector<int> labels;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string& cell = rows[r].cells.front();
    if (r == 0 && !parse_double(cell) && rows.size() > 1 && parse_double(rows[1].cells.front())) {
      continue;  // header above numeric labels
    }
    if (const auto v = parse_int(cell)) {
      labels.push_back(static_cast<int>(*v));
    } else {
      auto [it, inserted] = ids.try_emplace(cell, static_cast<int>(ids.size()));
      labels.push_back(it->second);
    }
  }
  return labels;
}

graph::WeightedGraph initial_graph(const Dataset& data, const RunConfig& cfg) {
  graph::KnnOptions opt;
  opt.k = cfg.k;
  opt.sigma = cfg.sigma;
  opt.standardize = cfg.standardize;
  const graph::WeightedGraph g = graph::build_knn_graph(data.features, opt);
  return g.with_features(cfg.standardize ? graph::standardize_columns(data.features) : data.features);
}

Metrics evaluate(const tree::PartitionTree& t, const graph::WeightedGraph& g0,
                 const std::vector<int>& labels) {
  Metrics m;
  m.dp = entropy::dendrogram_purity(t, labels);
  m.se = entropy::structural_entropy(g0, t);
  m.dasgupta = entropy::dasgupta_cost(g0, t);
  return m;
}

// Training ------------------------------------------------------------------------

namespace {

using objective::Model;
using objective::ViewSeeds;

objective::LossConfig loss_config(const RunConfig& cfg) {
  objective::LossConfig lc;
  lc.p = cfg.p;
  lc.t1 = cfg.t1;
  lc.r1 = cfg.r1;
  lc.cse_radius = cfg.cse_radius;
  lc.t2 = cfg.t2;
  lc.r2 = cfg.r2;
  lc.eta1 = cfg.eta1;
  lc.eta2 = cfg.eta2;
  lc.edge_drop = cfg.edge_drop;
  lc.feature_mask = cfg.feature_mask;
  return lc;
}

Model build_model(const RunConfig& cfg, std::size_t features, int n, Rng& rng) {
  objective::ModelConfig mc;
  mc.hidden = static_cast<std::size_t>(cfg.hidden);
  mc.embed = static_cast<std::size_t>(cfg.embed);
  mc.max_norm = cfg.max_norm;
  const bool gcn = cfg.learner == "gcn" || (cfg.learner == "auto" && n <= cfg.subgraph_min_n);
  mc.learner = gcn ? model::LearnerKind::Gcn : model::LearnerKind::Mlp;
  return objective::build_model(mc, features, rng);
}

std::vector<geometry::PoincareVec> to_poincare_points(const Matrix& lorentz) {
  std::vector<geometry::PoincareVec> out;
  out.reserve(lorentz.rows());
  for (std::size_t i = 0; i < lorentz.rows(); ++i) {
    const auto row = lorentz.row(i);
    out.push_back(geometry::lorentz_to_poincare(geometry::LorentzVec{{row.begin(), row.end()}}));
  }
  return out;
}

tree::Dendrogram decode_embeddings(const std::vector<geometry::PoincareVec>& z, const RunConfig& cfg) {
  return cfg.decode == "fast" ? decode::decode_tree_fast(z, cfg.decode_k, cfg.rho_max)
                              : decode::decode_tree_naive(z, cfg.rho_max);
}

Matrix poincare_matrix(const std::vector<geometry::PoincareVec>& z) {
  Matrix m(z.size(), z.empty() ? 0 : z.front().dim());
  for (std::size_t i = 0; i < z.size(); ++i) std::copy(z[i].coords.begin(), z[i].coords.end(), m.row(i).begin());
  return m;
}

double manifold_error(const Matrix& lorentz) {
  double worst = 0.0;
  for (std::size_t i = 0; i < lorentz.rows(); ++i) {
    worst = std::max(worst, std::abs(geometry::lorentz_inner(lorentz.row(i), lorentz.row(i)) + 1.0));
  }
  return worst;
}

void check_finite(double v, const char* what, int epoch) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite ") + what + " loss at epoch " + std::to_string(epoch));
  }
}

// One optimization step on `g` (features attached); returns learner edges
// in g's local ids.
std::vector<graph::Edge> train_step(Model& m, model::RiemannianAdam& hyp_opt,
                                    model::RiemannianAdam& learner_opt,
                                    const graph::WeightedGraph& g, const RunConfig& cfg,
                                    const ViewSeeds& seeds, int epoch) {
  ad::Tape tape;
  const model::Bound bound(tape, m.store);
  objective::Objective obj = objective::record_objective(m, bound, g, loss_config(cfg), seeds);
  check_finite(obj.total.value(), "training", epoch);
  const std::vector<double> adj = tape.backward(obj.total);
  const auto grads = bound.gradients(adj);
  try {
    hyp_opt.step(m.store, grads);
    learner_opt.step(m.store, grads);
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch));
  }
  return std::move(obj.learner_edges);
}

struct Evaluation {
  EpochRow row;
  tree::Dendrogram tree;
  Matrix poincare;
  double manifold_error = 0.0;
};

Evaluation evaluate_epoch(const Model& m, const graph::WeightedGraph& anchor,
                          const graph::WeightedGraph& g0, const std::vector<int>& labels,
                          const RunConfig& cfg, int epoch) {
  ad::Tape tape;
  const model::Bound bound(tape, m.store);
  const objective::Objective obj =
      objective::record_objective(m, bound, anchor, loss_config(cfg), std::nullopt);
  Evaluation ev;
  ev.row.epoch = epoch;
  ev.row.cse = obj.cse.value();
  ev.row.con = obj.con.value();
  ev.row.cen = obj.cen.value();
  ev.row.total = obj.total.value();
  check_finite(ev.row.total, "evaluation", epoch);
  const Matrix lorentz = model::values_of(obj.anchor_embeddings);
  ev.manifold_error = manifold_error(lorentz);
  const auto points = to_poincare_points(lorentz);
  ev.tree = decode_embeddings(points, cfg);
  ev.poincare = poincare_matrix(points);
  const Metrics met = evaluate(tree::PartitionTree::from_dendrogram(ev.tree), g0, labels);
  ev.row.se = met.se;
  ev.row.dp = met.dp;
  ev.row.dasgupta = met.dasgupta;
  return ev;
}

std::string checkpoint_text(const Model& m, const graph::WeightedGraph& anchor) {
  std::ostringstream out;
  model::write_checkpoint(out, m.store, anchor);
  return out.str();
}

}  // namespace

RunReport run_training(const RunConfig& cfg) {
  cfg.validate();
#ifdef __GLIBC__
  // Each step builds and drops a tape of several megabytes; keeping freed
  // blocks on the heap avoids an mmap/munmap pair per buffer per step.
  static const bool tuned = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)tuned;
#endif
  const auto start = std::chrono::steady_clock::now();
  if (cfg.dataset.empty()) throw UsageError("config key 'dataset' is required");
  const Dataset data = load_dataset(cfg.dataset, cfg.label);
  const int n = static_cast<int>(data.features.rows());
  if (n < 3) throw DataError("dataset needs at least three rows");

  const graph::WeightedGraph g0 = initial_graph(data, cfg);
  if (!g0.is_connected()) diag::warn("initial kNN graph is disconnected");

  Rng master(cfg.seed);
  Rng init_rng = master.split("init");
  Rng aug_rng = master.split("augment");
  Rng anchor_rng = master.split("anchor");
  Rng subgraph_rng = master.split("subgraph");

  Model m = build_model(cfg, data.features.cols(), n, init_rng);
  model::RiemannianAdam hyp_opt(m.store, m.hyperbolic_params, {cfg.lr_riemannian});
  model::RiemannianAdam learner_opt(m.store, m.learner_params, {cfg.lr_euclidean});

  RunReport report;
  report.config = cfg;
  report.labels = data.labels;
  report.reference_se = entropy::structural_entropy(
      g0, tree::PartitionTree::from_dendrogram(decode::euclidean_single_linkage(g0.features())));

  graph::WeightedGraph anchor = g0;
  auto record = [&](Evaluation ev) {
    report.max_manifold_error = std::max(report.max_manifold_error, ev.manifold_error);
    const bool improved = report.epochs.empty() || ev.row.se < report.best.se;
    report.epochs.push_back(ev.row);
    if (improved) {
      report.best_epoch = ev.row.epoch;
      report.best = {ev.row.dp, ev.row.se, ev.row.dasgupta};
      report.best_tree = std::move(ev.tree);
      report.best_embeddings = std::move(ev.poincare);
      report.best_checkpoint = checkpoint_text(m, anchor);
    }
  };

  record(evaluate_epoch(m, anchor, g0, data.labels, cfg, 0));
  const bool use_subgraphs = n > cfg.subgraph_min_n;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<graph::Edge> learner_edges;
    if (use_subgraphs) {
      const auto parts = graph::subgraph_sample(anchor, cfg.n_prime, cfg.n_seed, subgraph_rng.next());
      for (const auto& part : parts) {
        if (part.graph.num_vertices() < 3 || part.graph.num_edges() == 0) continue;
        const ViewSeeds seeds{aug_rng.next(), aug_rng.next()};
        const auto local = train_step(m, hyp_opt, learner_opt, part.graph, cfg, seeds, epoch);
        for (const auto& e : local) {
          const int u = part.vertices[static_cast<std::size_t>(e.u)];
          const int v = part.vertices[static_cast<std::size_t>(e.v)];
          learner_edges.push_back({std::min(u, v), std::max(u, v), e.weight});
        }
      }
      std::sort(learner_edges.begin(), learner_edges.end(), [](const graph::Edge& a, const graph::Edge& b) {
        return std::pair(a.u, a.v) < std::pair(b.u, b.v);
      });
    } else {
      const ViewSeeds seeds{aug_rng.next(), aug_rng.next()};
      learner_edges = train_step(m, hyp_opt, learner_opt, anchor, cfg, seeds, epoch);
    }

    gsl::AnchorState state;
    state.anchor_edges = anchor.edges();
    state.learner_edges = std::move(learner_edges);
    state.tau = cfg.tau;
    state.top_p = cfg.p;
    anchor = graph::WeightedGraph(n, gsl::update_anchor(state, anchor_rng), anchor.features());

    record(evaluate_epoch(m, anchor, g0, data.labels, cfg, epoch));
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Metrics evaluate_checkpoint(const RunConfig& cfg, const std::string& text) {
  cfg.validate();
  const Dataset data = load_dataset(cfg.dataset, cfg.label);
  const int n = static_cast<int>(data.features.rows());
  const graph::WeightedGraph g0 = initial_graph(data, cfg);
  std::istringstream in(text);
  const model::Checkpoint ck = model::read_checkpoint(in);
  if (ck.anchor.num_vertices() != n) throw DataError("checkpoint covers a different vertex count");

  Rng unused(0);
  Model m = build_model(cfg, data.features.cols(), n, unused);
  for (std::size_t i = 0; i < m.store.size(); ++i) {
    const auto idx = ck.store.find(m.store[i].name);
    if (!idx || ck.store[*idx].values.size() != m.store[i].values.size()) {
      throw DataError("checkpoint lacks a matching parameter " + m.store[i].name);
    }
    m.store[i].values = ck.store[*idx].values;
  }
  const graph::WeightedGraph anchor = ck.anchor.with_features(g0.features());
  ad::Tape tape;
  const model::Bound bound(tape, m.store);
  const Matrix lorentz = model::values_of(objective::anchor_view_embeddings(m, bound, anchor));
  const auto t = tree::PartitionTree::from_dendrogram(decode_embeddings(to_poincare_points(lorentz), cfg));
  return evaluate(t, g0, data.labels);
}

// Export ------------------------------------------------------------------------------

std::string losses_csv(const RunReport& report) {
  std::string out = "epoch,cse,con,cen,total,se,dp\n";
  for (const auto& r : report.epochs) {
    out += std::to_string(r.epoch) + ',' + format_fixed(r.cse) + ',' + format_fixed(r.con) + ',' +
           format_fixed(r.cen) + ',' + format_fixed(r.total) + ',' + format_fixed(r.se) + ',' +
           format_fixed(r.dp) + '\n';
  }
  return out;
}

std::string config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["dataset"] = cfg.dataset;
  j["label"] = cfg.label;
  j["k"] = cfg.k;
  j["sigma"] = cfg.sigma;
  j["standardize"] = cfg.standardize;
  j["p"] = cfg.p;
  j["tau"] = cfg.tau;
  j["t1"] = cfg.t1;
  j["r1"] = cfg.r1;
  j["t2"] = cfg.t2;
  j["r2"] = cfg.r2;
  j["eta1"] = cfg.eta1;
  j["eta2"] = cfg.eta2;
  j["epochs"] = cfg.epochs;
  j["n_prime"] = cfg.n_prime;
  j["n_seed"] = cfg.n_seed;
  j["subgraph_min_n"] = cfg.subgraph_min_n;
  j["hidden"] = cfg.hidden;
  j["embed"] = cfg.embed;
  j["max_norm"] = cfg.max_norm;
  j["cse_radius"] = cfg.cse_radius;
  j["learner"] = cfg.learner;
  j["lr_riemannian"] = cfg.lr_riemannian;
  j["lr_euclidean"] = cfg.lr_euclidean;
  j["edge_drop"] = cfg.edge_drop;
  j["feature_mask"] = cfg.feature_mask;
  j["seed"] = cfg.seed;
  j["output"] = cfg.output;
  j["decode"] = cfg.decode;
  j["decode_k"] = cfg.decode_k;
  j["rho_max"] = cfg.rho_max;
  return j.dump(2);
}

std::string metrics_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["dp"] = report.best.dp;
  j["se"] = report.best.se;
  j["dasgupta"] = report.best.dasgupta;
  j["best_epoch"] = report.best_epoch;
  j["config"] = nlohmann::ordered_json::parse(config_json(report.config));
  return j.dump(2) + "\n";
}

std::string disk_svg(const Matrix& poincare, const std::vector<int>& labels) {
  if (poincare.cols() != 2) throw std::invalid_argument("disk_svg needs two-dimensional embeddings");
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  constexpr double size = 520.0;
  constexpr double c = size / 2.0;
  constexpr double r = size / 2.0 - 10.0;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
  out << "<circle cx=\"" << c << "\" cy=\"" << c << "\" r=\"" << r
      << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1.5\"/>\n";
  for (std::size_t i = 0; i < poincare.rows(); ++i) {
    const int label = i < labels.size() ? labels[i] : 0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"3\" fill=\"%s\"/>\n",
                  c + r * poincare(i, 0), c - r * poincare(i, 1),
                  palette[static_cast<std::size_t>(std::abs(label)) % 10]);
    out << buf;
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<fs::path> export_run(const RunReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto write = [&](const std::string& name, const std::string& content) {
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw DataError("cannot write " + path.string());
    written.push_back(path);
  };
  const auto tree = tree::PartitionTree::from_dendrogram(report.best_tree);
  write("metrics.json", metrics_json(report));
  write("tree.newick", tree::to_newick(tree) + "\n");
  write("merges.json", tree::merges_to_json(report.best_tree) + "\n");
  write("losses.csv", losses_csv(report));
  write("checkpoint.txt", report.best_checkpoint);
  if (report.best_embeddings.cols() == 2) {
    write("disk.svg", disk_svg(report.best_embeddings, report.labels));
  } else {
    diag::warn("embedding dimension is not 2; skipping disk.svg");
  }
  return written;
}

}  // namespace hypcse::pipeline
