#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypcse/checks.hpp"
#include "hypcse/entropy.hpp"
#include "hypcse/errors.hpp"
#include "hypcse/pipeline.hpp"
#include "hypcse/tree.hpp"

namespace {

using namespace hypcse;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_command(const std::string& config_path, const std::map<std::string, std::string>& overrides) {
  pipeline::RunConfig cfg =
      config_path.empty() ? pipeline::RunConfig{} : pipeline::RunConfig::from_file(config_path);
  for (const auto& [key, value] : overrides) cfg.set(key, value);
  if (cfg.output.empty()) cfg.output = "hypcse_out";
  const pipeline::RunReport report = pipeline::run_training(cfg);
  pipeline::export_run(report, cfg.output);
  std::printf("best epoch %d: dp %.4f  se %.4f  dasgupta %.1f  (single-linkage se %.4f)\n",
              report.best_epoch, report.best.dp, report.best.se, report.best.dasgupta,
              report.reference_se);
  std::printf("wrote %s in %.1f s\n", cfg.output.c_str(), report.seconds);
  return kExitOk;
}

int eval_command(const std::string& tree_path, const std::string& graph_path,
                 const std::string& labels_path) {
  tree::PartitionTree t;
  try {
    t = tree::parse_newick(read_file(tree_path));
  } catch (const std::invalid_argument& e) {
    throw DataError(tree_path + ": " + e.what());
  }
  const graph::WeightedGraph g = pipeline::read_edge_list(graph_path, t.num_leaves());
  const std::vector<int> labels = pipeline::read_labels(labels_path);
  if (static_cast<int>(labels.size()) != t.num_leaves()) {
    throw DataError("label count " + std::to_string(labels.size()) + " does not match " +
                    std::to_string(t.num_leaves()) + " tree leaves");
  }
  const pipeline::Metrics m = pipeline::evaluate(t, g, labels);
  nlohmann::ordered_json j;
  j["dp"] = m.dp;
  j["se"] = m.se;
  j["dasgupta"] = m.dasgupta;
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int oracle_command(const std::string& name) {
  std::vector<std::string> names;
  if (name == "all") {
    names = checks::check_names();
  } else {
    names.push_back(name);
  }
  bool ok = true;
  for (const auto& n : names) {
    const checks::CheckResult r = checks::run_check(n);
    std::printf("%s %s: %s (%.2f s)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(),
                r.seconds);
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical clustering by continuous structural entropy in hyperbolic space"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Train, decode and export a hierarchy");
  std::string config_path;
  run->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  std::map<std::string, std::string> overrides;
  for (const auto& key : pipeline::RunConfig::keys()) {
    run->add_option_function<std::string>(
        "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; },
        "override " + key);
  }

  auto* eval = app.add_subcommand("eval", "Score a Newick tree against a graph and labels");
  std::string tree_path, graph_path, labels_path;
  eval->add_option("--tree", tree_path, "Newick file")->required();
  eval->add_option("--graph", graph_path, "edge list CSV: i,j[,w]")->required();
  eval->add_option("--labels", labels_path, "one label per line")->required();

  auto* oracle = app.add_subcommand("oracle", "Run a property suite");
  std::string check;
  std::vector<std::string> allowed = {"lca_form", "conductance_bound", "binary_min", "origin_distance", "gradcheck",
                                      "hardlimit", "decode", "all"};
  oracle->add_option("--check", check, "suite name")->required()->check(CLI::IsMember(allowed));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return run_command(config_path, overrides);
    if (*eval) return eval_command(tree_path, graph_path, labels_path);
    return oracle_command(check);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
}
