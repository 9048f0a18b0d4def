#pragma once

// End-to-end orchestration: configuration, dataset ingestion, the training
// loop with per-epoch decoding and model selection, and result export.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hypcse/entropy.hpp"
#include "hypcse/graph.hpp"
#include "hypcse/matrix.hpp"
#include "hypcse/tree.hpp"

namespace hypcse::pipeline {

struct RunConfig {
  std::string dataset;
  /// Column name, or a zero-based index (negative counts from the end).
  std::string label = "-1";
  int k = 10;
  double sigma = 1.0;
  bool standardize = true;
  int p = 10;
  double tau = 0.9999;
  double t1 = 0.1;
  double r1 = 2.0;
  /// Common radius of the embeddings inside the structural term; 0 keeps
  /// the encoded radii.
  double cse_radius = 0.999;
  double t2 = 1.0;
  double r2 = 0.0;
  double eta1 = 1.0;
  double eta2 = 1.0;
  int epochs = 200;
  int n_prime = 1024;
  int n_seed = 16;
  /// Subgraph training is used only above this many vertices.
  int subgraph_min_n = 2000;
  int hidden = 16;
  int embed = 16;
  /// Spatial-norm cap of the Lorentz linear maps; 0 leaves them unbounded.
  double max_norm = 0.0;
  /// auto picks gcn up to subgraph_min_n vertices and mlp above.
  std::string learner = "auto";
  double lr_riemannian = 1e-2;
  double lr_euclidean = 1e-3;
  double edge_drop = 0.2;
  double feature_mask = 0.2;
  std::uint64_t seed = 0;
  std::string output;
  /// naive or fast.
  std::string decode = "naive";
  int decode_k = 10;
  double rho_max = 0.999;

  /// Assigns one field from its text form. Throws UsageError on an unknown
  /// key or an unparsable value.
  void set(const std::string& key, const std::string& value);
  /// Throws UsageError on out-of-range values.
  void validate() const;
  /// Flat key = value text; '#' starts a comment.
  static RunConfig from_file(const std::filesystem::path& path);
  static const std::vector<std::string>& keys();
  std::string get(const std::string& key) const;
};

struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> class_names;
};

/// CSV with numeric feature columns and one label column; a header row is
/// detected when any feature cell of the first row is not numeric. Throws
/// DataError naming the line of the first bad cell.
Dataset load_dataset(const std::filesystem::path& path, const std::string& label_column);

struct Metrics {
  double dp = 0.0;
  double se = 0.0;
  double dasgupta = 0.0;
};

/// DP with `labels`, structural entropy and Dasgupta cost on g0.
Metrics evaluate(const tree::PartitionTree& t, const graph::WeightedGraph& g0,
                 const std::vector<int>& labels);

struct EpochRow {
  int epoch = 0;
  double cse = 0.0;
  double con = 0.0;
  double cen = 0.0;
  double total = 0.0;
  double se = 0.0;
  double dp = 0.0;
  double dasgupta = 0.0;
};

struct RunReport {
  RunConfig config;
  std::vector<EpochRow> epochs;
  int best_epoch = 0;
  Metrics best;
  tree::Dendrogram best_tree;
  /// Poincare embeddings of the selected epoch, one row per vertex.
  Matrix best_embeddings;
  /// Checkpoint text of the selected epoch.
  std::string best_checkpoint;
  std::vector<int> labels;
  /// SE of Euclidean single linkage on the frozen graph.
  double reference_se = 0.0;
  /// Largest |<z, z>_L + 1| over the Lorentz embeddings of every evaluation.
  double max_manifold_error = 0.0;
  double seconds = 0.0;
};

/// Throws DataError for unreadable data and NumericError (with the epoch)
/// when a loss or gradient turns non-finite.
RunReport run_training(const RunConfig& cfg);

/// Rebuilds the model from `checkpoint_text`, decodes its embeddings on the
/// stored anchor graph and evaluates against the frozen graph.
Metrics evaluate_checkpoint(const RunConfig& cfg, const std::string& checkpoint_text);

/// Frozen anchor graph of a dataset under cfg's kNN settings, with the
/// encoder input features attached.
graph::WeightedGraph initial_graph(const Dataset& data, const RunConfig& cfg);

std::string losses_csv(const RunReport& report);
std::string metrics_json(const RunReport& report);
std::string config_json(const RunConfig& cfg);
/// Poincare disk with leaves colored by label; requires two columns.
std::string disk_svg(const Matrix& poincare, const std::vector<int>& labels);

/// Writes metrics.json, tree.newick, merges.json, losses.csv,
/// checkpoint.txt and, for two-dimensional embeddings, disk.svg. Returns the
/// written paths. Throws DataError if the directory cannot be written.
std::vector<std::filesystem::path> export_run(const RunReport& report,
                                              const std::filesystem::path& dir);

/// Reads a "i,j,w" edge list (optional header) over n vertices.
graph::WeightedGraph read_edge_list(const std::filesystem::path& path, int n);
/// Reads one integer label per line, or the first column of a CSV.
std::vector<int> read_labels(const std::filesystem::path& path);

}  // namespace hypcse::pipeline
