#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fade {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// A reply relation: `child` replies to `parent`.
struct Edge {
  int parent = 0;
  int child = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// One news cascade. Node 0 is the source post; rows of `features` are the
/// precomputed post embeddings.
struct PropagationGraph {
  Matrix features;  // n × feature_dim
  std::vector<Edge> edges;

  int node_count() const { return static_cast<int>(features.rows()); }
};

struct NewsInstance {
  std::string id;
  std::string event;
  int label = 0;
  PropagationGraph graph;
};

struct Dataset {
  std::vector<std::string> class_names;
  int feature_dim = 0;
  std::vector<NewsInstance> instances;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::size_t size() const { return instances.size(); }
};

/// Throws ValidationError naming the instance if `g` violates a graph
/// invariant (edge range, self-loop, connectivity from node 0).
void validate_graph(const PropagationGraph& g, const std::string& instance_id);

/// Throws ValidationError on the first violated dataset invariant.
void validate_dataset(const Dataset& ds);

Dataset read_dataset(std::istream& in);
void write_dataset(const Dataset& ds, std::ostream& out);

/// Loads a JSON-Lines dataset. Malformed lines raise ParseError with the
/// 1-based line number; invariant violations raise ValidationError.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

/// D^-1/2 (A + I) D^-1/2 with A the symmetrized reply adjacency.
Matrix normalized_adjacency(const PropagationGraph& g);
SparseMatrix normalized_adjacency_sparse(const PropagationGraph& g);

}  // namespace fade
