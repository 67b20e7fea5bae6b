#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "fade/autodiff.hpp"
#include "fade/graph_data.hpp"

namespace fade {

using Var = ad::Var<double>;

enum class Pooling { Mean, Add };

Pooling parse_pooling(const std::string& name);
std::string to_string(Pooling p);

/// GCN weights W^(0..L-1), no bias terms, relu after every layer.
struct EncoderParams {
  std::vector<Var> weights;
  Pooling pooling = Pooling::Mean;

  int input_dim() const { return static_cast<int>(weights.front().rows()); }
  int output_dim() const { return static_cast<int>(weights.back().cols()); }
};

/// Glorot-uniform initialised encoder with layer widths `layer_dims`.
EncoderParams make_encoder(int feature_dim, std::span<const int> layer_dims, Pooling pooling,
                           std::mt19937_64& rng);

/// A graph with its normalized adjacency precomputed.
struct PreparedGraph {
  SparseMatrix adjacency;
  Matrix features;
};

PreparedGraph prepare_graph(const PropagationGraph& g);
std::vector<PreparedGraph> prepare_graphs(const Dataset& ds);

/// Several graphs stacked block-diagonally so one sparse product runs a
/// whole batch. `pool` maps stacked node rows to one row per graph.
struct GraphBatch {
  SparseMatrix adjacency;
  Matrix features;
  SparseMatrix pool;

  int size() const { return static_cast<int>(pool.rows()); }
};

GraphBatch make_batch(std::span<const PreparedGraph* const> graphs, Pooling pooling);

/// Graph-level representations, one row per graph in the batch.
Var encode(const EncoderParams& params, const GraphBatch& batch);

/// Representation of a single graph (1 × output_dim).
Var encode(const EncoderParams& params, const PropagationGraph& g);

/// Same forward pass as encode() on plain matrices, recording no tape.
Matrix encode_values(const EncoderParams& params, const GraphBatch& batch);

}  // namespace fade
