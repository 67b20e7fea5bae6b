#include "fade/encoder.hpp"

#include <cmath>

#include "fade/errors.hpp"

namespace fade {

Pooling parse_pooling(const std::string& name) {
  if (name == "mean") return Pooling::Mean;
  if (name == "add") return Pooling::Add;
  throw ConfigError("unknown pooling \"" + name + "\" (expected mean|add)");
}

std::string to_string(Pooling p) { return p == Pooling::Mean ? "mean" : "add"; }

EncoderParams make_encoder(int feature_dim, std::span<const int> layer_dims, Pooling pooling,
                           std::mt19937_64& rng) {
  if (layer_dims.empty()) throw DimensionError("encoder needs at least one layer");
  EncoderParams params;
  params.pooling = pooling;
  int in = feature_dim;
  for (int out : layer_dims) {
    if (in < 1 || out < 1) throw DimensionError("encoder layer dimensions must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix w(in, out);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = u(rng);
    params.weights.push_back(ad::parameter(w));
    in = out;
  }
  return params;
}

PreparedGraph prepare_graph(const PropagationGraph& g) {
  return {normalized_adjacency_sparse(g), g.features};
}

std::vector<PreparedGraph> prepare_graphs(const Dataset& ds) {
  std::vector<PreparedGraph> out;
  out.reserve(ds.size());
  for (const auto& inst : ds.instances) out.push_back(prepare_graph(inst.graph));
  return out;
}

GraphBatch make_batch(std::span<const PreparedGraph* const> graphs, Pooling pooling) {
  if (graphs.empty()) throw DimensionError("make_batch: empty batch");
  Eigen::Index total = 0;
  Eigen::Index nnz = 0;
  const Eigen::Index dim = graphs.front()->features.cols();
  for (const auto* g : graphs) {
    if (g->features.cols() != dim) throw DimensionError("make_batch: mixed feature widths");
    total += g->features.rows();
    nnz += g->adjacency.nonZeros();
  }

  GraphBatch batch;
  batch.features.resize(total, dim);
  std::vector<Eigen::Triplet<double>> adj;
  std::vector<Eigen::Triplet<double>> pool;
  adj.reserve(static_cast<std::size_t>(nnz));
  pool.reserve(static_cast<std::size_t>(total));

  Eigen::Index offset = 0;
  for (std::size_t b = 0; b < graphs.size(); ++b) {
    const auto& g = *graphs[b];
    const Eigen::Index n = g.features.rows();
    batch.features.middleRows(offset, n) = g.features;
    for (Eigen::Index r = 0; r < g.adjacency.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(g.adjacency, r); it; ++it) {
        adj.emplace_back(offset + it.row(), offset + it.col(), it.value());
      }
    }
    const double w = pooling == Pooling::Mean ? 1.0 / static_cast<double>(n) : 1.0;
    for (Eigen::Index i = 0; i < n; ++i) pool.emplace_back(static_cast<Eigen::Index>(b), offset + i, w);
    offset += n;
  }
  batch.adjacency.resize(total, total);
  batch.adjacency.setFromTriplets(adj.begin(), adj.end());
  batch.pool.resize(static_cast<Eigen::Index>(graphs.size()), total);
  batch.pool.setFromTriplets(pool.begin(), pool.end());
  return batch;
}

Var encode(const EncoderParams& params, const GraphBatch& batch) {
  if (params.weights.empty()) throw DimensionError("encode: encoder has no layers");
  if (batch.features.cols() != params.input_dim()) {
    throw DimensionError("encode: feature width " + std::to_string(batch.features.cols()) +
                         " but encoder expects " + std::to_string(params.input_dim()));
  }
  Var h = ad::constant(batch.features);
  for (const auto& w : params.weights) {
    h = ad::relu(ad::spmm(batch.adjacency, ad::matmul(h, w)));
  }
  return ad::spmm(batch.pool, h);
}

Matrix encode_values(const EncoderParams& params, const GraphBatch& batch) {
  if (params.weights.empty()) throw DimensionError("encode: encoder has no layers");
  if (batch.features.cols() != params.input_dim()) {
    throw DimensionError("encode: feature width " + std::to_string(batch.features.cols()) +
                         " but encoder expects " + std::to_string(params.input_dim()));
  }
  Matrix h = batch.features;
  for (const auto& w : params.weights) {
    Matrix hw = h * w.value();
    h = (batch.adjacency * hw).cwiseMax(0.0);
  }
  return batch.pool * h;
}

Var encode(const EncoderParams& params, const PropagationGraph& g) {
  const PreparedGraph prepared = prepare_graph(g);
  const PreparedGraph* one[] = {&prepared};
  return encode(params, make_batch(one, params.pooling));
}

}  // namespace fade
