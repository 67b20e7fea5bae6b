#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fade/graph_data.hpp"

namespace fade {

enum class RadiusScope { Epoch, Batch };

RadiusScope parse_radius_scope(const std::string& name);
std::string to_string(RadiusScope s);

struct AugmentationConfig {
  int num_candidates = 10;
  RadiusScope radius_scope = RadiusScope::Epoch;
};

/// Mean Euclidean distance of the rows of `reps` from their centroid.
double compute_radius(const Matrix& reps);

/// Uniform direction on the unit sphere in `dim` dimensions.
RowVector sample_unit_vector(int dim, std::mt19937_64& rng);

/// Deterministic per-sample random stream derived from (seed, sample, epoch).
std::mt19937_64 sample_stream(std::uint64_t seed, std::string_view sample_id, int epoch);

/// Maps K candidate representations (rows) to K rows of logits.
using LogitFn = std::function<Matrix(const Matrix&)>;

/// z_label minus the largest other logit.
double margin(const RowVector& logits, int label);

/// First index of the largest entry.
int argmax(const RowVector& v);

struct AugmentOutcome {
  RowVector rep;                 // selected R^A, or R^O on fallback
  int selected = -1;             // candidate index, -1 on fallback
  Matrix candidates;             // K × dim
  std::vector<double> margins;   // per candidate
  std::vector<bool> preserves;   // argmax == label per candidate

  bool fallback() const { return selected < 0; }
};

/// Scores the rows of `candidates` and keeps the label-preserving one with
/// the smallest margin; falls back to `original` when none preserves it.
AugmentOutcome select_candidate(const RowVector& original, Matrix candidates,
                                const LogitFn& classifier, int label);

/// Draws K perturbations R^O + radius·υ and keeps the label-preserving one
/// with the smallest margin; returns R^O when none preserves the label.
AugmentOutcome augment(const RowVector& original, double radius, int num_candidates,
                       const LogitFn& classifier, int label, std::mt19937_64& rng);

}  // namespace fade
