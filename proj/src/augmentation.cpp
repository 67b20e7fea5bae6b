#include "fade/augmentation.hpp"

#include <limits>

#include "fade/errors.hpp"

namespace fade {

RadiusScope parse_radius_scope(const std::string& name) {
  if (name == "epoch") return RadiusScope::Epoch;
  if (name == "batch") return RadiusScope::Batch;
  throw ConfigError("unknown aug.radius_scope \"" + name + "\" (expected epoch|batch)");
}

std::string to_string(RadiusScope s) { return s == RadiusScope::Epoch ? "epoch" : "batch"; }

double compute_radius(const Matrix& reps) {
  if (reps.rows() == 0) throw DimensionError("compute_radius: no representations");
  const RowVector centroid = reps.colwise().mean();
  return (reps.rowwise() - centroid).rowwise().norm().mean();
}

RowVector sample_unit_vector(int dim, std::mt19937_64& rng) {
  if (dim < 1) throw DimensionError("sample_unit_vector: dim must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  RowVector v(dim);
  double n = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
    n = v.norm();
  } while (n == 0.0);
  return v / n;
}

std::mt19937_64 sample_stream(std::uint64_t seed, std::string_view sample_id, int epoch) {
  // FNV-1a keeps streams identical across standard libraries.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : sample_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(epoch)};
  return std::mt19937_64(seq);
}

int argmax(const RowVector& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double margin(const RowVector& logits, int label) {
  double other = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < logits.size(); ++c) {
    if (c != label) other = std::max(other, logits[c]);
  }
  return logits[label] - other;
}

AugmentOutcome select_candidate(const RowVector& original, Matrix candidates,
                                const LogitFn& classifier, int label) {
  const auto k_count = candidates.rows();
  AugmentOutcome out;
  out.candidates = std::move(candidates);
  const Matrix logits = classifier(out.candidates);
  if (logits.rows() != k_count || label < 0 || label >= logits.cols()) {
    throw DimensionError("augment: classifier output does not match candidates/label");
  }
  out.margins.resize(static_cast<std::size_t>(k_count));
  out.preserves.resize(static_cast<std::size_t>(k_count));
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const RowVector z = logits.row(k);
    const auto i = static_cast<std::size_t>(k);
    out.margins[i] = margin(z, label);
    out.preserves[i] = argmax(z) == label;
    if (out.preserves[i] && out.margins[i] < best) {
      best = out.margins[i];
      out.selected = static_cast<int>(k);
    }
  }
  out.rep = out.fallback() ? original : RowVector(out.candidates.row(out.selected));
  return out;
}

AugmentOutcome augment(const RowVector& original, double radius, int num_candidates,
                       const LogitFn& classifier, int label, std::mt19937_64& rng) {
  if (num_candidates < 1) throw ConfigError("augment: num_candidates must be >= 1");
  const int dim = static_cast<int>(original.size());
  Matrix candidates(num_candidates, dim);
  for (int k = 0; k < num_candidates; ++k) {
    candidates.row(k) = original + radius * sample_unit_vector(dim, rng);
  }
  return select_candidate(original, std::move(candidates), classifier, label);
}

}  // namespace fade
