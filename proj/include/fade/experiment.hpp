#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fade/config.hpp"
#include "fade/synthgen.hpp"

namespace fade {

/// Test accuracies of the ablation variants for one seed.
struct AblationRow {
  std::uint64_t seed = 0;
  double beta_star = 0.0;        // chosen on validation for the full model
  double fade = 0.0;             // alpha, beta*
  double no_debias = 0.0;        // alpha, beta = 0
  double plain = 0.0;            // alpha = 0, beta = 0
  double plain_debiased = 0.0;   // alpha = 0, beta chosen on validation
  double plain_mixed = 0.0;      // alpha = 0, beta = 0, event-mixed split
};

struct AblationSummary {
  std::vector<AblationRow> rows;  // ordered by seed
  double mean(double AblationRow::*field) const;
  double stddev(double AblationRow::*field) const;
};

/// Generates the synthetic dataset for `seed`, splits it both ways and trains
/// every variant needed for one ablation row.
AblationRow run_ablation_seed(const SynthConfig& synth, const RunConfig& cfg, std::uint64_t seed);

/// Seeds cfg.seed, cfg.seed + 1, ...; up to `threads` seeds run concurrently
/// and rows are merged in seed order.
AblationSummary run_ablation(const SynthConfig& synth, const RunConfig& cfg, int threads = 1);

nlohmann::ordered_json to_json(const AblationSummary& s);
std::string to_table(const AblationSummary& s);

}  // namespace fade
