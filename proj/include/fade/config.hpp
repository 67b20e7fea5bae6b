#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fade/predictors.hpp"
#include "fade/splitter.hpp"

namespace fade {

/// Every experiment knob, merged from a key=value file and flag overrides.
///
/// Keys are namespaced (train.alpha, aug.num_candidates, encoder.hidden_dim,
/// ...). Unknown keys and ill-typed values raise ConfigError.
struct RunConfig {
  std::uint64_t seed = 0;
  ModelConfig model;
  TrainConfig train;
  int event_only_epochs = 60;
  std::optional<double> beta;  // unset: choose by validation sweep
  std::vector<double> beta_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  SplitRatios split;
  int seeds = 10;

  TrainConfig event_only_train() const;
};

/// Applies one `key=value` assignment.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines; '#' starts a comment.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Canonical text form, one key per line, readable by parse_config.
std::string to_text(const RunConfig& cfg);

std::vector<std::string> config_keys();

}  // namespace fade
