#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "fade/graph_data.hpp"

namespace fade {

struct SplitRatios {
  double val = 0.1;         // fraction of all instances
  double train_share = 0.75;  // train / (train + test), i.e. 3:1
};

struct SplitManifest {
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
};

/// Whole events go to one side only: val first (until it holds at least
/// `ratios.val` of the instances), then train/test greedily toward the
/// target share. Throws SplitError with fewer than 3 events.
SplitManifest event_separated_split(const Dataset& ds, const SplitRatios& ratios,
                                    std::uint64_t seed);

/// Instance-level shuffle that ignores events.
SplitManifest event_mixed_split(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed);

/// Index lists into ds.instances for each side of the manifest.
struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

SplitIndices resolve(const SplitManifest& m, const Dataset& ds);

std::set<std::string> events_of(const Dataset& ds, const std::vector<std::string>& ids);

/// Throws SplitError if the id lists overlap, miss an instance, or (when
/// `event_separated`) share an event across sides.
void check_manifest(const SplitManifest& m, const Dataset& ds, bool event_separated);

void save_manifest(const SplitManifest& m, const std::filesystem::path& path);
SplitManifest load_manifest(const std::filesystem::path& path);

std::string manifest_json(const SplitManifest& m);

}  // namespace fade
