#pragma once

// Binary checkpoint: "FADE", u32 version, then until EOF one record per
// tensor: u64 name length, name bytes, u64 rows, u64 cols, rows*cols f64
// in row-major order. All integers and floats little-endian.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fade/predictors.hpp"

namespace fade {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Matrix>>;

void write_tensors(const NamedTensors& tensors, const std::filesystem::path& path);
NamedTensors read_tensors(const std::filesystem::path& path);

NamedTensors to_tensors(const TargetPredictor& p);
NamedTensors to_tensors(const EventOnlyPredictor& p);
TargetPredictor target_from_tensors(const NamedTensors& t, Pooling pooling);
EventOnlyPredictor event_only_from_tensors(const NamedTensors& t, Pooling pooling);

void save_checkpoint(const TargetPredictor& p, const std::filesystem::path& path);
void save_checkpoint(const EventOnlyPredictor& p, const std::filesystem::path& path);
TargetPredictor load_target_checkpoint(const std::filesystem::path& path, Pooling pooling);
EventOnlyPredictor load_event_only_checkpoint(const std::filesystem::path& path, Pooling pooling);

}  // namespace fade
