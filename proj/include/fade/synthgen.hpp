#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fade/graph_data.hpp"

namespace fade {

enum class DepthProfile { Flat, Deep, Mixed };

DepthProfile parse_depth_profile(const std::string& name);
std::string to_string(DepthProfile p);

/// Knobs of the event-biased cascade generator.
///
/// Each event draws a signature direction. With probability
/// `bias_strength` the event is biased: all its instances share one label
/// and carry the signature at `event_signal_strong`; otherwise labels are
/// drawn per instance and the signature is scaled by `event_signal_weak`.
/// Every post carries `class_signal` times its class direction plus
/// isotropic noise of `noise_sigma`. With `n_topics` > 0 each signature
/// leans toward one of a few shared topic directions by `topic_weight`,
/// so unseen events resemble training events.
struct SynthConfig {
  int n_events = 60;
  double instances_per_event = 8.0;  // median event size
  double size_sigma = 0.8;           // log-normal spread of event sizes
  int max_event_size = 60;
  int n_classes = 4;
  int feature_dim = 32;
  double bias_strength = 0.8;
  DepthProfile depth_profile = DepthProfile::Mixed;
  double noise_sigma = 1.0;
  double class_signal = 0.5;
  double event_signal_strong = 3.0;
  double event_signal_weak = 0.3;
  int n_topics = 0;            // shared signature prototypes; 0: none
  double topic_weight = 0.0;   // share of the signature taken from the event's topic
  int min_posts = 4;
  int max_posts = 16;
  std::uint64_t seed = 0;
};

/// Named presets: "t15-like" (60 events, 4 classes, dim 32), "t15-full"
/// (298 events with long-tailed sizes), "t16-like", "pheme-like"
/// (few very large events, 2 classes) and "tiny".
SynthConfig synth_preset(const std::string& name);
std::vector<std::string> synth_preset_names();

/// Applies one `key=value` override (keys named after the fields above).
void apply_synth_setting(SynthConfig& cfg, const std::string& key, const std::string& value);

Dataset generate(const SynthConfig& cfg);

struct BiasReport {
  std::map<std::string, double> purity;       // per event: majority label share
  std::map<std::string, int> event_sizes;
  std::map<int, int> size_histogram;          // event size -> number of events
  double mean_purity = 0.0;
  double single_label_fraction = 0.0;         // instances in single-label events
};

BiasReport bias_report(const Dataset& ds);
nlohmann::ordered_json to_json(const BiasReport& r);

}  // namespace fade
