#include "fade/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "fade/errors.hpp"

namespace fade {

namespace {

const std::vector<std::string> kFourClasses{"N", "F", "T", "U"};

std::mt19937_64 event_stream(std::uint64_t seed, int event) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(event), 0x5eedu};
  return std::mt19937_64(seq);
}

RowVector random_direction(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  RowVector v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

// Parent of each reply: flat trees hang off the source, deep trees extend
// the most recent branch.
std::vector<Edge> draw_tree(int n, bool deep, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u;
  std::vector<Edge> edges;
  for (int child = 1; child < n; ++child) {
    int parent;
    if (deep) {
      parent = u(rng) < 0.7 ? child - 1 : std::uniform_int_distribution<int>(0, child - 1)(rng);
    } else {
      parent = u(rng) < 0.85 ? 0 : std::uniform_int_distribution<int>(0, child - 1)(rng);
    }
    edges.push_back({parent, child});
  }
  return edges;
}

void check(const SynthConfig& c) {
  if (c.n_events < 1 || c.n_classes < 1 || c.feature_dim < 1 || c.min_posts < 1 ||
      c.max_posts < c.min_posts || c.max_event_size < 1 || !(c.instances_per_event >= 1.0)) {
    throw ConfigError("synth: counts must be >= 1 and max_posts >= min_posts");
  }
  if (!(c.bias_strength >= 0.0 && c.bias_strength <= 1.0)) {
    throw ConfigError("synth: bias_strength must lie in [0,1]");
  }
  if (!(c.noise_sigma >= 0.0) || !(c.size_sigma >= 0.0)) {
    throw ConfigError("synth: noise_sigma and size_sigma must be >= 0");
  }
}

}  // namespace

DepthProfile parse_depth_profile(const std::string& name) {
  if (name == "flat") return DepthProfile::Flat;
  if (name == "deep") return DepthProfile::Deep;
  if (name == "mixed") return DepthProfile::Mixed;
  throw ConfigError("unknown depth profile \"" + name + "\" (expected flat|deep|mixed)");
}

std::string to_string(DepthProfile p) {
  switch (p) {
    case DepthProfile::Flat: return "flat";
    case DepthProfile::Deep: return "deep";
    case DepthProfile::Mixed: return "mixed";
  }
  return "mixed";
}

std::vector<std::string> synth_preset_names() {
  return {"t15-like", "t15-full", "t16-like", "pheme-like", "tiny"};
}

SynthConfig synth_preset(const std::string& name) {
  SynthConfig c;
  if (name == "t15-like") return c;
  if (name == "t15-full") {
    // 298 events, ~1500 source posts, heavy right tail.
    c.n_events = 298;
    c.instances_per_event = 3.0;
    c.size_sigma = 1.0;
    c.max_event_size = 60;
    return c;
  }
  if (name == "t16-like") {
    c.n_events = 45;
    c.instances_per_event = 7.0;
    return c;
  }
  if (name == "pheme-like") {
    c.n_events = 9;
    c.instances_per_event = 120.0;
    c.size_sigma = 0.6;
    c.max_event_size = 400;
    c.n_classes = 2;
    return c;
  }
  if (name == "tiny") {
    c.n_events = 8;
    c.instances_per_event = 4.0;
    c.size_sigma = 0.3;
    c.max_event_size = 8;
    c.feature_dim = 8;
    c.min_posts = 2;
    c.max_posts = 6;
    return c;
  }
  throw ConfigError("unknown preset \"" + name + "\"");
}

void apply_synth_setting(SynthConfig& cfg, const std::string& key, const std::string& value) {
  auto real = [&]() {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || !std::isfinite(v)) throw ConfigError(key + ": expected a real, got \"" + value + "\"");
    return v;
  };
  auto integer = [&]() {
    const double v = real();
    if (v != std::floor(v)) throw ConfigError(key + ": expected an integer, got \"" + value + "\"");
    return static_cast<int>(v);
  };
  if (key == "n_events") cfg.n_events = integer();
  else if (key == "instances_per_event") cfg.instances_per_event = real();
  else if (key == "size_sigma") cfg.size_sigma = real();
  else if (key == "max_event_size") cfg.max_event_size = integer();
  else if (key == "n_classes") cfg.n_classes = integer();
  else if (key == "feature_dim") cfg.feature_dim = integer();
  else if (key == "bias_strength") cfg.bias_strength = real();
  else if (key == "depth_profile") cfg.depth_profile = parse_depth_profile(value);
  else if (key == "noise_sigma") cfg.noise_sigma = real();
  else if (key == "class_signal") cfg.class_signal = real();
  else if (key == "event_signal_strong") cfg.event_signal_strong = real();
  else if (key == "event_signal_weak") cfg.event_signal_weak = real();
  else if (key == "n_topics") cfg.n_topics = integer();
  else if (key == "topic_weight") cfg.topic_weight = real();
  else if (key == "min_posts") cfg.min_posts = integer();
  else if (key == "max_posts") cfg.max_posts = integer();
  else throw ConfigError("unknown synth key \"" + key + "\"");
}

Dataset generate(const SynthConfig& cfg) {
  check(cfg);
  Dataset ds;
  ds.feature_dim = cfg.feature_dim;
  for (int c = 0; c < cfg.n_classes; ++c) {
    ds.class_names.push_back(cfg.n_classes == 4 ? kFourClasses[static_cast<std::size_t>(c)]
                                                : "C" + std::to_string(c));
  }
  if (cfg.n_classes == 2) ds.class_names = {"N", "R"};

  std::mt19937_64 global(cfg.seed);
  std::vector<RowVector> class_dir;
  for (int c = 0; c < cfg.n_classes; ++c) class_dir.push_back(random_direction(cfg.feature_dim, global));

  std::vector<RowVector> topics;
  for (int t = 0; t < cfg.n_topics; ++t) topics.push_back(random_direction(cfg.feature_dim, global));

  const double noise_scale = cfg.noise_sigma / std::sqrt(static_cast<double>(cfg.feature_dim));
  for (int e = 0; e < cfg.n_events; ++e) {
    auto rng = event_stream(cfg.seed, e);
    std::uniform_real_distribution<double> u;
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> any_label(0, cfg.n_classes - 1);
    std::uniform_int_distribution<int> posts(cfg.min_posts, cfg.max_posts);

    const double log_size = std::log(cfg.instances_per_event) + cfg.size_sigma * normal(rng);
    const int size = std::clamp(static_cast<int>(std::lround(std::exp(log_size))), 1, cfg.max_event_size);
    const bool biased = u(rng) < cfg.bias_strength;
    const int event_label = any_label(rng);
    RowVector direction = random_direction(cfg.feature_dim, rng);
    if (!topics.empty()) {
      const auto t = std::uniform_int_distribution<std::size_t>(0, topics.size() - 1)(rng);
      direction = cfg.topic_weight * topics[t] + std::sqrt(1.0 - cfg.topic_weight * cfg.topic_weight) * direction;
      direction /= direction.norm();
    }
    const RowVector signature = direction * (biased ? cfg.event_signal_strong : cfg.event_signal_weak);
    const bool deep = cfg.depth_profile == DepthProfile::Deep ||
                      (cfg.depth_profile == DepthProfile::Mixed && u(rng) < 0.5);

    std::ostringstream event_name;
    event_name << "E" << std::setw(3) << std::setfill('0') << e;
    for (int k = 0; k < size; ++k) {
      NewsInstance inst;
      inst.event = event_name.str();
      inst.id = inst.event + "-" + std::to_string(k);
      inst.label = biased ? event_label : any_label(rng);
      const int n = posts(rng);
      inst.graph.edges = draw_tree(n, deep, rng);
      inst.graph.features.resize(n, cfg.feature_dim);
      for (int j = 0; j < n; ++j) {
        RowVector noise(cfg.feature_dim);
        for (int f = 0; f < cfg.feature_dim; ++f) noise[f] = noise_scale * normal(rng);
        inst.graph.features.row(j) =
            cfg.class_signal * class_dir[static_cast<std::size_t>(inst.label)] + signature + noise;
      }
      ds.instances.push_back(std::move(inst));
    }
  }
  validate_dataset(ds);
  return ds;
}

BiasReport bias_report(const Dataset& ds) {
  std::map<std::string, std::map<int, int>> counts;
  for (const auto& inst : ds.instances) ++counts[inst.event][inst.label];
  BiasReport r;
  double single = 0.0;
  for (const auto& [event, labels] : counts) {
    int size = 0, top = 0;
    for (const auto& [label, n] : labels) {
      size += n;
      top = std::max(top, n);
    }
    r.purity[event] = static_cast<double>(top) / size;
    r.event_sizes[event] = size;
    ++r.size_histogram[size];
    r.mean_purity += r.purity[event];
    if (labels.size() == 1) single += size;
  }
  if (!counts.empty()) r.mean_purity /= static_cast<double>(counts.size());
  if (ds.size() > 0) r.single_label_fraction = single / static_cast<double>(ds.size());
  return r;
}

nlohmann::ordered_json to_json(const BiasReport& r) {
  nlohmann::ordered_json j;
  j["n_events"] = r.purity.size();
  j["mean_purity"] = r.mean_purity;
  j["single_label_fraction"] = r.single_label_fraction;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [size, n] : r.size_histogram) hist[std::to_string(size)] = n;
  j["size_histogram"] = std::move(hist);
  nlohmann::ordered_json events = nlohmann::ordered_json::object();
  for (const auto& [event, p] : r.purity) {
    events[event] = {{"size", r.event_sizes.at(event)}, {"purity", p}};
  }
  j["events"] = std::move(events);
  return j;
}

}  // namespace fade
