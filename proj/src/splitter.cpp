#include "fade/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "fade/errors.hpp"

namespace fade {

namespace {

void check_ratios(const SplitRatios& r) {
  if (!(r.val >= 0.0 && r.val < 1.0) || !(r.train_share > 0.0 && r.train_share < 1.0)) {
    throw SplitError("split ratios must satisfy 0 <= val < 1 and 0 < train_share < 1");
  }
}

}  // namespace

SplitManifest event_separated_split(const Dataset& ds, const SplitRatios& ratios,
                                    std::uint64_t seed) {
  check_ratios(ratios);
  std::map<std::string, std::vector<std::string>> by_event;
  for (const auto& inst : ds.instances) by_event[inst.event].push_back(inst.id);
  if (by_event.size() < 3) {
    throw SplitError("event-separated split needs at least 3 events, got " +
                     std::to_string(by_event.size()));
  }
  std::vector<const std::vector<std::string>*> events;
  for (const auto& [name, ids] : by_event) events.push_back(&ids);
  std::mt19937_64 rng(seed);
  std::shuffle(events.begin(), events.end(), rng);

  SplitManifest m;
  m.seed = seed;
  const double total = static_cast<double>(ds.size());
  std::size_t next = 0;
  // Validation: whole events until the target share is met, leaving at
  // least one event each for train and test.
  while (next + 2 < events.size() &&
         static_cast<double>(m.val_ids.size()) < ratios.val * total) {
    m.val_ids.insert(m.val_ids.end(), events[next]->begin(), events[next]->end());
    ++next;
  }
  double remaining = 0.0;
  for (std::size_t i = next; i < events.size(); ++i) remaining += static_cast<double>(events[i]->size());
  const double train_target = ratios.train_share * remaining;
  const double test_target = remaining - train_target;
  for (std::size_t i = next; i < events.size(); ++i) {
    const auto& ids = *events[i];
    const bool last = i + 1 == events.size();
    bool to_train;
    if (m.train_ids.empty() && !last) {
      to_train = true;
    } else if (m.test_ids.empty() && last) {
      to_train = false;
    } else {
      const double train_deficit = (train_target - static_cast<double>(m.train_ids.size())) / train_target;
      const double test_deficit = (test_target - static_cast<double>(m.test_ids.size())) / test_target;
      to_train = train_deficit >= test_deficit;
    }
    auto& side = to_train ? m.train_ids : m.test_ids;
    side.insert(side.end(), ids.begin(), ids.end());
  }
  return m;
}

SplitManifest event_mixed_split(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed) {
  check_ratios(ratios);
  if (ds.size() < 3) throw SplitError("event-mixed split needs at least 3 instances");
  std::vector<std::string> ids;
  for (const auto& inst : ds.instances) ids.push_back(inst.id);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  const std::size_t n = ids.size();
  std::size_t n_val = static_cast<std::size_t>(std::ceil(ratios.val * static_cast<double>(n)));
  n_val = std::min(n_val, n - 2);
  const std::size_t rest = n - n_val;
  std::size_t n_train = static_cast<std::size_t>(std::llround(ratios.train_share * static_cast<double>(rest)));
  n_train = std::clamp<std::size_t>(n_train, 1, rest - 1);

  SplitManifest m;
  m.seed = seed;
  m.val_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));
  m.train_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_val),
                     ids.begin() + static_cast<std::ptrdiff_t>(n_val + n_train));
  m.test_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_val + n_train), ids.end());
  return m;
}

SplitIndices resolve(const SplitManifest& m, const Dataset& ds) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < ds.size(); ++i) pos.emplace(ds.instances[i].id, i);
  auto map = [&](const std::vector<std::string>& ids) {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
      auto it = pos.find(id);
      if (it == pos.end()) throw SplitError("manifest references unknown instance " + id);
      out.push_back(it->second);
    }
    return out;
  };
  return {map(m.train_ids), map(m.val_ids), map(m.test_ids)};
}

std::set<std::string> events_of(const Dataset& ds, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const std::string*> event;
  for (const auto& inst : ds.instances) event.emplace(inst.id, &inst.event);
  std::set<std::string> out;
  for (const auto& id : ids) {
    auto it = event.find(id);
    if (it == event.end()) throw SplitError("manifest references unknown instance " + id);
    out.insert(*it->second);
  }
  return out;
}

void check_manifest(const SplitManifest& m, const Dataset& ds, bool event_separated) {
  std::unordered_map<std::string, int> side;
  for (const auto& inst : ds.instances) side.emplace(inst.id, -1);
  const std::vector<std::string>* sides[] = {&m.train_ids, &m.val_ids, &m.test_ids};
  for (int s = 0; s < 3; ++s) {
    for (const auto& id : *sides[s]) {
      auto it = side.find(id);
      if (it == side.end()) throw SplitError("manifest references unknown instance " + id);
      if (it->second != -1) throw SplitError("instance " + id + " appears in two splits");
      it->second = s;
    }
  }
  for (const auto& [id, s] : side) {
    if (s == -1) throw SplitError("instance " + id + " is not assigned to any split");
  }
  if (!event_separated) return;
  const auto tr = events_of(ds, m.train_ids);
  const auto va = events_of(ds, m.val_ids);
  const auto te = events_of(ds, m.test_ids);
  for (const auto& e : te) {
    if (tr.count(e) || va.count(e)) throw SplitError("event " + e + " crosses the test boundary");
  }
  for (const auto& e : va) {
    if (tr.count(e)) throw SplitError("event " + e + " crosses the validation boundary");
  }
}

std::string manifest_json(const SplitManifest& m) {
  nlohmann::ordered_json j;
  j["seed"] = m.seed;
  j["train"] = m.train_ids;
  j["val"] = m.val_ids;
  j["test"] = m.test_ids;
  return j.dump(1);
}

void save_manifest(const SplitManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << manifest_json(m) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

SplitManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    SplitManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.train_ids = j.at("train").get<std::vector<std::string>>();
    m.val_ids = j.at("val").get<std::vector<std::string>>();
    m.test_ids = j.at("test").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace fade
