#include <doctest.h>

#include <filesystem>
#include <set>

#include "fade/errors.hpp"
#include "fade/splitter.hpp"
#include "fade/synthgen.hpp"

using namespace fade;

namespace {

Dataset even_events(int events, int per_event) {
  Dataset ds;
  ds.class_names = {"N", "F"};
  ds.feature_dim = 1;
  for (int e = 0; e < events; ++e) {
    for (int k = 0; k < per_event; ++k) {
      NewsInstance inst;
      inst.event = "e" + std::to_string(e);
      inst.id = inst.event + "-" + std::to_string(k);
      inst.label = k % 2;
      inst.graph.features = Matrix::Zero(1, 1);
      ds.instances.push_back(inst);
    }
  }
  return ds;
}

void check_disjoint(const SplitManifest& m, const Dataset& ds) {
  const auto tr = events_of(ds, m.train_ids), va = events_of(ds, m.val_ids), te = events_of(ds, m.test_ids);
  for (const auto& e : tr) {
    CHECK_FALSE(va.count(e));
    CHECK_FALSE(te.count(e));
  }
  for (const auto& e : va) CHECK_FALSE(te.count(e));
  CHECK(m.train_ids.size() + m.val_ids.size() + m.test_ids.size() == ds.size());
  CHECK_NOTHROW(check_manifest(m, ds, true));
}

}  // namespace

TEST_CASE("4 events of 10: one val, two train, one test") {
  const Dataset ds = even_events(4, 10);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = event_separated_split(ds, {}, seed);
    CHECK(events_of(ds, m.val_ids).size() == 1);
    CHECK(events_of(ds, m.train_ids).size() == 2);
    CHECK(events_of(ds, m.test_ids).size() == 1);
    check_disjoint(m, ds);
  }
}

TEST_CASE("fewer than three events cannot be separated") {
  CHECK_THROWS_AS(event_separated_split(even_events(2, 5), {}, 0), SplitError);
}

TEST_CASE("separated splits are disjoint and deterministic") {
  SynthConfig sc = synth_preset("t15-like");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    sc.seed = seed;
    const Dataset ds = generate(sc);
    const auto m = event_separated_split(ds, {}, seed);
    check_disjoint(m, ds);
    CHECK(manifest_json(m) == manifest_json(event_separated_split(ds, {}, seed)));
  }
}

TEST_CASE("298 skewed events hit the target ratios") {
  SynthConfig sc = synth_preset("t15-full");
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    sc.seed = seed;
    const Dataset ds = generate(sc);
    const auto m = event_separated_split(ds, {}, seed);
    const double n = static_cast<double>(ds.size());
    const double val = static_cast<double>(m.val_ids.size()) / n;
    const double train = static_cast<double>(m.train_ids.size()) / n;
    const double test = static_cast<double>(m.test_ids.size()) / n;
    worst = std::max({worst, std::abs(val - 0.1), std::abs(train - 0.675), std::abs(test - 0.225)});
  }
  MESSAGE("largest ratio deviation: " << worst);
  CHECK(worst <= 0.10);
}

TEST_CASE("mixed split shares events and differs from the separated split") {
  SynthConfig sc = synth_preset("t15-like");
  sc.seed = 2;
  const Dataset ds = generate(sc);
  const auto mixed = event_mixed_split(ds, {}, 2);
  CHECK_NOTHROW(check_manifest(mixed, ds, false));
  CHECK_THROWS_AS(check_manifest(mixed, ds, true), SplitError);
  CHECK(manifest_json(mixed) != manifest_json(event_separated_split(ds, {}, 2)));
  const double n = static_cast<double>(ds.size());
  CHECK(std::abs(static_cast<double>(mixed.val_ids.size()) / n - 0.1) < 0.01);
}

TEST_CASE("manifest checker catches overlap and omissions") {
  const Dataset ds = even_events(4, 3);
  auto m = event_separated_split(ds, {}, 1);
  auto dup = m;
  dup.test_ids.push_back(dup.train_ids.front());
  CHECK_THROWS_AS(check_manifest(dup, ds, false), SplitError);
  auto missing = m;
  missing.train_ids.pop_back();
  CHECK_THROWS_AS(check_manifest(missing, ds, false), SplitError);
  auto unknown = m;
  unknown.val_ids.push_back("nope");
  CHECK_THROWS(check_manifest(unknown, ds, false));
}

TEST_CASE("manifest file round trip") {
  const Dataset ds = even_events(5, 4);
  const auto m = event_separated_split(ds, {}, 3);
  const auto path = std::filesystem::temp_directory_path() / "fade_manifest.json";
  save_manifest(m, path);
  const auto back = load_manifest(path);
  std::filesystem::remove(path);
  CHECK(back.seed == m.seed);
  CHECK(back.train_ids == m.train_ids);
  CHECK(back.val_ids == m.val_ids);
  CHECK(back.test_ids == m.test_ids);
}
