#include <doctest.h>

#include <sstream>

#include "fade/autodiff.hpp"
#include "fade/errors.hpp"
#include "fade/splitter.hpp"
#include "fade/synthgen.hpp"

using namespace fade;

namespace {

std::string bytes_of(const Dataset& ds) {
  std::ostringstream out;
  write_dataset(ds, out);
  return out.str();
}

}  // namespace

TEST_CASE("rho = 1 gives single-label events") {
  SynthConfig sc = synth_preset("t15-like");
  sc.bias_strength = 1.0;
  sc.seed = 1;
  const auto report = bias_report(generate(sc));
  for (const auto& [event, p] : report.purity) CHECK(p == 1.0);
  CHECK(report.single_label_fraction == 1.0);
}

TEST_CASE("fixed seed gives identical bytes") {
  SynthConfig sc = synth_preset("t15-like");
  sc.seed = 9;
  CHECK(bytes_of(generate(sc)) == bytes_of(generate(sc)));
  SynthConfig other = sc;
  other.seed = 10;
  CHECK(bytes_of(generate(sc)) != bytes_of(generate(other)));
}

TEST_CASE("generated datasets satisfy the dataset invariants for every preset") {
  for (const auto& name : synth_preset_names()) {
    SynthConfig sc = synth_preset(name);
    sc.seed = 2;
    for (auto profile : {DepthProfile::Flat, DepthProfile::Deep, DepthProfile::Mixed}) {
      sc.depth_profile = profile;
      CHECK_NOTHROW(validate_dataset(generate(sc)));
    }
  }
}

TEST_CASE("depth profiles shape the trees") {
  auto mean_depth = [](DepthProfile p) {
    SynthConfig sc = synth_preset("t15-like");
    sc.depth_profile = p;
    sc.seed = 3;
    double total = 0.0;
    int graphs = 0;
    for (const auto& inst : generate(sc).instances) {
      std::vector<int> depth(static_cast<std::size_t>(inst.graph.node_count()), 0);
      int deepest = 0;
      for (const auto& e : inst.graph.edges) {
        depth[static_cast<std::size_t>(e.child)] = depth[static_cast<std::size_t>(e.parent)] + 1;
        deepest = std::max(deepest, depth[static_cast<std::size_t>(e.child)]);
      }
      total += deepest;
      ++graphs;
    }
    return total / graphs;
  };
  CHECK(mean_depth(DepthProfile::Deep) > 2.0 * mean_depth(DepthProfile::Flat));
}

TEST_CASE("purity rises with rho") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double previous = 0.0;
    for (double rho : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      SynthConfig sc = synth_preset("t15-like");
      sc.bias_strength = rho;
      sc.seed = seed;
      const double purity = bias_report(generate(sc)).mean_purity;
      CHECK(purity >= previous);
      previous = purity;
    }
  }
}

TEST_CASE("rho = 0 with two classes and large events: purity in the 0.5-0.75 band") {
  SynthConfig sc = synth_preset("t15-like");
  sc.bias_strength = 0.0;
  sc.n_classes = 2;
  sc.instances_per_event = 20;
  sc.size_sigma = 0.2;
  sc.seed = 4;
  const double purity = bias_report(generate(sc)).mean_purity;
  CHECK(purity >= 0.5);
  CHECK(purity <= 0.75);
}

TEST_CASE("rho = 0, noise 0: a linear probe separates classes across events") {
  SynthConfig sc = synth_preset("t15-like");
  sc.bias_strength = 0.0;
  sc.noise_sigma = 0.0;
  sc.seed = 5;
  const Dataset ds = generate(sc);
  const auto split = resolve(event_separated_split(ds, {}, 5), ds);
  auto mean_features = [&](std::size_t i) -> RowVector { return ds.instances[i].graph.features.colwise().mean(); };

  // Softmax regression on mean post features, plain gradient descent.
  const int d = ds.feature_dim, L = ds.num_classes();
  Matrix x(static_cast<Eigen::Index>(split.train.size()), d);
  std::vector<int> y;
  for (std::size_t k = 0; k < split.train.size(); ++k) {
    x.row(static_cast<Eigen::Index>(k)) = mean_features(split.train[k]);
    y.push_back(ds.instances[split.train[k]].label);
  }
  Matrix w = Matrix::Zero(d, L);
  for (int step = 0; step < 500; ++step) {
    Matrix p = ad::softmax_rows(Matrix(x * w));
    for (std::size_t k = 0; k < y.size(); ++k) p(static_cast<Eigen::Index>(k), y[k]) -= 1.0;
    w -= 0.5 * x.transpose() * p / static_cast<double>(y.size());
  }
  int correct = 0;
  for (auto i : split.test) {
    Eigen::Index best;
    (mean_features(i) * w).maxCoeff(&best);
    correct += best == ds.instances[i].label;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(split.test.size());
  MESSAGE("probe test accuracy: " << acc);
  CHECK(acc > 0.95);
}

TEST_CASE("preset shapes") {
  CHECK(synth_preset("t15-like").n_events == 60);
  CHECK(synth_preset("t15-like").feature_dim == 32);
  CHECK(synth_preset("t15-like").n_classes == 4);
  CHECK(synth_preset("pheme-like").n_classes == 2);
  CHECK(synth_preset("t15-full").n_events == 298);
  CHECK_THROWS_AS(synth_preset("twitter"), ConfigError);

  SynthConfig sc = synth_preset("t15-like");
  sc.seed = 6;
  const auto report = bias_report(generate(sc));
  int total = 0;
  for (const auto& [size, n] : report.size_histogram) total += size * n;
  CHECK(static_cast<int>(report.event_sizes.size()) == 60);
  CHECK(total == static_cast<int>(generate(sc).size()));
}

TEST_CASE("invalid knobs are rejected") {
  SynthConfig sc;
  sc.bias_strength = 1.5;
  CHECK_THROWS_AS(generate(sc), ConfigError);
  sc = SynthConfig{};
  sc.n_events = 0;
  CHECK_THROWS_AS(generate(sc), ConfigError);
  CHECK_THROWS_AS(apply_synth_setting(sc, "colour", "1"), ConfigError);
  CHECK_THROWS_AS(apply_synth_setting(sc, "noise_sigma", "loud"), ConfigError);
}
