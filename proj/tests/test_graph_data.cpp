#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "fade/errors.hpp"
#include "fade/graph_data.hpp"
#include "fade/synthgen.hpp"
#include "support.hpp"

using namespace fade;

namespace {

const char* kTwoInstances =
    R"({"classes":["N","F"],"feature_dim":4}
{"id":"a","event":"e1","label":0,"n":2,"edges":[[0,1]],"x":[[1,0,0,0],[0,1,0,0]]}
{"id":"b","event":"e1","label":1,"n":1,"edges":[],"x":[[0.5,0.5,0.5,0.5]]}
)";

std::string with_record(const std::string& rec) {
  return std::string(R"({"classes":["N","F"],"feature_dim":2})") + "\n" + rec + "\n";
}

template <typename Error>
std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    read_dataset(in);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

Matrix brute_normalized(const PropagationGraph& g) {
  const int n = g.node_count();
  Matrix a = Matrix::Identity(n, n);
  for (const auto& e : g.edges) a(e.parent, e.child) = a(e.child, e.parent) = 1.0;
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = a(i, j) / std::sqrt(a.row(i).sum() * a.row(j).sum());
  return out;
}

}  // namespace

TEST_CASE("header plus two valid lines parses") {
  std::istringstream in(kTwoInstances);
  const Dataset ds = read_dataset(in);
  CHECK(ds.size() == 2);
  CHECK(ds.class_names == std::vector<std::string>{"N", "F"});
  CHECK(ds.feature_dim == 4);
  CHECK(ds.instances[0].graph.edges == std::vector<Edge>{{0, 1}});
  CHECK(ds.instances[1].graph.features(0, 3) == 0.5);
}

TEST_CASE("invariant violations") {
  CHECK(error_of<ValidationError>(with_record(
            R"({"id":"a","event":"e","label":0,"n":3,"edges":[[0,7],[0,1]],"x":[[0,0],[0,0],[0,0]]})"))
            .find("edge endpoint out of range") != std::string::npos);
  CHECK_FALSE(error_of<ValidationError>(with_record(
                  R"({"id":"a","event":"e","label":0,"n":2,"edges":[[1,1]],"x":[[0,0],[0,0]]})"))
                  .empty());
  // node 2 is unreachable from the source
  CHECK_FALSE(error_of<ValidationError>(with_record(
                  R"({"id":"a","event":"e","label":0,"n":3,"edges":[[0,1]],"x":[[0,0],[0,0],[0,0]]})"))
                  .empty());
  CHECK_FALSE(error_of<ValidationError>(with_record(
                  R"({"id":"a","event":"e","label":5,"n":1,"edges":[],"x":[[0,0]]})"))
                  .empty());
  CHECK_FALSE(error_of<ValidationError>(with_record(
                  R"({"id":"a","event":"","label":0,"n":1,"edges":[],"x":[[0,0]]})"))
                  .empty());
  CHECK_FALSE(error_of<ValidationError>(with_record(
                  R"({"id":"a","event":"e","label":0,"n":1,"edges":[],"x":[[0,0,0]]})"))
                  .empty());
  const std::string dup = R"({"id":"a","event":"e","label":0,"n":1,"edges":[],"x":[[0,0]]})";
  CHECK(error_of<ValidationError>(with_record(dup + "\n" + dup)).find("duplicate") != std::string::npos);
}

TEST_CASE("malformed lines report their line number") {
  CHECK(error_of<ParseError>(with_record("{not json")).find("line 2") != std::string::npos);
  CHECK(error_of<ParseError>(with_record(R"({"id":"a","event":"e","label":0,"n":1,"x":[[0,0]]})"))
            .find("line 2") != std::string::npos);
  CHECK_FALSE(error_of<ParseError>("").empty());
}

TEST_CASE("reply direction does not matter for connectivity") {
  PropagationGraph g;
  g.features = Matrix::Zero(3, 2);
  g.edges = {{1, 0}, {2, 1}};
  CHECK_NOTHROW(validate_graph(g, "x"));
}

TEST_CASE("save/load round trip is the identity") {
  SynthConfig cfg = synth_preset("tiny");
  cfg.seed = 5;
  const Dataset ds = generate(cfg);
  const auto path = std::filesystem::temp_directory_path() / "fade_roundtrip.jsonl";
  save_dataset(ds, path);
  const Dataset back = load_dataset(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == ds.size());
  CHECK(back.class_names == ds.class_names);
  CHECK(back.feature_dim == ds.feature_dim);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.instances[i].id == ds.instances[i].id);
    CHECK(back.instances[i].event == ds.instances[i].event);
    CHECK(back.instances[i].label == ds.instances[i].label);
    CHECK(back.instances[i].graph.edges == ds.instances[i].graph.edges);
    CHECK(back.instances[i].graph.features == ds.instances[i].graph.features);
  }
}

TEST_CASE("empty and single-instance datasets serialize to header plus records") {
  Dataset ds;
  ds.class_names = {"N", "F"};
  ds.feature_dim = 2;
  std::ostringstream empty;
  write_dataset(ds, empty);
  CHECK(std::ranges::count(empty.str(), '\n') == 1);

  NewsInstance inst;
  inst.id = "a";
  inst.event = "e";
  inst.graph.features = Matrix::Zero(1, 2);
  ds.instances.push_back(inst);
  std::ostringstream one;
  write_dataset(ds, one);
  CHECK(std::ranges::count(one.str(), '\n') == 2);
}

TEST_CASE("missing file is an I/O error") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/fade/data.jsonl"), IoError);
}

TEST_CASE("normalized adjacency examples") {
  PropagationGraph single;
  single.features = Matrix::Zero(1, 1);
  CHECK(normalized_adjacency(single) == Matrix::Ones(1, 1));

  PropagationGraph pair;
  pair.features = Matrix::Zero(2, 1);
  pair.edges = {{0, 1}};
  CHECK((normalized_adjacency(pair).array() - 0.5).abs().maxCoeff() < 1e-15);

  PropagationGraph star;
  star.features = Matrix::Zero(4, 1);
  star.edges = {{0, 1}, {0, 2}, {0, 3}};
  CHECK((normalized_adjacency(star) - brute_normalized(star)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(normalized_adjacency(star)(0, 1) == doctest::Approx(1.0 / std::sqrt(8.0)).epsilon(1e-12));
}

TEST_CASE("normalized adjacency is symmetric, matches the sparse form, spectrum in [-1, 1]") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = test::random_tree(2 + trial % 9, 3, rng);
    const Matrix n = normalized_adjacency(g);
    CHECK((n - brute_normalized(g)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((n - n.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((Matrix(normalized_adjacency_sparse(g)) - n).cwiseAbs().maxCoeff() < 1e-15);
    const auto ev = Eigen::SelfAdjointEigenSolver<Matrix>(n).eigenvalues();
    CHECK(ev.maxCoeff() <= 1.0 + 1e-12);
    CHECK(ev.minCoeff() >= -1.0 - 1e-12);
  }
}

TEST_CASE("duplicate edges collapse") {
  PropagationGraph g;
  g.features = Matrix::Zero(2, 1);
  g.edges = {{0, 1}, {1, 0}, {0, 1}};
  CHECK((normalized_adjacency(g).array() - 0.5).abs().maxCoeff() < 1e-15);
}
