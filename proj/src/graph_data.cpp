#include "fade/graph_data.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <unordered_set>

#include <json.hpp>

#include "fade/errors.hpp"

namespace fade {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void validate_graph(const PropagationGraph& g, const std::string& instance_id) {
  const int n = g.node_count();
  if (n < 1) throw ValidationError("instance " + instance_id + ": graph has no nodes");
  if (!g.features.allFinite()) {
    throw ValidationError("instance " + instance_id + ": non-finite feature value");
  }
  std::vector<std::vector<int>> nbr(static_cast<std::size_t>(n));
  for (const auto& e : g.edges) {
    if (e.parent < 0 || e.child < 0 || e.parent >= n || e.child >= n) {
      throw ValidationError("instance " + instance_id + ": edge endpoint out of range (" +
                            std::to_string(e.parent) + "," + std::to_string(e.child) +
                            ") for " + std::to_string(n) + " nodes");
    }
    if (e.parent == e.child) {
      throw ValidationError("instance " + instance_id + ": self-loop on node " +
                            std::to_string(e.parent));
    }
    nbr[e.parent].push_back(e.child);
    nbr[e.child].push_back(e.parent);
  }
  // Reply structure must reach every post from the source.
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : nbr[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  if (reached != n) {
    throw ValidationError("instance " + instance_id + ": " + std::to_string(n - reached) +
                          " node(s) not connected to the source post");
  }
}

void validate_dataset(const Dataset& ds) {
  if (ds.class_names.empty()) throw ValidationError("dataset declares no classes");
  if (ds.feature_dim < 1) throw ValidationError("feature_dim must be positive");
  std::unordered_set<std::string> ids;
  for (const auto& inst : ds.instances) {
    if (!ids.insert(inst.id).second) throw ValidationError("duplicate instance id " + inst.id);
    if (inst.event.empty()) throw ValidationError("instance " + inst.id + ": empty event label");
    if (inst.label < 0 || inst.label >= ds.num_classes()) {
      throw ValidationError("instance " + inst.id + ": label " + std::to_string(inst.label) +
                            " outside [0," + std::to_string(ds.num_classes()) + ")");
    }
    if (inst.graph.features.cols() != ds.feature_dim) {
      throw ValidationError("instance " + inst.id + ": feature width " +
                            std::to_string(inst.graph.features.cols()) + " != feature_dim " +
                            std::to_string(ds.feature_dim));
    }
    validate_graph(inst.graph, inst.id);
  }
}

namespace {

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

const json& field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(line, std::string("missing field \"") + key + "\"");
  return *it;
}

int as_int(const json& v, const char* what, std::size_t line) {
  if (!v.is_number_integer()) malformed(line, std::string(what) + " must be an integer");
  return v.get<int>();
}

NewsInstance parse_instance(const json& obj, int feature_dim, std::size_t line) {
  if (!obj.is_object()) malformed(line, "expected a JSON object");
  NewsInstance inst;
  const auto& id = field(obj, "id", line);
  const auto& event = field(obj, "event", line);
  if (!id.is_string()) malformed(line, "id must be a string");
  if (!event.is_string()) malformed(line, "event must be a string");
  inst.id = id.get<std::string>();
  inst.event = event.get<std::string>();
  inst.label = as_int(field(obj, "label", line), "label", line);
  const int n = as_int(field(obj, "n", line), "n", line);

  const auto& edges = field(obj, "edges", line);
  if (!edges.is_array()) malformed(line, "edges must be an array");
  for (const auto& e : edges) {
    if (!e.is_array() || e.size() != 2) malformed(line, "each edge must be a [parent, child] pair");
    inst.graph.edges.push_back({as_int(e[0], "edge endpoint", line), as_int(e[1], "edge endpoint", line)});
  }

  const auto& x = field(obj, "x", line);
  if (!x.is_array()) malformed(line, "x must be an array of rows");
  if (static_cast<int>(x.size()) != n) {
    throw ValidationError("instance " + inst.id + ": x has " + std::to_string(x.size()) +
                          " rows but n = " + std::to_string(n));
  }
  inst.graph.features.resize(n, feature_dim);
  for (int i = 0; i < n; ++i) {
    const auto& row = x[static_cast<std::size_t>(i)];
    if (!row.is_array()) malformed(line, "x rows must be arrays");
    if (static_cast<int>(row.size()) != feature_dim) {
      throw ValidationError("instance " + inst.id + ": feature row " + std::to_string(i) +
                            " has width " + std::to_string(row.size()) + ", expected " +
                            std::to_string(feature_dim));
    }
    for (int j = 0; j < feature_dim; ++j) {
      const auto& v = row[static_cast<std::size_t>(j)];
      if (!v.is_number()) malformed(line, "feature values must be numbers");
      inst.graph.features(i, j) = v.get<double>();
    }
  }
  return inst;
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      malformed(line, e.what());
    }
    if (!have_header) {
      if (!obj.is_object()) malformed(line, "header must be a JSON object");
      const auto& classes = field(obj, "classes", line);
      if (!classes.is_array()) malformed(line, "classes must be an array");
      for (const auto& c : classes) {
        if (!c.is_string()) malformed(line, "class names must be strings");
        ds.class_names.push_back(c.get<std::string>());
      }
      ds.feature_dim = as_int(field(obj, "feature_dim", line), "feature_dim", line);
      if (ds.feature_dim < 1) malformed(line, "feature_dim must be positive");
      have_header = true;
      continue;
    }
    ds.instances.push_back(parse_instance(obj, ds.feature_dim, line));
  }
  if (!have_header) throw ParseError("line 1: missing header");
  validate_dataset(ds);
  return ds;
}

void write_dataset(const Dataset& ds, std::ostream& out) {
  ordered_json header;
  header["classes"] = ds.class_names;
  header["feature_dim"] = ds.feature_dim;
  out << header.dump() << '\n';
  for (const auto& inst : ds.instances) {
    ordered_json rec;
    rec["id"] = inst.id;
    rec["event"] = inst.event;
    rec["label"] = inst.label;
    rec["n"] = inst.graph.node_count();
    ordered_json edges = ordered_json::array();
    for (const auto& e : inst.graph.edges) edges.push_back({e.parent, e.child});
    rec["edges"] = std::move(edges);
    ordered_json x = ordered_json::array();
    for (Eigen::Index i = 0; i < inst.graph.features.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index j = 0; j < inst.graph.features.cols(); ++j) {
        row.push_back(inst.graph.features(i, j));
      }
      x.push_back(std::move(row));
    }
    rec["x"] = std::move(x);
    out << rec.dump() << '\n';
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return read_dataset(in);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset " + path.string());
  write_dataset(ds, out);
  if (!out) throw IoError("write failed for " + path.string());
}

SparseMatrix normalized_adjacency_sparse(const PropagationGraph& g) {
  const int n = g.node_count();
  std::set<std::pair<int, int>> links;
  for (int i = 0; i < n; ++i) links.emplace(i, i);
  for (const auto& e : g.edges) {
    links.emplace(e.parent, e.child);
    links.emplace(e.child, e.parent);
  }
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (const auto& [i, j] : links) degree[i] += 1.0;
  Eigen::VectorXd inv_sqrt = degree.cwiseSqrt().cwiseInverse();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(links.size());
  for (const auto& [i, j] : links) triplets.emplace_back(i, j, inv_sqrt[i] * inv_sqrt[j]);
  SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Matrix normalized_adjacency(const PropagationGraph& g) {
  return Matrix(normalized_adjacency_sparse(g));
}

}  // namespace fade
