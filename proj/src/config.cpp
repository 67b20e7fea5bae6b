#include "fade/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fade/errors.hpp"

namespace fade {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a finite real, got \"" + v + "\"");
  }
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected an integer, got \"" + v + "\"");
  }
  return out;
}

int to_positive(const std::string& key, const std::string& v) {
  const auto n = to_integer(key, v);
  if (n < 1 || n > 1'000'000'000) throw ConfigError(key + ": must be a positive integer");
  return static_cast<int>(n);
}

double to_nonneg(const std::string& key, const std::string& v) {
  const double x = to_real(key, v);
  if (x < 0.0) throw ConfigError(key + ": must be >= 0");
  return x;
}

std::string fmt(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto n = to_integer(k, v);
         if (n < 0) throw ConfigError(k + ": must be >= 0");
         c.seed = static_cast<std::uint64_t>(n);
       }},
      {"train.alpha", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.alpha = to_nonneg(k, v); }},
      {"train.lr", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.lr = to_real(k, v);
         if (c.train.lr <= 0.0) throw ConfigError(k + ": must be > 0");
       }},
      {"train.epochs", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.epochs = to_positive(k, v); }},
      {"train.event_only_epochs", [](RunConfig& c, const std::string& k, const std::string& v) { c.event_only_epochs = to_positive(k, v); }},
      {"train.batch_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = to_positive(k, v); }},
      {"aug.num_candidates", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.aug.num_candidates = to_positive(k, v); }},
      {"aug.radius_scope", [](RunConfig& c, const std::string&, const std::string& v) { c.train.aug.radius_scope = parse_radius_scope(v); }},
      {"encoder.hidden_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.hidden_dim = to_positive(k, v); }},
      {"encoder.layers", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.layers = to_positive(k, v); }},
      {"encoder.pooling", [](RunConfig& c, const std::string&, const std::string& v) { c.model.pooling = parse_pooling(v); }},
      {"head.proj_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.proj_dim = to_positive(k, v); }},
      {"infer.beta", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "sweep") {
           c.beta.reset();
         } else {
           c.beta = to_nonneg(k, v);
         }
       }},
      {"infer.beta_grid", [](RunConfig& c, const std::string& k, const std::string& v) {
         std::vector<double> grid;
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) grid.push_back(to_nonneg(k, trim(item)));
         if (grid.empty()) throw ConfigError(k + ": empty grid");
         c.beta_grid = std::move(grid);
       }},
      {"split.val", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.split.val = to_real(k, v);
         if (c.split.val < 0.0 || c.split.val >= 1.0) throw ConfigError(k + ": must lie in [0,1)");
       }},
      {"split.train_share", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.split.train_share = to_real(k, v);
         if (c.split.train_share <= 0.0 || c.split.train_share >= 1.0) throw ConfigError(k + ": must lie in (0,1)");
       }},
      {"experiment.seeds", [](RunConfig& c, const std::string& k, const std::string& v) { c.seeds = to_positive(k, v); }},
  };
  return table;
}

}  // namespace

TrainConfig RunConfig::event_only_train() const {
  TrainConfig t = train;
  t.epochs = event_only_epochs;
  t.alpha = 0.0;
  return t;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key \"" + key + "\"");
  it->second(cfg, key, value);
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  os << "seed = " << c.seed << '\n';
  os << "train.alpha = " << fmt(c.train.alpha) << '\n';
  os << "train.lr = " << fmt(c.train.lr) << '\n';
  os << "train.epochs = " << c.train.epochs << '\n';
  os << "train.event_only_epochs = " << c.event_only_epochs << '\n';
  os << "train.batch_size = " << c.train.batch_size << '\n';
  os << "aug.num_candidates = " << c.train.aug.num_candidates << '\n';
  os << "aug.radius_scope = " << to_string(c.train.aug.radius_scope) << '\n';
  os << "encoder.hidden_dim = " << c.model.hidden_dim << '\n';
  os << "encoder.layers = " << c.model.layers << '\n';
  os << "encoder.pooling = " << to_string(c.model.pooling) << '\n';
  os << "head.proj_dim = " << c.model.proj_dim << '\n';
  os << "infer.beta = " << (c.beta ? fmt(*c.beta) : std::string("sweep")) << '\n';
  os << "infer.beta_grid = ";
  for (std::size_t i = 0; i < c.beta_grid.size(); ++i) os << (i ? "," : "") << fmt(c.beta_grid[i]);
  os << '\n';
  os << "split.val = " << fmt(c.split.val) << '\n';
  os << "split.train_share = " << fmt(c.split.train_share) << '\n';
  os << "experiment.seeds = " << c.seeds << '\n';
  return os.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : setters()) keys.push_back(k);
  return keys;
}

}  // namespace fade
