#include "fade/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include "fade/inference.hpp"

namespace fade {

namespace {

std::vector<int> labels_at(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<int> y;
  for (auto i : idx) y.push_back(ds.instances[i].label);
  return y;
}

double test_accuracy(const InferenceLogits& logits, const Dataset& ds, double beta) {
  return evaluate(logits, ds, {beta}).accuracy;
}

}  // namespace

double AblationSummary::mean(double AblationRow::*field) const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.*field;
  return s / static_cast<double>(rows.size());
}

double AblationSummary::stddev(double AblationRow::*field) const {
  if (rows.size() < 2) return 0.0;
  const double m = mean(field);
  double s = 0.0;
  for (const auto& r : rows) s += (r.*field - m) * (r.*field - m);
  return std::sqrt(s / static_cast<double>(rows.size() - 1));
}

AblationRow run_ablation_seed(const SynthConfig& synth, const RunConfig& cfg, std::uint64_t seed) {
  SynthConfig sc = synth;
  sc.seed = seed;
  const Dataset ds = generate(sc);
  const auto sep = resolve(event_separated_split(ds, cfg.split, seed), ds);
  const auto mixed = resolve(event_mixed_split(ds, cfg.split, seed), ds);

  TrainConfig plain_cfg = cfg.train;
  plain_cfg.alpha = 0.0;

  const auto full = train_target(ds, sep.train, sep.val, cfg.model, cfg.train, seed);
  const auto plain = train_target(ds, sep.train, sep.val, cfg.model, plain_cfg, seed);
  const auto event_only = train_event_only(ds, sep.train, sep.val, cfg.model, cfg.event_only_train(), seed);
  const auto plain_mix = train_target(ds, mixed.train, mixed.val, cfg.model, plain_cfg, seed);

  const auto val_labels = labels_at(ds, sep.val);
  const auto full_val = compute_logits(full.params, event_only.params, ds, sep.val);
  const auto plain_val = compute_logits(plain.params, event_only.params, ds, sep.val);
  const auto full_test = compute_logits(full.params, event_only.params, ds, sep.test);
  const auto plain_test = compute_logits(plain.params, event_only.params, ds, sep.test);
  const auto mixed_test = compute_logits(plain_mix.params, event_only.params, ds, mixed.test);

  AblationRow row;
  row.seed = seed;
  row.beta_star = cfg.beta ? *cfg.beta : sweep_beta(full_val, val_labels, cfg.beta_grid);
  const double plain_beta = cfg.beta ? *cfg.beta : sweep_beta(plain_val, val_labels, cfg.beta_grid);
  row.fade = test_accuracy(full_test, ds, row.beta_star);
  row.no_debias = test_accuracy(full_test, ds, 0.0);
  row.plain = test_accuracy(plain_test, ds, 0.0);
  row.plain_debiased = test_accuracy(plain_test, ds, plain_beta);
  row.plain_mixed = test_accuracy(mixed_test, ds, 0.0);
  return row;
}

AblationSummary run_ablation(const SynthConfig& synth, const RunConfig& cfg, int threads) {
  const int n = cfg.seeds;
  AblationSummary out;
  out.rows.resize(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        out.rows[static_cast<std::size_t>(i)] =
            run_ablation_seed(synth, cfg, cfg.seed + static_cast<std::uint64_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(threads, 1, n);
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

nlohmann::ordered_json to_json(const AblationSummary& s) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"seed", r.seed},
                    {"beta_star", r.beta_star},
                    {"fade", r.fade},
                    {"no_debias", r.no_debias},
                    {"plain", r.plain},
                    {"plain_debiased", r.plain_debiased},
                    {"plain_mixed", r.plain_mixed}});
  }
  j["runs"] = std::move(rows);
  nlohmann::ordered_json summary;
  const std::pair<const char*, double AblationRow::*> fields[] = {
      {"fade", &AblationRow::fade},
      {"no_debias", &AblationRow::no_debias},
      {"plain", &AblationRow::plain},
      {"plain_debiased", &AblationRow::plain_debiased},
      {"plain_mixed", &AblationRow::plain_mixed},
      {"beta_star", &AblationRow::beta_star}};
  for (const auto& [name, f] : fields) summary[name] = {{"mean", s.mean(f)}, {"std", s.stddev(f)}};
  j["summary"] = std::move(summary);
  return j;
}

std::string to_table(const AblationSummary& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  const std::pair<const char*, double AblationRow::*> fields[] = {
      {"FADE (alpha, beta*)", &AblationRow::fade},
      {"beta = 0", &AblationRow::no_debias},
      {"alpha = 0, beta = 0", &AblationRow::plain},
      {"alpha = 0, beta*", &AblationRow::plain_debiased},
      {"alpha = 0, beta = 0, event-mixed", &AblationRow::plain_mixed}};
  os << std::left << std::setw(36) << "variant" << std::right << std::setw(16) << "accuracy (%)" << '\n';
  for (const auto& [name, f] : fields) {
    std::ostringstream cell;
    cell << std::fixed << std::setprecision(2) << 100.0 * s.mean(f) << " +- " << 100.0 * s.stddev(f);
    os << std::left << std::setw(36) << name << std::right << std::setw(16) << cell.str() << '\n';
  }
  os << "mean beta* " << s.mean(&AblationRow::beta_star) << " over " << s.rows.size() << " seeds\n";
  return os.str();
}

}  // namespace fade
