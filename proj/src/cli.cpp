#include "fade/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "fade/checkpoint.hpp"
#include "fade/config.hpp"
#include "fade/errors.hpp"
#include "fade/experiment.hpp"
#include "fade/inference.hpp"
#include "fade/splitter.hpp"
#include "fade/synthgen.hpp"

namespace fade {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

RunConfig build_config(const std::string& config_path, const std::vector<std::string>& sets,
                       std::optional<std::uint64_t> seed) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got \"" + s + "\"");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (seed) cfg.seed = *seed;
  return cfg;
}

ordered_json log_json(const std::vector<EpochLog>& log) {
  ordered_json arr = ordered_json::array();
  for (const auto& e : log) {
    arr.push_back({{"epoch", e.epoch},
                   {"loss_ce", e.loss_ce},
                   {"loss_cl", e.loss_cl},
                   {"loss_total", e.loss_total},
                   {"val_acc", e.val_acc}});
  }
  return arr;
}

struct RunArtifacts {
  RunConfig cfg;
  TargetPredictor target;
  EventOnlyPredictor event_only;
};

RunArtifacts load_run(const fs::path& run) {
  RunArtifacts a;
  a.cfg = load_config(run / "config.cfg");
  a.target = load_target_checkpoint(run / "target.ckpt", a.cfg.model.pooling);
  a.event_only = load_event_only_checkpoint(run / "event_only.ckpt", a.cfg.model.pooling);
  return a;
}

struct Options {
  // shared
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
  std::string split;
  std::string run;
  // gen-synth / ablate
  std::string preset = "t15-like";
  std::optional<double> bias;
  std::optional<double> noise;
  std::optional<int> events;
  std::string depth;
  std::vector<std::string> synth_sets;
  // split
  bool mixed = false;
  // eval / predict
  std::optional<double> beta;
  std::string plot;
  bool target_only = false;
  // ablate
  std::optional<int> seeds;
  int threads = 1;
};

SynthConfig synth_from(const Options& o) {
  SynthConfig sc = synth_preset(o.preset);
  if (o.bias) sc.bias_strength = *o.bias;
  if (o.noise) sc.noise_sigma = *o.noise;
  if (o.events) sc.n_events = *o.events;
  if (!o.depth.empty()) sc.depth_profile = parse_depth_profile(o.depth);
  for (const auto& s : o.synth_sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--synth expects key=value, got \"" + s + "\"");
    apply_synth_setting(sc, s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed) sc.seed = *o.seed;
  return sc;
}

int cmd_gen_synth(const Options& o) {
  const Dataset ds = generate(synth_from(o));
  save_dataset(ds, o.out);
  std::cout << "wrote " << ds.size() << " instances to " << o.out << '\n';
  return kExitOk;
}

int cmd_bias_report(const Options& o) {
  const auto report = to_json(bias_report(load_dataset(o.data))).dump(1);
  if (o.out.empty()) {
    std::cout << report << '\n';
  } else {
    write_text(o.out, report + "\n");
  }
  return kExitOk;
}

int cmd_split(const Options& o) {
  const RunConfig cfg = build_config(o.config, o.sets, o.seed);
  const Dataset ds = load_dataset(o.data);
  const SplitManifest m = o.mixed ? event_mixed_split(ds, cfg.split, cfg.seed)
                                  : event_separated_split(ds, cfg.split, cfg.seed);
  save_manifest(m, o.out);
  std::cout << "train " << m.train_ids.size() << ", val " << m.val_ids.size() << ", test "
            << m.test_ids.size() << " instances\n";
  return kExitOk;
}

int cmd_train(const Options& o) {
  const RunConfig cfg = build_config(o.config, o.sets, o.seed);
  const Dataset ds = load_dataset(o.data);
  const SplitManifest m = load_manifest(o.split);
  check_manifest(m, ds, false);
  const auto idx = resolve(m, ds);
  const fs::path out(o.out);
  ensure_dir(out);

  const auto target = train_target(ds, idx.train, idx.val, cfg.model, cfg.train, cfg.seed);
  const auto event_only =
      train_event_only(ds, idx.train, idx.val, cfg.model, cfg.event_only_train(), cfg.seed);

  save_checkpoint(target.params, out / "target.ckpt");
  save_checkpoint(event_only.params, out / "event_only.ckpt");
  write_text(out / "config.cfg", to_text(cfg));
  ordered_json log;
  log["target"] = log_json(target.log);
  log["event_only"] = log_json(event_only.log);
  log["best_epoch"] = {{"target", target.best_epoch}, {"event_only", event_only.best_epoch}};
  write_text(out / "log.json", log.dump(1) + "\n");
  std::cout << "target best epoch " << target.best_epoch << " (val acc "
            << target.log[static_cast<std::size_t>(target.best_epoch - 1)].val_acc
            << "), event-only best epoch " << event_only.best_epoch << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o) {
  const fs::path run(o.run);
  const RunArtifacts a = load_run(run);
  const Dataset ds = load_dataset(o.data);
  const SplitManifest m = load_manifest(o.split);
  check_manifest(m, ds, false);
  const auto idx = resolve(m, ds);

  double beta = 0.0;
  std::string beta_source = "target-only";
  if (!o.target_only) {
    if (o.beta) {
      beta = *o.beta;
      beta_source = "flag";
    } else if (a.cfg.beta) {
      beta = *a.cfg.beta;
      beta_source = "config";
    } else {
      std::vector<int> val_labels;
      for (auto i : idx.val) val_labels.push_back(ds.instances[i].label);
      beta = sweep_beta(compute_logits(a.target, a.event_only, ds, idx.val), val_labels, a.cfg.beta_grid);
      beta_source = "validation sweep";
    }
  }
  const auto logits = compute_logits(a.target, a.event_only, ds, idx.test);
  const EvalReport report = evaluate(logits, ds, {beta});

  ordered_json j = to_json(report);
  j["beta"] = beta;
  j["beta_source"] = beta_source;
  const fs::path out = o.out.empty() ? run / "report.json" : fs::path(o.out);
  write_text(out, j.dump(1) + "\n");
  if (!o.plot.empty()) write_text(o.plot, f1_bar_chart_svg(report));
  std::cout << "beta " << beta << " (" << beta_source << ")\n" << to_table(report);
  return kExitOk;
}

int cmd_predict(const Options& o) {
  const RunArtifacts a = load_run(o.run);
  const Dataset ds = load_dataset(o.data);
  std::vector<std::size_t> indices;
  if (o.split.empty()) {
    for (std::size_t i = 0; i < ds.size(); ++i) indices.push_back(i);
  } else {
    indices = resolve(load_manifest(o.split), ds).test;
  }
  const double beta = o.beta ? *o.beta : a.cfg.beta.value_or(0.0);
  const auto logits = compute_logits(a.target, a.event_only, ds, indices);
  const auto pred = predict(logits, {beta});
  ordered_json arr = ordered_json::array();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& inst = ds.instances[indices[k]];
    arr.push_back({{"id", inst.id},
                   {"event", inst.event},
                   {"predicted", ds.class_names[static_cast<std::size_t>(pred[k])]},
                   {"predicted_index", pred[k]}});
  }
  ordered_json j;
  j["beta"] = beta;
  j["predictions"] = std::move(arr);
  const std::string text = j.dump(1) + "\n";
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_text(o.out, text);
  }
  return kExitOk;
}

int cmd_ablate(const Options& o) {
  RunConfig cfg = build_config(o.config, o.sets, o.seed);
  if (o.seeds) cfg.seeds = *o.seeds;
  Options so = o;
  so.seed.reset();
  const SynthConfig sc = synth_from(so);
  const auto summary = run_ablation(sc, cfg, o.threads);
  const fs::path out(o.out);
  ensure_dir(out);
  ordered_json j = to_json(summary);
  j["preset"] = o.preset;
  j["bias_strength"] = sc.bias_strength;
  write_text(out / "ablation.json", j.dump(1) + "\n");
  const std::string table = to_table(summary);
  write_text(out / "ablation.txt", table);
  std::cout << table;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Event-adaptive fake news detection on propagation graphs"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "key=value config file");
    cmd->add_option("--set", o.sets, "override a config key (key=value)");
    cmd->add_option("--seed", o.seed, "random seed");
  };

  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic event-biased dataset");
  gen->add_option("--preset", o.preset, "t15-like | t15-full | t16-like | pheme-like | tiny");
  gen->add_option("--bias", o.bias, "bias strength in [0,1]");
  gen->add_option("--noise", o.noise, "feature noise sigma");
  gen->add_option("--events", o.events, "number of events");
  gen->add_option("--depth-profile", o.depth, "flat | deep | mixed");
  gen->add_option("--synth", o.synth_sets, "override a generator knob (key=value)");
  gen->add_option("--seed", o.seed, "random seed");
  gen->add_option("--out", o.out, "output JSON-Lines path")->required();

  auto* rep = app.add_subcommand("bias-report", "per-event label purity and size histogram");
  rep->add_option("--data", o.data)->required();
  rep->add_option("--out", o.out, "JSON output (stdout if omitted)");

  auto* split = app.add_subcommand("split", "partition a dataset into train/val/test");
  add_common(split);
  split->add_option("--data", o.data)->required();
  split->add_option("--out", o.out, "manifest JSON path")->required();
  split->add_flag("--mixed", o.mixed, "instance-level split ignoring events");

  auto* train = app.add_subcommand("train", "train the target and event-only predictors");
  add_common(train);
  train->add_option("--data", o.data)->required();
  train->add_option("--split", o.split)->required();
  train->add_option("--out", o.out, "run directory")->required();

  auto* eval = app.add_subcommand("eval", "debiased evaluation on the test split");
  eval->add_option("--data", o.data)->required();
  eval->add_option("--split", o.split)->required();
  eval->add_option("--run", o.run, "run directory from `train`")->required();
  eval->add_option("--beta", o.beta, "bias coefficient (default: config, else validation sweep)");
  eval->add_flag("--target-only", o.target_only, "ignore the event-only predictor");
  eval->add_option("--out", o.out, "report JSON (default <run>/report.json)");
  eval->add_option("--plot", o.plot, "write an SVG bar chart of per-class F1");

  auto* pred = app.add_subcommand("predict", "per-instance debiased predictions");
  pred->add_option("--data", o.data)->required();
  pred->add_option("--run", o.run)->required();
  pred->add_option("--split", o.split, "predict the manifest's test ids only");
  pred->add_option("--beta", o.beta);
  pred->add_option("--out", o.out);

  auto* ablate = app.add_subcommand("ablate", "compare FADE against its ablations over seeds");
  add_common(ablate);
  ablate->add_option("--preset", o.preset);
  ablate->add_option("--bias", o.bias);
  ablate->add_option("--noise", o.noise);
  ablate->add_option("--events", o.events);
  ablate->add_option("--depth-profile", o.depth);
  ablate->add_option("--synth", o.synth_sets, "override a generator knob (key=value)");
  ablate->add_option("--seeds", o.seeds, "number of seeds");
  ablate->add_option("--threads", o.threads, "concurrent seeds");
  ablate->add_option("--out", o.out, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_synth(o);
    if (*rep) return cmd_bias_report(o);
    if (*split) return cmd_split(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*pred) return cmd_predict(o);
    if (*ablate) return cmd_ablate(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TrainingError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DomainError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DimensionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::runtime_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitConfig;
}

}  // namespace fade
