#include "fade/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fade/errors.hpp"

namespace fade {

namespace {

constexpr std::size_t kEvalChunk = 256;

std::vector<int> hidden_widths(const ModelConfig& cfg) {
  if (cfg.layers < 1 || cfg.hidden_dim < 1 || cfg.proj_dim < 1) {
    throw ConfigError("model dimensions and layer count must be positive");
  }
  return std::vector<int>(static_cast<std::size_t>(cfg.layers), cfg.hidden_dim);
}

Affine clone(const Affine& a) { return {ad::parameter(a.weight.value()), ad::parameter(a.bias.value())}; }

EncoderParams clone(const EncoderParams& e) {
  EncoderParams out;
  out.pooling = e.pooling;
  for (const auto& w : e.weights) out.weights.push_back(ad::parameter(w.value()));
  return out;
}

GraphBatch batch_of(const std::vector<PreparedGraph>& graphs, std::span<const std::size_t> idx,
                    Pooling pooling) {
  std::vector<const PreparedGraph*> ptrs;
  ptrs.reserve(idx.size());
  for (auto i : idx) ptrs.push_back(&graphs[i]);
  return make_batch(ptrs, pooling);
}

Matrix encode_all(const EncoderParams& enc, const std::vector<PreparedGraph>& graphs,
                  std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), enc.output_dim());
  for (std::size_t start = 0; start < idx.size(); start += kEvalChunk) {
    const std::size_t len = std::min(kEvalChunk, idx.size() - start);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)) =
        encode_values(enc, batch_of(graphs, idx.subspan(start, len), enc.pooling));
  }
  return out;
}

std::vector<PreparedGraph> prepare_subset(const Dataset& ds,
                                          std::span<const std::span<const std::size_t>> sets) {
  std::vector<PreparedGraph> graphs(ds.size());
  std::vector<char> done(ds.size(), 0);
  for (auto set : sets) {
    for (auto i : set) {
      if (i >= ds.size()) throw DimensionError("instance index out of range");
      if (!done[i]) {
        graphs[i] = prepare_graph(ds.instances[i].graph);
        done[i] = 1;
      }
    }
  }
  return graphs;
}

std::vector<std::string> events_of(const Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<std::string> ev;
  ev.reserve(idx.size());
  for (auto i : idx) ev.push_back(ds.instances[i].event);
  return ev;
}

std::vector<int> labels_of(const Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<int> y;
  y.reserve(idx.size());
  for (auto i : idx) y.push_back(ds.instances[i].label);
  return y;
}

Matrix target_logits_prepared(const TargetPredictor& p, const std::vector<PreparedGraph>& graphs,
                              std::span<const std::size_t> idx) {
  return p.classifier.apply(encode_all(p.encoder, graphs, idx));
}

Matrix event_only_logits_prepared(const EventOnlyPredictor& p, const Dataset& ds,
                                  const std::vector<PreparedGraph>& graphs,
                                  std::span<const std::size_t> idx) {
  const auto events = events_of(ds, idx);
  return p.classifier.apply(event_mean_pool(encode_all(p.encoder, graphs, idx), events));
}

double accuracy_of(const Matrix& logits, std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (argmax(logits.row(static_cast<Eigen::Index>(i))) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

void check_finite(const Var& loss, int epoch, std::size_t batch) {
  if (!std::isfinite(loss.scalar())) {
    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(batch));
  }
}

void check_split(const Dataset& ds, std::span<const std::size_t> train) {
  if (train.empty()) throw TrainingError("training split is empty");
  for (auto i : train) {
    if (i >= ds.size()) throw DimensionError("training index out of range");
  }
}

}  // namespace

Var Affine::operator()(const Var& x) const { return ad::add_row(ad::matmul(x, weight), bias); }

Matrix Affine::apply(const Matrix& x) const {
  return (x * weight.value()).rowwise() + bias.value().row(0);
}

Affine make_affine(int in, int out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix w(in, out);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = u(rng);
  return {ad::parameter(w), ad::parameter(Matrix::Zero(1, out))};
}

std::vector<Var> TargetPredictor::parameters() const {
  std::vector<Var> out(encoder.weights.begin(), encoder.weights.end());
  for (const Affine* a : {&classifier, &proj_hidden, &proj_out}) {
    out.push_back(a->weight);
    out.push_back(a->bias);
  }
  return out;
}

std::vector<Var> EventOnlyPredictor::parameters() const {
  std::vector<Var> out(encoder.weights.begin(), encoder.weights.end());
  out.push_back(classifier.weight);
  out.push_back(classifier.bias);
  return out;
}

TargetPredictor make_target_predictor(int feature_dim, int num_classes, const ModelConfig& cfg,
                                      std::mt19937_64& rng) {
  const auto widths = hidden_widths(cfg);
  TargetPredictor p;
  p.encoder = make_encoder(feature_dim, widths, cfg.pooling, rng);
  p.classifier = make_affine(cfg.hidden_dim, num_classes, rng);
  p.proj_hidden = make_affine(cfg.hidden_dim, cfg.hidden_dim, rng);
  p.proj_out = make_affine(cfg.hidden_dim, cfg.proj_dim, rng);
  return p;
}

EventOnlyPredictor make_event_only_predictor(int feature_dim, int num_classes,
                                             const ModelConfig& cfg, std::mt19937_64& rng) {
  const auto widths = hidden_widths(cfg);
  EventOnlyPredictor p;
  p.encoder = make_encoder(feature_dim, widths, cfg.pooling, rng);
  p.classifier = make_affine(cfg.hidden_dim, num_classes, rng);
  return p;
}

TargetPredictor clone(const TargetPredictor& p) {
  return {clone(p.encoder), clone(p.classifier), clone(p.proj_hidden), clone(p.proj_out)};
}

EventOnlyPredictor clone(const EventOnlyPredictor& p) {
  return {clone(p.encoder), clone(p.classifier)};
}

Var ce_loss(const Var& logits, std::span<const int> labels) {
  if (labels.empty()) throw DimensionError("ce_loss: empty batch");
  for (int y : labels) {
    if (y < 0 || y >= logits.cols()) {
      throw DomainError("ce_loss: label " + std::to_string(y) + " outside [0," +
                        std::to_string(logits.cols()) + ")");
    }
  }
  return ad::scale(ad::mean(ad::pick(ad::log_softmax(logits), labels)), -1.0);
}

Var contrastive_loss(const Var& po, const Var& pa) {
  constexpr double guard = 1e-12;
  const Var dot = ad::rowsum(ad::hadamard(po, pa));
  const Var norms = ad::hadamard(ad::add_scalar(ad::rownorm(po), guard),
                                 ad::add_scalar(ad::rownorm(pa), guard));
  return ad::scale(ad::mean(ad::div(dot, norms)), -1.0);
}

Var project(const TargetPredictor& p, const Var& reps) {
  return p.proj_out(ad::relu(p.proj_hidden(reps)));
}

SparseMatrix event_mean_operator(std::span<const std::string> events) {
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < events.size(); ++i) groups[events[i]].push_back(static_cast<Eigen::Index>(i));
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& [event, members] : groups) {
    const double w = 1.0 / static_cast<double>(members.size());
    for (auto i : members)
      for (auto j : members) trips.emplace_back(i, j, w);
  }
  const auto n = static_cast<Eigen::Index>(events.size());
  SparseMatrix m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Matrix event_mean_pool(const Matrix& reps, std::span<const std::string> events) {
  if (reps.rows() != static_cast<Eigen::Index>(events.size())) {
    throw DimensionError("event_mean_pool: " + std::to_string(events.size()) + " events for " +
                         std::to_string(reps.rows()) + " representations");
  }
  return event_mean_operator(events) * reps;
}

Var event_mean_pool(const Var& reps, std::span<const std::string> events) {
  if (reps.rows() != static_cast<Eigen::Index>(events.size())) {
    throw DimensionError("event_mean_pool: " + std::to_string(events.size()) + " events for " +
                         std::to_string(reps.rows()) + " representations");
  }
  return ad::spmm(event_mean_operator(events), reps);
}

Matrix target_logits(const TargetPredictor& p, const Dataset& ds,
                     std::span<const std::size_t> indices) {
  const std::span<const std::size_t> sets[] = {indices};
  return target_logits_prepared(p, prepare_subset(ds, sets), indices);
}

Matrix event_only_logits(const EventOnlyPredictor& p, const Dataset& ds,
                         std::span<const std::size_t> indices) {
  const std::span<const std::size_t> sets[] = {indices};
  return event_only_logits_prepared(p, ds, prepare_subset(ds, sets), indices);
}

double accuracy(const Matrix& logits, const Dataset& ds, std::span<const std::size_t> indices) {
  return accuracy_of(logits, labels_of(ds, indices));
}

std::vector<std::vector<std::size_t>> event_batches(const Dataset& ds,
                                                    std::span<const std::size_t> indices,
                                                    int batch_size, std::mt19937_64& rng) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::map<std::string, std::vector<std::size_t>> by_event;
  for (auto i : indices) by_event[ds.instances[i].event].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [event, members] : by_event) {
    for (std::size_t s = 0; s < members.size(); s += static_cast<std::size_t>(batch_size)) {
      const auto e = std::min(members.size(), s + static_cast<std::size_t>(batch_size));
      groups.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(s),
                          members.begin() + static_cast<std::ptrdiff_t>(e));
    }
  }
  std::shuffle(groups.begin(), groups.end(), rng);

  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> current;
  for (auto& g : groups) {
    if (!current.empty() && current.size() + g.size() > static_cast<std::size_t>(batch_size)) {
      batches.push_back(std::move(current));
      current.clear();
    }
    current.insert(current.end(), g.begin(), g.end());
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

TargetLoss target_loss(const TargetPredictor& p, const Var& reps, std::span<const int> labels,
                       const Matrix& offsets, double alpha) {
  TargetLoss out;
  out.ce = ce_loss(p.classifier(reps), labels);
  out.total = out.ce;
  if (alpha != 0.0) {
    if (offsets.rows() != reps.rows() || offsets.cols() != reps.cols()) {
      throw DimensionError("target_loss: offsets do not match the representations");
    }
    const Var augmented = ad::add(reps, ad::constant(offsets));
    out.cl = contrastive_loss(project(p, reps), project(p, augmented));
    out.total = ad::add(out.ce, ad::scale(out.cl, alpha));
  }
  return out;
}

TrainResult<TargetPredictor> train_target(const Dataset& ds, std::span<const std::size_t> train,
                                          std::span<const std::size_t> val,
                                          const ModelConfig& model, const TrainConfig& cfg,
                                          std::uint64_t seed) {
  check_split(ds, train);
  if (cfg.batch_size < 1 || cfg.epochs < 1) throw ConfigError("epochs and batch_size must be >= 1");
  std::mt19937_64 init_rng(seed);
  TargetPredictor net = make_target_predictor(ds.feature_dim, ds.num_classes(), model, init_rng);
  auto params = net.parameters();
  ad::AdamState<double> adam;
  const ad::AdamOptions<double> opt{.lr = cfg.lr};

  const std::span<const std::size_t> sets[] = {train, val};
  const auto graphs = prepare_subset(ds, sets);
  const auto val_labels = labels_of(ds, val);
  const bool contrastive = cfg.alpha != 0.0;

  TrainResult<TargetPredictor> result;
  double best_val = -1.0;
  std::vector<std::size_t> order(train.begin(), train.end());

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double radius = 0.0;
    if (contrastive && cfg.aug.radius_scope == RadiusScope::Epoch) {
      radius = compute_radius(encode_all(net.encoder, graphs, train));
    }
    auto shuffle_rng = sample_stream(seed, "target-shuffle", epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLog entry;
    entry.epoch = epoch;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size), ++batch_no) {
      const std::size_t len = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, len);
      const auto labels = labels_of(ds, idx);

      const Var reps = encode(net.encoder, batch_of(graphs, idx, net.encoder.pooling));
      Matrix offsets = Matrix::Zero(reps.rows(), reps.cols());
      if (contrastive) {
        if (cfg.aug.radius_scope == RadiusScope::Batch) radius = compute_radius(reps.value());
        // Classifier state at the start of this step scores the candidates.
        const Matrix w = net.classifier.weight.value();
        const RowVector b = net.classifier.bias.value().row(0);
        const LogitFn score = [&w, &b](const Matrix& cands) -> Matrix {
          return (cands * w).rowwise() + b;
        };
        for (std::size_t i = 0; i < len; ++i) {
          const RowVector ro = reps.value().row(static_cast<Eigen::Index>(i));
          auto rng = sample_stream(seed, ds.instances[idx[i]].id, epoch);
          const auto aug = augment(ro, radius, cfg.aug.num_candidates, score, labels[i], rng);
          offsets.row(static_cast<Eigen::Index>(i)) = aug.rep - ro;
        }
      }
      const TargetLoss parts = target_loss(net, reps, labels, offsets, cfg.alpha);
      const Var& loss = parts.total;
      const Var& ce = parts.ce;
      const double cl_value = parts.cl.valid() ? parts.cl.scalar() : 0.0;
      check_finite(loss, epoch, batch_no);

      for (auto& p : params) p.zero_grad();
      ad::backward(loss);
      ad::adam_step<double>(params, adam, opt);

      const double w = static_cast<double>(len);
      entry.loss_ce += ce.scalar() * w;
      entry.loss_cl += cl_value * w;
      entry.loss_total += loss.scalar() * w;
    }
    const double n = static_cast<double>(order.size());
    entry.loss_ce /= n;
    entry.loss_cl /= n;
    entry.loss_total /= n;
    entry.val_acc = accuracy_of(target_logits_prepared(net, graphs, val), val_labels);
    result.log.push_back(entry);

    if (!val.empty() && entry.val_acc > best_val) {
      best_val = entry.val_acc;
      result.best_epoch = epoch;
      result.params = clone(net);
    }
  }
  result.last = std::move(net);
  if (val.empty()) {
    result.params = clone(result.last);
    result.best_epoch = cfg.epochs;
  }
  return result;
}

TrainResult<EventOnlyPredictor> train_event_only(const Dataset& ds,
                                                 std::span<const std::size_t> train,
                                                 std::span<const std::size_t> val,
                                                 const ModelConfig& model,
                                                 const TrainConfig& cfg, std::uint64_t seed) {
  check_split(ds, train);
  if (cfg.batch_size < 1 || cfg.epochs < 1) throw ConfigError("epochs and batch_size must be >= 1");
  // Own init stream so F' does not start as a copy of F.
  std::mt19937_64 init_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  EventOnlyPredictor net = make_event_only_predictor(ds.feature_dim, ds.num_classes(), model, init_rng);
  auto params = net.parameters();
  ad::AdamState<double> adam;
  const ad::AdamOptions<double> opt{.lr = cfg.lr};

  const std::span<const std::size_t> sets[] = {train, val};
  const auto graphs = prepare_subset(ds, sets);
  const auto val_labels = labels_of(ds, val);

  TrainResult<EventOnlyPredictor> result;
  double best_val = -1.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto shuffle_rng = sample_stream(seed, "event-shuffle", epoch);
    const auto batches = event_batches(ds, train, cfg.batch_size, shuffle_rng);
    EpochLog entry;
    entry.epoch = epoch;
    double seen = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& idx = batches[b];
      const auto labels = labels_of(ds, idx);
      const auto events = events_of(ds, idx);
      const Var reps = encode(net.encoder, batch_of(graphs, idx, net.encoder.pooling));
      const Var loss = ce_loss(net.classifier(event_mean_pool(reps, events)), labels);
      check_finite(loss, epoch, b);

      for (auto& p : params) p.zero_grad();
      ad::backward(loss);
      ad::adam_step<double>(params, adam, opt);

      const double w = static_cast<double>(idx.size());
      entry.loss_ce += loss.scalar() * w;
      seen += w;
    }
    entry.loss_ce /= seen;
    entry.loss_total = entry.loss_ce;
    entry.val_acc = accuracy_of(event_only_logits_prepared(net, ds, graphs, val), val_labels);
    result.log.push_back(entry);

    if (!val.empty() && entry.val_acc > best_val) {
      best_val = entry.val_acc;
      result.best_epoch = epoch;
      result.params = clone(net);
    }
  }
  result.last = std::move(net);
  if (val.empty()) {
    result.params = clone(result.last);
    result.best_epoch = cfg.epochs;
  }
  return result;
}

}  // namespace fade
