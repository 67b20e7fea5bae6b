#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fade/augmentation.hpp"
#include "fade/encoder.hpp"

namespace fade {

/// x·W + b applied rowwise.
struct Affine {
  Var weight;  // in × out
  Var bias;    // 1 × out

  Var operator()(const Var& x) const;
  Matrix apply(const Matrix& x) const;
};

Affine make_affine(int in, int out, std::mt19937_64& rng);

struct ModelConfig {
  int hidden_dim = 64;
  int layers = 2;
  Pooling pooling = Pooling::Mean;
  int proj_dim = 32;
};

struct TrainConfig {
  double alpha = 0.3;
  double lr = 1e-3;
  int epochs = 60;
  int batch_size = 32;
  AugmentationConfig aug;
};

/// Encoder, classifier F and projection head of the target predictor.
struct TargetPredictor {
  EncoderParams encoder;
  Affine classifier;
  Affine proj_hidden;
  Affine proj_out;

  std::vector<Var> parameters() const;
};

/// Independently parameterised encoder and classifier F' that only ever
/// see event-averaged representations.
struct EventOnlyPredictor {
  EncoderParams encoder;
  Affine classifier;

  std::vector<Var> parameters() const;
};

TargetPredictor make_target_predictor(int feature_dim, int num_classes, const ModelConfig& cfg,
                                      std::mt19937_64& rng);
EventOnlyPredictor make_event_only_predictor(int feature_dim, int num_classes,
                                             const ModelConfig& cfg, std::mt19937_64& rng);

/// Deep copies holding fresh parameter nodes.
TargetPredictor clone(const TargetPredictor& p);
EventOnlyPredictor clone(const EventOnlyPredictor& p);

/// Batch-mean cross-entropy of softmax(logits) against `labels`.
Var ce_loss(const Var& logits, std::span<const int> labels);

/// Batch-mean negative cosine similarity between matching rows. Norms carry
/// a 1e-12 guard so zero projections stay finite.
Var contrastive_loss(const Var& po, const Var& pa);

/// Two-layer projection head with relu in between.
Var project(const TargetPredictor& p, const Var& reps);

/// B×B operator whose row i averages every row sharing events[i].
SparseMatrix event_mean_operator(std::span<const std::string> events);

/// R^E for every row: the mean of the rows that share its event.
Matrix event_mean_pool(const Matrix& reps, std::span<const std::string> events);
Var event_mean_pool(const Var& reps, std::span<const std::string> events);

struct TargetLoss {
  Var total;  // ce + alpha * cl
  Var ce;
  Var cl;     // unset when alpha == 0
};

/// Training objective for one batch. `offsets` holds R^A - R^O per row and
/// is treated as a constant (no gradient flows through the augmentation).
TargetLoss target_loss(const TargetPredictor& p, const Var& reps, std::span<const int> labels,
                       const Matrix& offsets, double alpha);

/// O^T = F(encode(g)) for the listed instances, one row each.
Matrix target_logits(const TargetPredictor& p, const Dataset& ds,
                     std::span<const std::size_t> indices);

/// O^E = F'(event mean of encode'(g)), pooled over the listed instances that
/// share an event (transductive over the given collection).
Matrix event_only_logits(const EventOnlyPredictor& p, const Dataset& ds,
                         std::span<const std::size_t> indices);

double accuracy(const Matrix& logits, const Dataset& ds, std::span<const std::size_t> indices);

struct EpochLog {
  int epoch = 0;
  double loss_ce = 0.0;
  double loss_cl = 0.0;
  double loss_total = 0.0;
  double val_acc = 0.0;
  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

template <typename Params>
struct TrainResult {
  Params params;       // best-validation checkpoint
  Params last;         // parameters after the final epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

/// Minimizes L_CE + alpha * L_CL with adaptive augmentation. The radius is
/// refreshed once per epoch from all training representations (or per
/// batch, see AugmentationConfig).
TrainResult<TargetPredictor> train_target(const Dataset& ds, std::span<const std::size_t> train,
                                          std::span<const std::size_t> val,
                                          const ModelConfig& model, const TrainConfig& cfg,
                                          std::uint64_t seed);

/// Minimizes cross-entropy of F'(R^E). Batches keep whole events together
/// up to batch_size so within-batch event means are meaningful.
TrainResult<EventOnlyPredictor> train_event_only(const Dataset& ds,
                                                 std::span<const std::size_t> train,
                                                 std::span<const std::size_t> val,
                                                 const ModelConfig& model,
                                                 const TrainConfig& cfg, std::uint64_t seed);

/// Event-aware batches: events in shuffled order, oversize events chunked.
std::vector<std::vector<std::size_t>> event_batches(const Dataset& ds,
                                                    std::span<const std::size_t> indices,
                                                    int batch_size, std::mt19937_64& rng);

}  // namespace fade
