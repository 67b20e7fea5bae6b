#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fade/predictors.hpp"

namespace fade {

struct DebiasConfig {
  double beta = 0.0;
};

/// O^D = O^T - beta * O^E on raw logits (rowwise for matrices).
Matrix debias(const Matrix& target, const Matrix& event_only, double beta);
RowVector debias(const RowVector& target, const RowVector& event_only, double beta);

/// Both predictors' logits for a collection of instances. Event-only logits
/// pool over the instances of the collection that share an event.
struct InferenceLogits {
  std::vector<std::size_t> indices;
  Matrix target;
  Matrix event_only;
};

InferenceLogits compute_logits(const TargetPredictor& target, const EventOnlyPredictor& event_only,
                               const Dataset& ds, std::span<const std::size_t> indices);

std::vector<int> predict(const InferenceLogits& logits, const DebiasConfig& cfg);

std::vector<int> predict(const TargetPredictor& target, const EventOnlyPredictor& event_only,
                         const Dataset& ds, std::span<const std::size_t> indices,
                         const DebiasConfig& cfg);

struct EvalReport {
  double accuracy = 0.0;
  std::vector<std::string> class_names;
  std::vector<double> f1;
  std::vector<std::vector<long>> confusion;  // [true][predicted]
  std::size_t n_test = 0;
  std::size_t n_events = 0;
};

/// Accuracy, one-vs-rest F1 per class and the confusion matrix. A class
/// with no true or predicted instances gets F1 = 0.
EvalReport evaluate(std::span<const int> predicted, std::span<const int> labels,
                    std::span<const std::string> class_names, std::size_t n_events = 0);

/// Evaluates debiased predictions over `logits.indices` of `ds`.
EvalReport evaluate(const InferenceLogits& logits, const Dataset& ds, const DebiasConfig& cfg);

/// Grid value with the best validation accuracy; ties go to the smaller beta.
double sweep_beta(const InferenceLogits& val, std::span<const int> labels,
                  std::span<const double> grid);

/// {0, 0.1, ..., 1.0}
std::vector<double> default_beta_grid();

nlohmann::ordered_json to_json(const EvalReport& r);
std::string to_table(const EvalReport& r);
std::string f1_bar_chart_svg(const EvalReport& r);

}  // namespace fade
