#include "fade/inference.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "fade/errors.hpp"

namespace fade {

Matrix debias(const Matrix& target, const Matrix& event_only, double beta) {
  if (target.rows() != event_only.rows() || target.cols() != event_only.cols()) {
    throw DimensionError("debias: target logits " + std::to_string(target.rows()) + "x" +
                         std::to_string(target.cols()) + " vs event-only " +
                         std::to_string(event_only.rows()) + "x" + std::to_string(event_only.cols()));
  }
  return target - beta * event_only;
}

RowVector debias(const RowVector& target, const RowVector& event_only, double beta) {
  if (target.size() != event_only.size()) {
    throw DimensionError("debias: " + std::to_string(target.size()) + " vs " +
                         std::to_string(event_only.size()) + " classes");
  }
  return target - beta * event_only;
}

InferenceLogits compute_logits(const TargetPredictor& target, const EventOnlyPredictor& event_only,
                               const Dataset& ds, std::span<const std::size_t> indices) {
  for (auto i : indices) {
    if (i >= ds.size()) throw DimensionError("compute_logits: index out of range");
    if (ds.instances[i].event.empty()) {
      throw ValidationError("instance " + ds.instances[i].id + ": event label missing");
    }
  }
  InferenceLogits out;
  out.indices.assign(indices.begin(), indices.end());
  out.target = target_logits(target, ds, indices);
  out.event_only = event_only_logits(event_only, ds, indices);
  return out;
}

std::vector<int> predict(const InferenceLogits& logits, const DebiasConfig& cfg) {
  const Matrix d = debias(logits.target, logits.event_only, cfg.beta);
  std::vector<int> out(static_cast<std::size_t>(d.rows()));
  for (Eigen::Index i = 0; i < d.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax(d.row(i));
  return out;
}

std::vector<int> predict(const TargetPredictor& target, const EventOnlyPredictor& event_only,
                         const Dataset& ds, std::span<const std::size_t> indices,
                         const DebiasConfig& cfg) {
  return predict(compute_logits(target, event_only, ds, indices), cfg);
}

EvalReport evaluate(std::span<const int> predicted, std::span<const int> labels,
                    std::span<const std::string> class_names, std::size_t n_events) {
  if (labels.empty()) throw ValidationError("evaluate: empty test set");
  if (predicted.size() != labels.size()) {
    throw DimensionError("evaluate: " + std::to_string(predicted.size()) + " predictions for " +
                         std::to_string(labels.size()) + " labels");
  }
  const auto L = class_names.size();
  EvalReport r;
  r.class_names.assign(class_names.begin(), class_names.end());
  r.confusion.assign(L, std::vector<long>(L, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predicted[i];
    if (y < 0 || p < 0 || static_cast<std::size_t>(y) >= L || static_cast<std::size_t>(p) >= L) {
      throw DomainError("evaluate: class index outside [0," + std::to_string(L) + ")");
    }
    ++r.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
  }
  long trace = 0;
  for (std::size_t c = 0; c < L; ++c) {
    trace += r.confusion[c][c];
    long row = 0, col = 0;
    for (std::size_t k = 0; k < L; ++k) {
      row += r.confusion[c][k];
      col += r.confusion[k][c];
    }
    const double denom = static_cast<double>(row + col);
    r.f1.push_back(denom > 0 ? 2.0 * static_cast<double>(r.confusion[c][c]) / denom : 0.0);
  }
  r.n_test = labels.size();
  r.n_events = n_events;
  r.accuracy = static_cast<double>(trace) / static_cast<double>(labels.size());
  return r;
}

EvalReport evaluate(const InferenceLogits& logits, const Dataset& ds, const DebiasConfig& cfg) {
  std::vector<int> labels;
  std::set<std::string> events;
  for (auto i : logits.indices) {
    labels.push_back(ds.instances[i].label);
    events.insert(ds.instances[i].event);
  }
  return evaluate(predict(logits, cfg), labels, ds.class_names, events.size());
}

double sweep_beta(const InferenceLogits& val, std::span<const int> labels,
                  std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("sweep_beta: empty grid");
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  double best_beta = sorted.front();
  double best_acc = -1.0;
  for (double beta : sorted) {
    const auto pred = predict(val, {beta});
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i];
    const double acc = labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labels.size());
    if (acc > best_acc) {
      best_acc = acc;
      best_beta = beta;
    }
  }
  return best_beta;
}

std::vector<double> default_beta_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  nlohmann::ordered_json f1 = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.f1.size(); ++c) f1.push_back({{"class", r.class_names[c]}, {"f1", r.f1[c]}});
  j["per_class_f1"] = std::move(f1);
  j["confusion"] = r.confusion;
  j["n_test"] = r.n_test;
  j["n_events"] = r.n_events;
  return j;
}

std::string to_table(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "accuracy  " << 100.0 * r.accuracy << "%  (n_test " << r.n_test << ", events "
     << r.n_events << ")\n";
  os << std::left << std::setw(10) << "class" << std::right << std::setw(8) << "F1";
  for (const auto& name : r.class_names) os << std::setw(8) << name;
  os << '\n';
  for (std::size_t c = 0; c < r.class_names.size(); ++c) {
    os << std::left << std::setw(10) << r.class_names[c] << std::right << std::setw(8)
       << 100.0 * r.f1[c];
    for (long v : r.confusion[c]) os << std::setw(8) << v;
    os << '\n';
  }
  return os.str();
}

std::string f1_bar_chart_svg(const EvalReport& r) {
  constexpr int bar = 48, gap = 24, height = 200, pad = 40;
  const int width = pad * 2 + static_cast<int>(r.f1.size()) * (bar + gap);
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height + 2 * pad << "\">\n";
  os << "<text x=\"" << pad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">per-class F1 (accuracy "
     << 100.0 * r.accuracy << "%)</text>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << pad + height << "\" x2=\"" << width - pad
     << "\" y2=\"" << pad + height << "\" stroke=\"black\"/>\n";
  for (std::size_t c = 0; c < r.f1.size(); ++c) {
    const double h = r.f1[c] * height;
    const int x = pad + static_cast<int>(c) * (bar + gap) + gap / 2;
    os << "<rect x=\"" << x << "\" y=\"" << pad + height - h << "\" width=\"" << bar
       << "\" height=\"" << h << "\" fill=\"#4a7ab5\"/>\n";
    os << "<text x=\"" << x + bar / 2 << "\" y=\"" << pad + height + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << r.class_names[c] << "</text>\n";
    os << "<text x=\"" << x + bar / 2 << "\" y=\"" << pad + height - h - 4
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << r.f1[c]
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace fade
