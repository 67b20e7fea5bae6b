#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "fade/autodiff.hpp"
#include "fade/graph_data.hpp"

namespace fade::test {

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

/// max |a - n| / max(1, |a|, |n|) between the analytic gradient of `param`
/// and central differences of `loss`.
inline double gradient_error(ad::Var<double>& param, const Matrix& analytic,
                             const std::function<double()>& loss, double eps = 1e-5) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < param.rows(); ++i) {
    for (Eigen::Index j = 0; j < param.cols(); ++j) {
      const double keep = param.value()(i, j);
      param.value()(i, j) = keep + eps;
      const double up = loss();
      param.value()(i, j) = keep - eps;
      const double down = loss();
      param.value()(i, j) = keep;
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic(i, j);
      const double scale = std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, std::abs(a - numeric) / scale);
    }
  }
  return worst;
}

/// Random tree on n nodes rooted at 0 with random features.
inline PropagationGraph random_tree(int n, int dim, std::mt19937_64& rng) {
  PropagationGraph g;
  g.features = random_matrix(n, dim, rng);
  for (int c = 1; c < n; ++c) g.edges.push_back({std::uniform_int_distribution<int>(0, c - 1)(rng), c});
  return g;
}

}  // namespace fade::test
