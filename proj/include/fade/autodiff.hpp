#pragma once

// Reverse-mode automatic differentiation over dense Eigen matrices.
//
// A Var is a handle to a node of a dynamically recorded computation graph.
// Operations on Vars build the graph eagerly; backward() walks it once in
// reverse topological order and accumulates gradients into every node that
// requires one. Nodes that depend on no parameter record nothing, so pure
// inference through the same code path carries no tape overhead.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fade/errors.hpp"

namespace fade::ad {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

template <typename Scalar>
struct Node {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
};

template <typename Scalar>
class Var {
 public:
  using MatrixType = Matrix<Scalar>;

  Var() = default;
  explicit Var(std::shared_ptr<Node<Scalar>> node) : node_(std::move(node)) {}

  const MatrixType& value() const { return node_->value; }
  MatrixType& value() { return node_->value; }
  const MatrixType& grad() const { return node_->grad; }
  MatrixType& grad() { return node_->grad; }

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool valid() const { return static_cast<bool>(node_); }

  Scalar scalar() const { return node_->value(0, 0); }

  void zero_grad() { node_->grad.setZero(node_->value.rows(), node_->value.cols()); }

  const std::shared_ptr<Node<Scalar>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<Scalar>> node_;
};

namespace detail {

inline std::string shape_str(Eigen::Index r, Eigen::Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

template <typename Scalar>
void require_same_shape(const char* op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.rows(), a.cols()) +
                         " vs " + shape_str(b.rows(), b.cols()));
  }
}

template <typename Scalar>
void require_non_empty(const char* op, const Var<Scalar>& a) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw DimensionError(std::string(op) + ": empty input");
  }
}

// Records a new node. Parents and the backward rule are kept only when some
// parent requires a gradient.
template <typename Scalar, typename Backward>
Var<Scalar> record(Matrix<Scalar> value, std::initializer_list<Var<Scalar>> parents,
                   Backward&& backward) {
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  for (const auto& p : parents) {
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    for (const auto& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::forward<Backward>(backward);
  }
  return Var<Scalar>(std::move(node));
}

template <typename Scalar>
void accumulate(const std::shared_ptr<Node<Scalar>>& n, const Matrix<Scalar>& g) {
  if (n->requires_grad) n->grad += g;
}

}  // namespace detail

template <typename Derived>
Var<typename Derived::Scalar> constant(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  auto node = std::make_shared<Node<Scalar>>();
  node->value = m;
  return Var<Scalar>(std::move(node));
}

template <typename Derived>
Var<typename Derived::Scalar> parameter(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  auto node = std::make_shared<Node<Scalar>>();
  node->value = m;
  node->grad = Matrix<Scalar>::Zero(m.rows(), m.cols());
  node->requires_grad = true;
  return Var<Scalar>(std::move(node));
}

// ---------------------------------------------------------------------------
// Products

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: shape mismatch " + detail::shape_str(a.rows(), a.cols()) +
                         " x " + detail::shape_str(b.rows(), b.cols()));
  }
  return detail::record<Scalar>(a.value() * b.value(), {a, b}, [](Node<Scalar>& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    if (pa->requires_grad) pa->grad.noalias() += self.grad * pb->value.transpose();
    if (pb->requires_grad) pb->grad.noalias() += pa->value.transpose() * self.grad;
  });
}

/// Constant sparse matrix times a Var. Used for normalized adjacency,
/// pooling and event-averaging operators.
template <typename Scalar>
Var<Scalar> spmm(const SparseMatrix<Scalar>& s, const Var<Scalar>& b) {
  if (s.cols() != b.rows()) {
    throw DimensionError("spmm: shape mismatch " + detail::shape_str(s.rows(), s.cols()) +
                         " x " + detail::shape_str(b.rows(), b.cols()));
  }
  Matrix<Scalar> value = s * b.value();
  return detail::record<Scalar>(std::move(value), {b}, [s](Node<Scalar>& self) {
    self.parents[0]->grad.noalias() += s.transpose() * self.grad;
  });
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape("add", a, b);
  return detail::record<Scalar>(a.value() + b.value(), {a, b}, [](Node<Scalar>& self) {
    detail::accumulate(self.parents[0], self.grad);
    detail::accumulate(self.parents[1], self.grad);
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape("sub", a, b);
  return detail::record<Scalar>(a.value() - b.value(), {a, b}, [](Node<Scalar>& self) {
    detail::accumulate(self.parents[0], self.grad);
    detail::accumulate<Scalar>(self.parents[1], -self.grad);
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s) {
  return detail::record<Scalar>(a.value() * s, {a}, [s](Node<Scalar>& self) {
    self.parents[0]->grad += self.grad * s;
  });
}

template <typename Scalar>
Var<Scalar> add_scalar(const Var<Scalar>& a, Scalar s) {
  Matrix<Scalar> value = a.value().array() + s;
  return detail::record<Scalar>(std::move(value), {a}, [](Node<Scalar>& self) {
    self.parents[0]->grad += self.grad;
  });
}

template <typename Scalar>
Var<Scalar> hadamard(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape("hadamard", a, b);
  return detail::record<Scalar>(a.value().cwiseProduct(b.value()), {a, b},
                                [](Node<Scalar>& self) {
                                  const auto& pa = self.parents[0];
                                  const auto& pb = self.parents[1];
                                  if (pa->requires_grad) pa->grad += self.grad.cwiseProduct(pb->value);
                                  if (pb->requires_grad) pb->grad += self.grad.cwiseProduct(pa->value);
                                });
}

template <typename Scalar>
Var<Scalar> div(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape("div", a, b);
  if ((b.value().array() == Scalar(0)).any()) throw DomainError("div: division by zero");
  return detail::record<Scalar>(a.value().cwiseQuotient(b.value()), {a, b},
                                [](Node<Scalar>& self) {
                                  const auto& pa = self.parents[0];
                                  const auto& pb = self.parents[1];
                                  if (pa->requires_grad) pa->grad += self.grad.cwiseQuotient(pb->value);
                                  if (pb->requires_grad) {
                                    pb->grad.array() -= self.grad.array() * self.value.array() /
                                                        pb->value.array();
                                  }
                                });
}

/// relu'(0) is taken as 0.
template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a) {
  Matrix<Scalar> value = a.value().cwiseMax(Scalar(0));
  return detail::record<Scalar>(std::move(value), {a}, [](Node<Scalar>& self) {
    const auto& p = self.parents[0];
    p->grad.array() += (p->value.array() > Scalar(0)).template cast<Scalar>() * self.grad.array();
  });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& a) {
  Matrix<Scalar> value = a.value().array().tanh();
  return detail::record<Scalar>(std::move(value), {a}, [](Node<Scalar>& self) {
    self.parents[0]->grad.array() += self.grad.array() * (Scalar(1) - self.value.array().square());
  });
}

template <typename Scalar>
Var<Scalar> exp(const Var<Scalar>& a) {
  Matrix<Scalar> value = a.value().array().exp();
  return detail::record<Scalar>(std::move(value), {a}, [](Node<Scalar>& self) {
    self.parents[0]->grad.array() += self.grad.array() * self.value.array();
  });
}

template <typename Scalar>
Var<Scalar> log(const Var<Scalar>& a) {
  if ((a.value().array() <= Scalar(0)).any()) throw DomainError("log: non-positive entry");
  Matrix<Scalar> value = a.value().array().log();
  return detail::record<Scalar>(std::move(value), {a}, [](Node<Scalar>& self) {
    const auto& p = self.parents[0];
    p->grad.array() += self.grad.array() / p->value.array();
  });
}

/// Adds a 1×C row to every row of an R×C matrix.
template <typename Scalar>
Var<Scalar> add_row(const Var<Scalar>& a, const Var<Scalar>& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_row: shape mismatch " + detail::shape_str(a.rows(), a.cols()) +
                         " + " + detail::shape_str(row.rows(), row.cols()));
  }
  Matrix<Scalar> value = a.value().rowwise() + row.value().row(0);
  return detail::record<Scalar>(std::move(value), {a, row}, [](Node<Scalar>& self) {
    detail::accumulate(self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) self.parents[1]->grad += self.grad.colwise().sum();
  });
}

// ---------------------------------------------------------------------------
// Reductions

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  detail::require_non_empty("sum", a);
  Matrix<Scalar> value(1, 1);
  value(0, 0) = a.value().sum();
  return detail::record<Scalar>(std::move(value), {a}, [](Node<Scalar>& self) {
    self.parents[0]->grad.array() += self.grad(0, 0);
  });
}

template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& a) {
  detail::require_non_empty("mean", a);
  Matrix<Scalar> value(1, 1);
  value(0, 0) = a.value().mean();
  const Scalar inv = Scalar(1) / static_cast<Scalar>(a.value().size());
  return detail::record<Scalar>(std::move(value), {a}, [inv](Node<Scalar>& self) {
    self.parents[0]->grad.array() += self.grad(0, 0) * inv;
  });
}

/// R×C → R×1.
template <typename Scalar>
Var<Scalar> rowsum(const Var<Scalar>& a) {
  detail::require_non_empty("rowsum", a);
  Matrix<Scalar> value = a.value().rowwise().sum();
  return detail::record<Scalar>(std::move(value), {a}, [](Node<Scalar>& self) {
    self.parents[0]->grad.colwise() += self.grad.col(0);
  });
}

/// Euclidean norm of a row or column vector. The gradient at the zero
/// vector is zero.
template <typename Scalar>
Var<Scalar> l2norm(const Var<Scalar>& a) {
  detail::require_non_empty("l2norm", a);
  if (a.rows() != 1 && a.cols() != 1) {
    throw DimensionError("l2norm: expected a vector, got " + detail::shape_str(a.rows(), a.cols()));
  }
  Matrix<Scalar> value(1, 1);
  value(0, 0) = a.value().norm();
  return detail::record<Scalar>(std::move(value), {a}, [](Node<Scalar>& self) {
    const Scalar n = self.value(0, 0);
    if (n > Scalar(0)) self.parents[0]->grad += self.parents[0]->value * (self.grad(0, 0) / n);
  });
}

/// Per-row Euclidean norms, R×C → R×1; zero rows get zero gradient.
template <typename Scalar>
Var<Scalar> rownorm(const Var<Scalar>& a) {
  detail::require_non_empty("rownorm", a);
  Matrix<Scalar> value = a.value().rowwise().norm();
  return detail::record<Scalar>(std::move(value), {a}, [](Node<Scalar>& self) {
    const auto& p = self.parents[0];
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      const Scalar n = self.value(i, 0);
      if (n > Scalar(0)) p->grad.row(i) += p->value.row(i) * (self.grad(i, 0) / n);
    }
  });
}

// ---------------------------------------------------------------------------
// Softmax family, rowwise, max-shifted

template <typename Derived>
Matrix<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> shifted = z.colwise() - z.rowwise().maxCoeff();
  Matrix<Scalar> e = shifted.array().exp();
  return e.array().colwise() / e.rowwise().sum().array();
}

template <typename Scalar>
Var<Scalar> softmax(const Var<Scalar>& a) {
  detail::require_non_empty("softmax", a);
  return detail::record<Scalar>(softmax_rows(a.value()), {a}, [](Node<Scalar>& self) {
    const auto& y = self.value;
    Matrix<Scalar> inner = self.grad.cwiseProduct(y).rowwise().sum();
    self.parents[0]->grad.array() +=
        y.array() * (self.grad.colwise() - inner.col(0)).array();
  });
}

template <typename Scalar>
Var<Scalar> log_softmax(const Var<Scalar>& a) {
  detail::require_non_empty("log_softmax", a);
  const auto& z = a.value();
  Matrix<Scalar> shifted = z.colwise() - z.rowwise().maxCoeff();
  Matrix<Scalar> lse = shifted.array().exp().rowwise().sum().log();
  Matrix<Scalar> value = shifted.colwise() - lse.col(0);
  return detail::record<Scalar>(std::move(value), {a}, [](Node<Scalar>& self) {
    Matrix<Scalar> p = self.value.array().exp();
    Matrix<Scalar> gsum = self.grad.rowwise().sum();
    self.parents[0]->grad += self.grad - (p.array().colwise() * gsum.col(0).array()).matrix();
  });
}

/// Gathers a(i, index[i]) into an R×1 column.
template <typename Scalar>
Var<Scalar> pick(const Var<Scalar>& a, std::span<const int> index) {
  if (static_cast<Eigen::Index>(index.size()) != a.rows()) {
    throw DimensionError("pick: " + std::to_string(index.size()) + " indices for " +
                         std::to_string(a.rows()) + " rows");
  }
  std::vector<int> idx(index.begin(), index.end());
  Matrix<Scalar> value(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (idx[i] < 0 || idx[i] >= a.cols()) {
      throw DomainError("pick: index " + std::to_string(idx[i]) + " out of range for " +
                        std::to_string(a.cols()) + " columns");
    }
    value(i, 0) = a.value()(i, idx[i]);
  }
  return detail::record<Scalar>(std::move(value), {a}, [idx = std::move(idx)](Node<Scalar>& self) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      self.parents[0]->grad(static_cast<Eigen::Index>(i), idx[i]) += self.grad(i, 0);
    }
  });
}

// ---------------------------------------------------------------------------
// Backward pass

/// Accumulates d(loss)/d(node) into every node reachable from `loss` that
/// requires a gradient. Intermediate gradients are reset first; leaf
/// gradients accumulate, so call zero_grad on parameters between steps.
template <typename Scalar>
void backward(const Var<Scalar>& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw DimensionError("backward: loss must be scalar, got " +
                         detail::shape_str(loss.rows(), loss.cols()));
  }
  if (!loss.requires_grad()) return;

  std::vector<Node<Scalar>*> order;
  std::unordered_set<const Node<Scalar>*> seen;
  std::vector<std::pair<Node<Scalar>*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<Scalar>* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<Scalar>* n : order) {
    if (n->backward_fn) n->grad.setZero(n->value.rows(), n->value.cols());
  }
  loss.node()->grad(0, 0) += Scalar(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

template <typename Scalar>
void zero_grad(std::span<Var<Scalar>> params) {
  for (auto& p : params) p.zero_grad();
}

// ---------------------------------------------------------------------------
// Adam

template <typename Scalar>
struct AdamOptions {
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
};

template <typename Scalar>
struct AdamState {
  std::vector<Matrix<Scalar>> m;
  std::vector<Matrix<Scalar>> v;
  long step = 0;
};

/// One bias-corrected Adam update of `params` from their current gradients.
/// Throws TrainingError before touching any parameter if a gradient is
/// non-finite.
template <typename Scalar>
void adam_step(std::span<Var<Scalar>> params, AdamState<Scalar>& state,
               const AdamOptions<Scalar>& opt = {}) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
      state.v.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam_step: state holds " + std::to_string(state.m.size()) +
                         " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].grad().rows() != state.m[i].rows() || params[i].grad().cols() != state.m[i].cols()) {
      throw DimensionError("adam_step: gradient/state shape mismatch at tensor " + std::to_string(i));
    }
    if (!params[i].grad().allFinite()) {
      throw TrainingError("adam_step: non-finite gradient at step " + std::to_string(state.step + 1));
    }
  }
  ++state.step;
  const Scalar bc1 = Scalar(1) - std::pow(opt.beta1, static_cast<Scalar>(state.step));
  const Scalar bc2 = Scalar(1) - std::pow(opt.beta2, static_cast<Scalar>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& g = params[i].grad();
    state.m[i] = opt.beta1 * state.m[i] + (Scalar(1) - opt.beta1) * g;
    state.v[i] = opt.beta2 * state.v[i] + (Scalar(1) - opt.beta2) * g.cwiseAbs2();
    params[i].value().array() -= opt.lr * (state.m[i].array() / bc1) /
                                  ((state.v[i].array() / bc2).sqrt() + opt.eps);
  }
}

}  // namespace fade::ad
