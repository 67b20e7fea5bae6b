#include <doctest.h>

#include <array>
#include <random>

#include "fade/autodiff.hpp"
#include "fade/errors.hpp"
#include "support.hpp"

using namespace fade;
using fade::test::gradient_error;
using fade::test::random_matrix;
using V = ad::Var<double>;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Gradient of scalar f(x) w.r.t. a fresh parameter initialised to x0.
double check_unary(const std::function<V(const V&)>& f, const Matrix& x0) {
  V x = ad::parameter(x0);
  V loss = ad::sum(f(x));
  ad::backward(loss);
  const Matrix g = x.grad();
  return gradient_error(x, g, [&] { return ad::sum(f(ad::constant(x.value()))).scalar(); });
}

}  // namespace

TEST_CASE("matmul examples") {
  const V a = ad::constant(mat({{1, 0}, {0, 1}}));
  const V b = ad::constant(mat({{3}, {4}}));
  CHECK(ad::matmul(a, b).value() == mat({{3}, {4}}));
  CHECK(ad::matmul(ad::constant(mat({{1, 2}})), b).value() == mat({{11}}));
  CHECK_THROWS_AS(ad::matmul(b, b), DimensionError);
}

TEST_CASE("matmul gradient matches central differences") {
  std::mt19937_64 rng(1);
  V a = ad::parameter(random_matrix(3, 4, rng));
  V b = ad::parameter(random_matrix(4, 2, rng));
  ad::backward(ad::sum(ad::matmul(a, b)));
  const Matrix ga = a.grad(), gb = b.grad();
  auto f = [&] { return (a.value() * b.value()).sum(); };
  CHECK(gradient_error(a, ga, f) < 1e-4);
  CHECK(gradient_error(b, gb, f) < 1e-4);
}

TEST_CASE("elementwise examples") {
  CHECK(ad::relu(ad::constant(mat({{-1, 0, 2}}))).value() == mat({{0, 0, 2}}));
  CHECK(ad::scale(ad::constant(mat({{1, 2}})), 0.0).value() == mat({{0, 0}}));
  CHECK_THROWS_AS(ad::log(ad::constant(mat({{0.0}}))), DomainError);
  CHECK_THROWS_AS(ad::div(ad::constant(mat({{1.0}})), ad::constant(mat({{0.0}}))), DomainError);
  CHECK_THROWS_AS(ad::add(ad::constant(mat({{1, 2}})), ad::constant(mat({{1}, {2}}))), DimensionError);
}

TEST_CASE("relu gradient at zero is zero") {
  V x = ad::parameter(mat({{-1, 0, 2}}));
  ad::backward(ad::sum(ad::relu(x)));
  CHECK(x.grad() == mat({{0, 0, 1}}));
}

TEST_CASE("reduction examples") {
  CHECK(ad::mean(ad::constant(mat({{2, 4, 6}}))).scalar() == 4.0);
  CHECK(ad::l2norm(ad::constant(mat({{3, 4}}))).scalar() == 5.0);
  V x = ad::parameter(mat({{1, 2}, {3, 4}}));
  ad::backward(ad::sum(x));
  CHECK(x.grad() == Matrix::Ones(2, 2));
}

TEST_CASE("backward examples") {
  V w = ad::parameter(mat({{1, -2}, {0.5, 3}}));
  ad::backward(ad::sum(w));
  CHECK(w.grad() == mat({{1, 1}, {1, 1}}));

  V p = ad::parameter(mat({{1, 2}}));
  p.zero_grad();
  const V c = ad::constant(mat({{7.0}}));
  ad::backward(c);
  CHECK(p.grad() == Matrix::Zero(1, 2));

  CHECK_THROWS_AS(ad::backward(ad::constant(mat({{1, 2}}))), DimensionError);
}

TEST_CASE("every differentiable op passes a finite-difference check on [-1, 1] inputs") {
  std::mt19937_64 rng(7);
  const Matrix x0 = random_matrix(3, 4, rng);
  const Matrix pos = random_matrix(3, 4, rng, 0.5, 1.5);
  const Matrix other = random_matrix(3, 4, rng);
  const Matrix right = random_matrix(4, 2, rng);
  const Matrix row = random_matrix(1, 4, rng);
  const std::array<int, 3> labels{1, 3, 0};
  SparseMatrix s(3, 3);
  s.insert(0, 0) = 0.5;
  s.insert(0, 2) = -1.0;
  s.insert(2, 1) = 2.0;
  s.makeCompressed();

  struct Case {
    const char* name;
    std::function<V(const V&)> f;
    Matrix x;
  };
  const std::vector<Case> cases = {
      {"matmul", [&](const V& x) { return ad::matmul(x, ad::constant(right)); }, x0},
      {"spmm", [&](const V& x) { return ad::spmm(s, x); }, x0},
      {"add", [&](const V& x) { return ad::add(x, ad::constant(other)); }, x0},
      {"sub", [&](const V& x) { return ad::sub(ad::constant(other), x); }, x0},
      {"scale", [](const V& x) { return ad::scale(x, -2.5); }, x0},
      {"add_scalar", [](const V& x) { return ad::hadamard(ad::add_scalar(x, 0.3), x); }, x0},
      {"hadamard", [&](const V& x) { return ad::hadamard(x, ad::constant(other)); }, x0},
      {"div numerator", [&](const V& x) { return ad::div(x, ad::constant(pos)); }, x0},
      {"div denominator", [&](const V& x) { return ad::div(ad::constant(other), x); }, pos},
      {"relu", [](const V& x) { return ad::relu(x); }, x0},
      {"tanh", [](const V& x) { return ad::tanh(x); }, x0},
      {"exp", [](const V& x) { return ad::exp(x); }, x0},
      {"log", [](const V& x) { return ad::log(x); }, pos},
      {"add_row", [&](const V& x) { return ad::hadamard(ad::add_row(x, ad::constant(row)), x); }, x0},
      {"mean", [](const V& x) { return ad::scale(ad::mean(ad::hadamard(x, x)), 3.0); }, x0},
      {"rowsum", [](const V& x) { return ad::hadamard(ad::rowsum(x), ad::rowsum(x)); }, x0},
      {"l2norm", [](const V& x) { return ad::l2norm(x); }, row},
      {"rownorm", [](const V& x) { return ad::rownorm(x); }, x0},
      {"softmax", [&](const V& x) { return ad::hadamard(ad::softmax(x), ad::constant(other)); }, x0},
      {"log_softmax", [&](const V& x) { return ad::hadamard(ad::log_softmax(x), ad::constant(other)); }, x0},
      {"pick", [&](const V& x) { return ad::pick(ad::tanh(x), labels); }, x0},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    CHECK(check_unary(c.f, c.x) < 1e-4);
  }
}

TEST_CASE("bias gradient through add_row") {
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(5, 3, rng);
  V b = ad::parameter(random_matrix(1, 3, rng));
  auto f = [&](const V& bias) { return ad::sum(ad::tanh(ad::add_row(ad::constant(x), bias))); };
  ad::backward(f(b));
  const Matrix g = b.grad();
  CHECK(gradient_error(b, g, [&] { return f(ad::constant(b.value())).scalar(); }) < 1e-4);
}

TEST_CASE("softmax rows sum to one and survive huge logits") {
  const Matrix z = mat({{1e9, -1e9, 0}, {1, 2, 3}});
  const Matrix p = ad::softmax_rows(z);
  for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ad::log_softmax(ad::constant(z)).value().allFinite());
}

TEST_CASE("l2norm of the zero vector has zero gradient") {
  V x = ad::parameter(Matrix::Zero(1, 3));
  ad::backward(ad::l2norm(x));
  CHECK(x.grad() == Matrix::Zero(1, 3));
}

TEST_CASE("shared subexpressions accumulate") {
  V x = ad::parameter(mat({{2.0}}));
  const V y = ad::hadamard(x, x);
  ad::backward(ad::add(y, y));  // 2x^2
  CHECK(x.grad()(0, 0) == 8.0);
}

TEST_CASE("backward is deterministic") {
  std::mt19937_64 rng(11);
  const Matrix w0 = random_matrix(4, 3, rng), x = random_matrix(6, 4, rng);
  Matrix first;
  for (int run = 0; run < 2; ++run) {
    V w = ad::parameter(w0);
    ad::backward(ad::sum(ad::tanh(ad::matmul(ad::constant(x), w))));
    if (run == 0) first = w.grad();
    else CHECK(w.grad() == first);
  }
}

TEST_CASE("adam examples") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    std::vector<V> p{ad::parameter(mat({{0.3, -1.2}}))};
    ad::AdamState<double> st;
    for (int i = 0; i < 10; ++i) {
      p[0].zero_grad();
      ad::adam_step<double>(p, st);
    }
    CHECK((p[0].value() - mat({{0.3, -1.2}})).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("one step on w^2 moves toward zero") {
    std::vector<V> p{ad::parameter(mat({{1.0}}))};
    ad::AdamState<double> st;
    p[0].zero_grad();
    ad::backward(ad::hadamard(p[0], p[0]));
    ad::adam_step<double>(p, st, {.lr = 0.1});
    CHECK(std::abs(p[0].scalar()) < 1.0);
  }
  SUBCASE("200 steps on a 2-d quadratic") {
    std::vector<V> p{ad::parameter(mat({{1.0, -0.7}}))};
    const V scales = ad::constant(mat({{1.0, 3.0}}));
    ad::AdamState<double> st;
    for (int i = 0; i < 200; ++i) {
      p[0].zero_grad();
      ad::backward(ad::sum(ad::hadamard(scales, ad::hadamard(p[0], p[0]))));
      ad::adam_step<double>(p, st, {.lr = 0.05});
    }
    CHECK(p[0].value().norm() < 1e-2);
  }
  SUBCASE("non-finite gradient raises before updating") {
    std::vector<V> p{ad::parameter(mat({{1.0}}))};
    ad::AdamState<double> st;
    p[0].grad()(0, 0) = std::nan("");
    CHECK_THROWS_AS(ad::adam_step<double>(p, st), TrainingError);
    CHECK(p[0].scalar() == 1.0);
  }
}
