#include <cmath>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "minipath/autodiff.hpp"
#include "minipath/error.hpp"
#include "minipath/random.hpp"

using namespace minipath;
using ad::Param;
using ad::ParamKind;
using ad::Tape;
using ad::Var;

namespace {

Param random_param(const std::string& name, std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                   double hi = 1.0) {
  Param p(name, rows, cols, ParamKind::kWeight);
  for (double& v : p.value) v = uniform_real(rng, lo, hi);
  return p;
}

// Projects a vector op output onto fixed random weights so every output
// entry contributes to the checked scalar.
using VecOp = std::function<Var(Tape&, Var)>;

double check_unary(const VecOp& op, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Rng rng(n * 31 + 7);
  Param x = random_param("x", n, 1, rng, lo, hi);
  std::vector<double> w;
  {
    Tape probe;
    std::size_t out = probe.size(op(probe, probe.param(x)));
    for (std::size_t i = 0; i < out; ++i) w.push_back(uniform_real(rng, -1, 1));
  }
  auto loss = [&] {
    x.zero_grad();
    Tape tape;
    Var y = tape.dot(op(tape, tape.param(x)), tape.constant(w));
    tape.backward(y);
    return tape.scalar(y);
  };
  return ad::check_gradients({&x}, loss).max_rel_error;
}

using BinOp = std::function<Var(Tape&, Var, Var)>;

double check_binary(const BinOp& op, std::size_t na, std::size_t nb) {
  Rng rng(na * 17 + nb);
  Param a = random_param("a", na, 1, rng);
  Param b = random_param("b", nb, 1, rng);
  std::vector<double> w;
  {
    Tape probe;
    std::size_t out = probe.size(op(probe, probe.param(a), probe.param(b)));
    for (std::size_t i = 0; i < out; ++i) w.push_back(uniform_real(rng, -1, 1));
  }
  auto loss = [&] {
    a.zero_grad();
    b.zero_grad();
    Tape tape;
    Var y = tape.dot(op(tape, tape.param(a), tape.param(b)), tape.constant(w));
    tape.backward(y);
    return tape.scalar(y);
  };
  return ad::check_gradients({&a, &b}, loss).max_rel_error;
}

constexpr double kTol = 1e-6;

}  // namespace

TEST(AutodiffGrad, ElementwiseUnary) {
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.tanh(x); }, 6), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.sigmoid(x); }, 6), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.scale(x, -2.5); }, 6), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.add_scalar(x, 3.0); }, 6), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.log(x); }, 6, 0.5, 2.0), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.relu(x); }, 6, 0.1, 1.0), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.relu(x); }, 6, -1.0, -0.1), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.leaky_relu(x, 0.2); }, 6, -1.0, -0.1), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.leaky_relu(x, 0.2); }, 6, 0.1, 1.0), kTol);
}

TEST(AutodiffGrad, VectorUnary) {
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.softmax(x); }, 5), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.log_softmax(x); }, 5), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.sum(x); }, 5), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.sq_norm(x); }, 5), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.l2_norm(x); }, 5), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.pick(x, 3); }, 5), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.slice(x, 1, 3); }, 5), kTol);
  EXPECT_LT(check_unary([](Tape& t, Var x) { return t.dropout(x, {2.0, 0.0, 2.0, 2.0, 0.0}); }, 5), kTol);
  EXPECT_LT(check_unary(
                [](Tape& t, Var x) {
                  std::vector<Var> parts{t.pick(x, 0), t.sq_norm(x), t.pick(x, 2)};
                  return t.add_n(parts);
                },
                4),
            kTol);
}

TEST(AutodiffGrad, Binary) {
  EXPECT_LT(check_binary([](Tape& t, Var a, Var b) { return t.add(a, b); }, 4, 4), kTol);
  EXPECT_LT(check_binary([](Tape& t, Var a, Var b) { return t.sub(a, b); }, 4, 4), kTol);
  EXPECT_LT(check_binary([](Tape& t, Var a, Var b) { return t.mul(a, b); }, 4, 4), kTol);
  EXPECT_LT(check_binary([](Tape& t, Var a, Var b) { return t.dot(a, b); }, 4, 4), kTol);
  EXPECT_LT(check_binary([](Tape& t, Var a, Var b) { return t.mul_scalar(t.pick(a, 0), b); }, 2, 4), kTol);
  EXPECT_LT(check_binary(
                [](Tape& t, Var a, Var b) {
                  std::vector<Var> parts{a, b, a};
                  return t.concat(parts);
                },
                3, 2),
            kTol);
}

TEST(AutodiffGrad, MatvecAndRow) {
  Rng rng(1);
  Param w = random_param("w", 3, 4, rng);
  Param x = random_param("x", 4, 1, rng);
  Param table = random_param("table", 5, 3, rng);
  auto loss = [&] {
    for (Param* p : {&w, &x, &table}) p->zero_grad();
    Tape t;
    Var y = t.matvec(t.param(w), t.param(x));
    Var r = t.row(t.param(table), 2);
    Var r2 = t.row(t.param(table), 2);
    Var out = t.add(t.dot(t.tanh(y), r), t.sum(r2));
    t.backward(out);
    return t.scalar(out);
  };
  EXPECT_LT(ad::check_gradients({&w, &x, &table}, loss).max_rel_error, kTol);
}

TEST(AutodiffGrad, SharedSubexpressionsAccumulate) {
  Rng rng(2);
  Param x = random_param("x", 3, 1, rng);
  auto loss = [&] {
    x.zero_grad();
    Tape t;
    Var a = t.param(x);
    Var b = t.param(x);  // memoized: same node
    Var s = t.tanh(a);
    Var out = t.add(t.dot(s, s), t.sum(t.mul(a, b)));
    t.backward(out);
    return t.scalar(out);
  };
  EXPECT_LT(ad::check_gradients({&x}, loss).max_rel_error, kTol);
}

TEST(Autodiff, ForwardValues) {
  Tape t;
  Var x = t.constant(std::vector<double>{1000.0, 0.0, -1000.0});
  auto sm = t.value(t.softmax(x));
  EXPECT_NEAR(sm[0], 1.0, 1e-12);
  EXPECT_EQ(sm[2], 0.0);
  auto ls = t.value(t.log_softmax(x));
  EXPECT_NEAR(ls[0], 0.0, 1e-12);
  EXPECT_NEAR(ls[2], -2000.0, 1e-9);
  auto sg = t.value(t.sigmoid(x));
  EXPECT_EQ(sg[0], 1.0);
  EXPECT_EQ(sg[2], 0.0);
  EXPECT_TRUE(std::isfinite(sg[2]));
  Var y = t.constant(std::vector<double>{3.0, 4.0});
  EXPECT_DOUBLE_EQ(t.scalar(t.l2_norm(y)), 5.0);
  EXPECT_DOUBLE_EQ(t.scalar(t.sq_norm(y)), 25.0);
  EXPECT_EQ(t.value(t.leaky_relu(t.constant(std::vector<double>{-1.0, 2.0}), 0.2))[0], -0.2);
}

TEST(Autodiff, SoftmaxSumsToOne) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(1 + uniform_index(rng, 8));
    for (double& x : v) x = uniform_real(rng, -50, 50);
    Tape t;
    auto s = t.value(t.softmax(t.constant(v)));
    EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Autodiff, ShapeErrors) {
  Tape t;
  Param w("w", 2, 3, ParamKind::kWeight);
  Var a = t.constant(std::vector<double>{1, 2});
  Var b = t.constant(std::vector<double>{1, 2, 3});
  EXPECT_THROW(t.add(a, b), ShapeError);
  EXPECT_THROW(t.matvec(t.param(w), a), ShapeError);
  EXPECT_THROW(t.matvec(a, b), ShapeError);
  EXPECT_THROW(t.slice(a, 1, 2), ShapeError);
  EXPECT_THROW(t.pick(a, 2), ShapeError);
  EXPECT_THROW(t.row(t.param(w), 2), ShapeError);
  EXPECT_THROW(t.dropout(a, {1.0}), ShapeError);
  EXPECT_THROW(t.backward(a), ShapeError);
}

TEST(Autodiff, ConstantsGetNoGradient) {
  Param p("p", 2, 1, ParamKind::kBias);
  p.value = {1.0, -1.0};
  Tape t;
  Var c = t.constant(std::vector<double>{2.0, 3.0});
  Var out = t.dot(t.param(p), c);
  t.backward(out);
  EXPECT_EQ(p.grad, (std::vector<double>{2.0, 3.0}));
}

TEST(GradCheck, DetectsWrongGradient) {
  Param x("x", 2, 1, ParamKind::kWeight);
  x.value = {0.5, -0.3};
  auto loss = [&] {
    x.grad = {0.0, 0.0};
    const double v = x.value[0] * x.value[0] + x.value[1];
    x.grad = {x.value[0], 1.0};  // true derivative of the first entry is 2 x0
    return v;
  };
  ad::GradCheckResult r = ad::check_gradients({&x}, loss);
  EXPECT_GT(r.max_rel_error, 0.1);
  EXPECT_TRUE(r.worst.starts_with("x[0]")) << r.worst;
  EXPECT_EQ(r.checked, 2u);
}
