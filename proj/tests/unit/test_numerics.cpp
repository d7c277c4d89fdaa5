#include <doctest.h>

#include <cmath>
#include <limits>

#include "advmt/autodiff.hpp"
#include "advmt/errors.hpp"
#include "advmt/optim.hpp"

using namespace advmt;

TEST_CASE("tensor construction and shape checks") {
  Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.shape() == Shape{2, 3});
  CHECK(m.at(1, 2) == 6);
  CHECK(Tensor().item() == 0.0);
  CHECK_THROWS_AS(Tensor(Shape{2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{2}, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(m.item(), ShapeError);
  m.at(0, 0) = std::nan("");
  CHECK_FALSE(m.all_finite());
}

TEST_CASE("forward op examples") {
  Tape tape;
  CHECK(ops::softmax(tape.constant(Tensor::vector({0, 0}))).value() == Tensor::vector({0.5, 0.5}));
  CHECK(ops::sigmoid(tape.constant(Tensor::scalar(0))).item() == 0.5);
  CHECK(ops::tanh(tape.constant(Tensor::scalar(0))).item() == 0.0);
  Var a = tape.constant(Tensor::matrix({{1, 2}}));
  Var b = tape.constant(Tensor::matrix({{3}, {1}}));
  CHECK(ops::matmul(a, b).value() == Tensor::matrix({{5}}));
}

TEST_CASE("softmax and sigmoid stay finite at extreme inputs") {
  Tape tape;
  auto p = ops::softmax(tape.constant(Tensor::vector({1000, -1000}))).value();
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 0.0);
  CHECK(ops::sigmoid(tape.constant(Tensor::scalar(-800))).item() >= 0.0);
  CHECK(ops::sigmoid(tape.constant(Tensor::scalar(800))).item() == 1.0);
}

TEST_CASE("shape mismatch names both shapes") {
  Tape tape;
  Var a = tape.constant(Tensor(Shape{2, 3}));
  Var b = tape.constant(Tensor(Shape{2, 3}));
  try {
    ops::matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
  CHECK_THROWS_AS(ops::add(tape.constant(Tensor(Shape{2})), tape.constant(Tensor(Shape{3}))), ShapeError);
}

TEST_CASE("backward examples") {
  Parameter p("p", Tensor::vector({1, -2, 3}), Scope::shared());
  Parameter w("w", Tensor::scalar(0.0), Scope::shared());
  Parameter unused("u", Tensor::vector({4, 5}), Scope::shared());
  {
    Tape tape;
    tape.backward(ops::sum(tape.param(p)));
    CHECK(p.grad == Tensor::vector({1, 1, 1}));
  }
  {
    Tape tape;
    tape.param(unused);
    Var x = tape.constant(Tensor::scalar(1.0));
    tape.backward(ops::sigmoid(ops::mul(tape.param(w), x)));
    CHECK(w.grad.item() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(unused.grad == Tensor(Shape{2}));
  }
  Tape tape;
  CHECK_THROWS_AS(tape.backward(tape.param(p)), ShapeError);
}

TEST_CASE("a parameter used twice accumulates both paths") {
  Parameter p("p", Tensor::scalar(3.0), Scope::shared());
  Tape tape;
  Var x = tape.param(p);
  tape.backward(ops::mul(x, tape.param(p)));
  CHECK(p.grad.item() == 6.0);
}

TEST_CASE("scope filter turns parameters into constants") {
  Parameter a("a", Tensor::scalar(2.0), Scope::private_to(0));
  Parameter b("b", Tensor::scalar(5.0), Scope::discriminator());
  Tape tape([](const Scope& s) { return s.kind != ScopeKind::Discriminator; });
  tape.backward(ops::mul(tape.param(a), tape.param(b)));
  CHECK(a.grad.item() == 5.0);
  CHECK(b.grad.item() == 0.0);
  Tape frozen = Tape::frozen();
  CHECK_FALSE(frozen.needs_grad(frozen.param(a)));
}

TEST_CASE("log floor zeroes the gradient of clamped entries") {
  Parameter p("p", Tensor::vector({0.0, 0.5}), Scope::shared());
  Tape tape;
  Var l = ops::log(tape.param(p));
  CHECK(l.value()[0] == -700.0);
  tape.backward(ops::sum(l));
  CHECK(p.grad[0] == 0.0);
  CHECK(p.grad[1] == 2.0);
}

namespace {

// Finite-difference check of a scalar function of one parameter.
double op_check(Parameter& p, const std::function<Var(Tape&, Var)>& f) {
  Parameter* ps[] = {&p};
  return finite_difference_check(
             ps,
             [&] {
               Tape t;
               return f(t, t.param(p)).item();
             },
             [&] {
               Tape t;
               t.backward(f(t, t.param(p)));
             })
      .max_relative_error;
}

}  // namespace

TEST_CASE("every op passes a finite-difference check") {
  Parameter v("v", Tensor::vector({0.3, -0.7, 1.1, 0.2}), Scope::shared());
  Parameter m("m", Tensor::matrix({{0.5, -0.2}, {0.1, 0.9}, {-0.4, 0.3}}), Scope::shared());
  Parameter e("e", Tensor::matrix({{0.0, 0.0}, {0.4, -0.6}, {0.2, 0.8}}), Scope::shared());
  const Tensor w = Tensor::vector({0.9, -1.3, 0.4, 2.0});
  auto weighted = [&](Tape& t, Var x) { return ops::sum(ops::mul(x, t.constant(w))); };

  CHECK(op_check(v, [&](Tape& t, Var x) { return weighted(t, ops::tanh(x)); }) < 1e-8);
  CHECK(op_check(v, [&](Tape& t, Var x) { return weighted(t, ops::sigmoid(x)); }) < 1e-8);
  CHECK(op_check(v, [&](Tape& t, Var x) { return weighted(t, ops::softmax(x)); }) < 1e-8);
  CHECK(op_check(v, [&](Tape& t, Var x) { return weighted(t, ops::relu(x)); }) < 1e-8);
  CHECK(op_check(v, [&](Tape& t, Var x) { return weighted(t, ops::log(ops::add_scalar(ops::mul(x, x), 0.5))); }) <
        1e-8);
  CHECK(op_check(v, [&](Tape& t, Var x) { return weighted(t, ops::scale(ops::sub(x, ops::mul(x, x)), 3.0)); }) <
        1e-8);
  CHECK(op_check(v, [&](Tape& t, Var x) {
          Var s = ops::concat(ops::slice(x, 2, 2), ops::slice(x, 0, 2));
          return weighted(t, s);
        }) < 1e-8);
  CHECK(op_check(m, [&](Tape& t, Var x) {
          Var y = ops::matmul(x, t.constant(Tensor::vector({1.5, -0.5})));          // 2D . 1D
          Var z = ops::matmul(t.constant(Tensor::vector({0.2, 0.4, -0.1})), x);     // 1D . 2D
          Var q = ops::matmul(ops::reshape(x, Shape{2, 3}), x);                      // 2D . 2D
          return ops::add(ops::add(ops::sum(ops::tanh(y)), ops::sum(ops::mul(z, z))), ops::sum(ops::softmax(q)));
        }) < 1e-8);
  CHECK(op_check(e, [&](Tape&, Var x) {
          Var r = ops::gather_row(x, 2);
          return ops::sum(ops::mul(r, ops::gather_row(x, 1)));
        }) < 1e-8);
}

TEST_CASE("gather_row can leave row 0 without gradient") {
  Parameter e("e", Tensor::matrix({{1, 1}, {2, 2}}), Scope::shared());
  Tape tape;
  Var x = tape.param(e);
  tape.backward(ops::sum(ops::concat(ops::gather_row(x, 0, true), ops::gather_row(x, 1, true))));
  CHECK(e.grad == Tensor::matrix({{0, 0}, {1, 1}}));
}

TEST_CASE("finite differences: quadratic, constant and non-finite") {
  Parameter p("p", Tensor::vector({0.7, -1.2, 2.5}), Scope::shared());
  Parameter* ps[] = {&p};
  auto quad = [&](Tape& t) {
    Var x = t.param(p);
    return ops::add(ops::sum(ops::mul(x, x)), ops::scale(ops::sum(x), 3.0));
  };
  auto r = finite_difference_check(
      ps,
      [&] {
        Tape t;
        return quad(t).item();
      },
      [&] {
        Tape t;
        t.backward(quad(t));
      });
  CHECK(r.max_relative_error < 1e-9);
  CHECK(r.coordinates == 3);

  auto c = finite_difference_check(ps, [] { return 4.0; }, [] {});
  CHECK(c.max_relative_error == 0.0);

  CHECK_THROWS(finite_difference_check(ps, [] { return std::numeric_limits<double>::infinity(); }, [] {}));
  CHECK_THROWS(finite_difference_check(ps, [] { return 1.0; }, [] {}, 0.0));
}

TEST_CASE("adam: zero gradient, first step, off-path parameter") {
  Parameter a("a", Tensor::vector({1.0, 2.0}), Scope::shared());
  Parameter b("b", Tensor::scalar(-3.0), Scope::shared());
  Adam adam;
  Parameter* ps[] = {&a, &b};
  adam.step(ps);
  CHECK(a.value == Tensor::vector({1.0, 2.0}));
  CHECK(b.value.item() == -3.0);

  Adam fresh;
  const double g = 0.37;
  a.grad = Tensor::vector({g, -g});
  fresh.step(ps);
  CHECK(a.value[0] == doctest::Approx(1.0 - 0.001 * g / (g + 1e-8)).epsilon(1e-12));
  CHECK(a.value[1] == doctest::Approx(2.0 + 0.001 * g / (g + 1e-8)).epsilon(1e-12));
  CHECK(b.value.item() == -3.0);
  CHECK(a.grad == Tensor(Shape{2}));
  CHECK(fresh.steps_taken(a) == 1);
}

TEST_CASE("adam steps only the parameters it is given") {
  Parameter a("a", Tensor::scalar(1.0), Scope::shared());
  Parameter b("b", Tensor::scalar(1.0), Scope::shared());
  Adam adam;
  a.grad = Tensor::scalar(1.0);
  b.grad = Tensor::scalar(1.0);
  Parameter* only_a[] = {&a};
  adam.step(only_a);
  CHECK(a.value.item() != 1.0);
  CHECK(b.value.item() == 1.0);
  CHECK(adam.steps_taken(b) == 0);
}

TEST_CASE("adam rejects non-finite gradients without touching anything") {
  Parameter a("a", Tensor::scalar(1.0), Scope::shared());
  Parameter b("b", Tensor::scalar(1.0), Scope::shared());
  a.grad = Tensor::scalar(0.5);
  b.grad = Tensor::scalar(std::nan(""));
  Adam adam;
  Parameter* ps[] = {&a, &b};
  CHECK_THROWS_AS(adam.step(ps), DivergenceError);
  CHECK(a.value.item() == 1.0);
  CHECK(adam.steps_taken(a) == 0);
}
