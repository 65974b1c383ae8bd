#include "doctest.h"

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "purechat/rng.hpp"
#include "purechat/tape.hpp"

using namespace purechat;
using ad::Array;
using ad::Tape;
using ad::Var;

namespace {

using GraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;

double eval_graph(const std::vector<Array>& leaves, const GraphFn& fn) {
  Tape t;
  std::vector<Var> vars;
  for (const auto& a : leaves) vars.push_back(t.param(a));
  return t.value(fn(t, vars))[0];
}

// Backward vs central finite differences over every leaf component.
void check_gradients(const std::vector<Array>& leaves, const GraphFn& fn,
                     double step = 1e-6) {
  Tape t;
  std::vector<Var> vars;
  for (const auto& a : leaves) vars.push_back(t.param(a));
  Var loss = fn(t, vars);
  t.backward(loss);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    const Array& g = t.grad(vars[li]);
    for (std::size_t i = 0; i < leaves[li].numel(); ++i) {
      std::vector<Array> plus = leaves, minus = leaves;
      plus[li][i] += step;
      minus[li][i] -= step;
      double num = (eval_graph(plus, fn) - eval_graph(minus, fn)) / (2 * step);
      CAPTURE(li);
      CAPTURE(i);
      CHECK(oracle::grad_close(g[i], num));
    }
  }
}

Array random_array(std::vector<std::size_t> shape, Rng& rng, double lo = -1.5,
                   double hi = 1.5) {
  Array a(std::move(shape));
  for (std::size_t i = 0; i < a.numel(); ++i) a[i] = rng.uniform(lo, hi);
  return a;
}

}  // namespace

TEST_CASE("matmul identity and hand example") {
  Tape t;
  Var I = t.input(Array::matrix(2, 2, {1, 0, 0, 1}));
  Var v = t.input(Array::matrix(2, 1, {3, 4}));
  CHECK(t.value(t.matmul(I, v)).data() == std::vector<double>{3, 4});

  Var a = t.input(Array::matrix(1, 2, {1, 2}));
  Var b = t.input(Array::matrix(2, 1, {3, 4}));
  CHECK(t.value(t.matmul(a, b))[0] == 11.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape t;
  Var a = t.input(Array::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  Var b = t.input(Array::matrix(2, 2, {1, 2, 3, 4}));
  CHECK_THROWS_WITH_AS(t.matmul(a, b),
                       doctest::Contains("[2x3]"), DimensionError);
}

TEST_CASE("gradient of sum(A*B) w.r.t. A is [[3,4]]") {
  // Frozen from the central-difference oracle at step 1e-6.
  Tape t;
  Var a = t.param(Array::matrix(1, 2, {1, 2}));
  Var b = t.input(Array::matrix(2, 1, {3, 4}));
  Var loss = t.sum(t.matmul(a, b));
  t.backward(loss);
  CHECK(t.grad(a).data() == std::vector<double>{3, 4});

  check_gradients({Array::matrix(1, 2, {1, 2})},
                  [](Tape& tt, const std::vector<Var>& vs) {
                    Var bb = tt.input(Array::matrix(2, 1, {3, 4}));
                    return tt.sum(tt.matmul(vs[0], bb));
                  });
}

TEST_CASE("sigmoid values and gradient") {
  Tape t;
  Var x = t.input(Array::vec({0.0, 1.0}));
  const Array& y = t.value(t.sigmoid(x));
  CHECK(y[0] == 0.5);
  CHECK(y[1] == doctest::Approx(0.7310585786300049).epsilon(1e-12));

  // d/dx sigmoid at 0 is 0.25, cross-checked against sig(x)(1-sig(x)).
  Tape t2;
  Var x2 = t2.param(Array::scalar(0.0));
  Var loss = t2.sum(t2.sigmoid(x2));
  t2.backward(loss);
  CHECK(t2.grad(x2)[0] == doctest::Approx(0.25).epsilon(1e-12));
  double fd = oracle::central_diff([](double v) { return 1.0 / (1.0 + std::exp(-v)); }, 0.0);
  CHECK(oracle::grad_close(t2.grad(x2)[0], fd));
}

TEST_CASE("tanh values and gradient") {
  Tape t;
  Var x = t.input(Array::vec({0.0, 25.0}));
  const Array& y = t.value(t.tanh_act(x));
  CHECK(y[0] == 0.0);
  CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-9));

  Tape t2;
  Var x2 = t2.param(Array::scalar(0.0));
  t2.backward(t2.sum(t2.tanh_act(x2)));
  CHECK(t2.grad(x2)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softmax examples") {
  Tape t;
  CHECK(t.value(t.softmax(t.input(Array::vec({2.5, 2.5, 2.5})))).data() ==
        std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(t.value(t.softmax(t.input(Array::vec({42.0}))))[0] == 1.0);
  const Array& y = t.value(t.softmax(t.input(Array::vec({0.0, std::log(3.0)}))));
  CHECK(y[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax sums to one and is shift-invariant") {
  Rng rng(99);
  for (int it = 0; it < 50; ++it) {
    std::size_t n = 1 + rng.below(8);
    Array v = random_array({n}, rng, -30.0, 30.0);
    Array shifted = v;
    double c = rng.uniform(-100.0, 100.0);
    for (std::size_t i = 0; i < n; ++i) shifted[i] += c;
    Tape t;
    const Array& a = t.value(t.softmax(t.input(v)));
    const Array& b = t.value(t.softmax(t.input(shifted)));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += a[i];
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
      CHECK(a[i] > 0.0);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("log_softmax matches log of softmax") {
  Rng rng(5);
  Array v = random_array({6}, rng, -5.0, 5.0);
  Tape t;
  const Array& ls = t.value(t.log_softmax(t.input(v)));
  const Array& s = t.value(t.softmax(t.input(v)));
  for (std::size_t i = 0; i < v.numel(); ++i)
    CHECK(ls[i] == doctest::Approx(std::log(s[i])).epsilon(1e-12));
}

TEST_CASE("backward of sum is all ones; elementwise square doubles") {
  Tape t;
  Var x = t.param(Array::matrix(2, 3, {1, -2, 3, 0.5, 0, -1}));
  t.backward(t.sum(x));
  CHECK(t.grad(x).data() == std::vector<double>(6, 1.0));

  Tape t2;
  Var x2 = t2.param(Array::vec({1, 2}));
  t2.backward(t2.sum(t2.mul(x2, x2)));
  CHECK(t2.grad(x2).data() == std::vector<double>{2, 4});
}

TEST_CASE("backward contract errors") {
  Tape t;
  Var x = t.param(Array::vec({1, 2}));
  CHECK_THROWS_AS(t.backward(x), ContractError);  // not scalar

  Tape t2;
  Var used = t2.param(Array::scalar(2.0));
  Var detached = t2.param(Array::vec({5, 6}));
  t2.backward(t2.mul(used, used));
  CHECK(t2.grad(detached).data() == std::vector<double>{0, 0});  // zero, no error
  CHECK(t2.grad(used)[0] == 4.0);
}

TEST_CASE("grad before backward is an error") {
  Tape t;
  Var x = t.param(Array::scalar(1.0));
  CHECK_THROWS_AS(t.grad(x), ContractError);
}

TEST_CASE("log of non-positive input raises a numeric error naming the op") {
  Tape t;
  Var x = t.input(Array::vec({1.0, 0.0}));
  CHECK_THROWS_WITH_AS(t.log(x), doctest::Contains("log"), NumericError);
}

TEST_CASE("finite-difference agreement on composite graphs") {
  Rng rng(1234);

  SUBCASE("affine chain with activations") {
    check_gradients(
        {random_array({3, 4}, rng), random_array({4}, rng),
         random_array({3}, rng)},
        [](Tape& t, const std::vector<Var>& vs) {
          Var h = t.tanh_act(t.add(t.matvec(vs[0], vs[1]), vs[2]));
          return t.sum(t.mul(h, h));
        });
  }

  SUBCASE("softmax + log + pick") {
    check_gradients({random_array({5}, rng)},
                    [](Tape& t, const std::vector<Var>& vs) {
                      Var p = t.softmax(vs[0]);
                      return t.pick(t.log(p), 2);
                    });
  }

  SUBCASE("log_softmax pick") {
    check_gradients({random_array({7}, rng)},
                    [](Tape& t, const std::vector<Var>& vs) {
                      return t.pick(t.log_softmax(vs[0]), 3);
                    });
  }

  SUBCASE("concat, smul, mean, clamp") {
    check_gradients(
        {random_array({3}, rng), random_array({2}, rng),
         Array::scalar(0.7)},
        [](Tape& t, const std::vector<Var>& vs) {
          Var c = t.concat({vs[0], vs[1]});
          Var s = t.smul(vs[2], c);
          return t.mean(t.clamp(t.sigmoid(s), 0.01, 0.99));
        });
  }

  SUBCASE("matmul chain") {
    check_gradients(
        {random_array({2, 3}, rng), random_array({3, 2}, rng)},
        [](Tape& t, const std::vector<Var>& vs) {
          Var c = t.matmul(vs[0], vs[1]);
          return t.sum(t.mul(c, c));
        });
  }

  SUBCASE("embedding gather") {
    check_gradients({random_array({4, 3}, rng)},
                    [](Tape& t, const std::vector<Var>& vs) {
                      Var a = t.gather_row(vs[0], 1);
                      Var b = t.gather_row(vs[0], 3);
                      return t.sum(t.mul(a, b));
                    });
  }

  SUBCASE("stack_rows and stack_scalars") {
    check_gradients(
        {random_array({3}, rng), random_array({3}, rng)},
        [](Tape& t, const std::vector<Var>& vs) {
          Var m = t.stack_rows({vs[0], vs[1]});
          Var s0 = t.sum(t.gather_row(m, 0));
          Var s1 = t.sum(t.gather_row(m, 1));
          return t.sum(t.mul(t.stack_scalars({s0, s1}),
                             t.stack_scalars({s1, s0})));
        });
  }
}

TEST_CASE("identical inputs and op order give bit-identical outputs") {
  Rng rng(77);
  Array w = random_array({8, 8}, rng);
  Array x = random_array({8}, rng);
  auto run = [&]() {
    Tape t;
    Var h = t.tanh_act(t.matvec(t.input(w), t.input(x)));
    Var s = t.softmax(h);
    return t.value(t.sum(t.mul(s, h)))[0];
  };
  double a = run();
  double b = run();
  CHECK(a == b);
}
