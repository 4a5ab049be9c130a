#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fact/gradcore/adam.hpp"
#include "fact/gradcore/grad_check.hpp"
#include "fact/gradcore/tensor.hpp"

using namespace fact::gradcore;

TEST_CASE("pointwise nonlinearities") {
  Graph g;
  Tensor* x = g.make({1}, {0.0});
  CHECK(g.pointwise(Nonlinearity::Sigmoid, x)->value[0] == doctest::Approx(0.5));

  Tensor* r = g.make({2}, {-2.0, 3.0});
  Tensor* relu = g.pointwise(Nonlinearity::Relu, r);
  CHECK(relu->value[0] == 0.0);
  CHECK(relu->value[1] == 3.0);

  Tensor* t = g.make({1}, {1.0});
  CHECK(g.pointwise(Nonlinearity::Tanh, t)->value[0] ==
        doctest::Approx(std::tanh(1.0)).epsilon(1e-12));
}

TEST_CASE("affine forward and gradient") {
  Graph g;
  Tensor* W = g.make({2, 2}, {1, 0, 0, 1});
  Tensor* x = g.make({2}, {3, 4});
  Tensor* b = g.make({2}, {0, 0});
  Tensor* y = g.affine(W, x, b);
  CHECK(y->value[0] == 3.0);
  CHECK(y->value[1] == 4.0);

  Tensor* Ws = g.make({1, 1}, {2});
  Tensor* xs = g.make({1}, {3});
  Tensor* bs = g.make({1}, {1});
  CHECK(g.affine(Ws, xs, bs)->value[0] == 7.0);

  // gradient of sum(affine) w.r.t. b is all ones
  Tensor* loss = g.sum(y);
  g.backward(loss);
  CHECK(b->grad[0] == 1.0);
  CHECK(b->grad[1] == 1.0);
}

TEST_CASE("affine shape mismatch names the operand") {
  Graph g;
  Tensor* W = g.make({2, 3});
  Tensor* x = g.make({2});
  Tensor* b = g.make({2});
  CHECK_THROWS_WITH_AS(g.affine(W, x, b),
                       doctest::Contains("x has length"),
                       fact::validation_error);
}

TEST_CASE("hadamard, concat, sum_over") {
  Graph g;
  Tensor* a = g.make({2}, {1, 2});
  Tensor* b = g.make({2}, {3, 4});
  Tensor* h = g.hadamard(a, b);
  CHECK(h->value == std::vector<double>{3, 8});

  Tensor* c1 = g.make({1}, {1});
  Tensor* c2 = g.make({2}, {2, 3});
  Tensor* cc = g.concat(c1, c2);
  CHECK(cc->value == std::vector<double>{1, 2, 3});
  CHECK(cc->size() == c1->size() + c2->size());

  std::vector<Tensor*> terms = {g.make({2}, {1, 1}), g.make({2}, {2, 2})};
  Tensor* s = g.sum_over(terms, {2});
  CHECK(s->value == std::vector<double>{3, 3});

  Tensor* empty = g.sum_over(std::span<Tensor* const>{}, {3});
  CHECK(empty->value == std::vector<double>{0, 0, 0});

  std::vector<Tensor*> single = {g.make({2}, {5, 7})};
  CHECK(g.sum_over(single, {2})->value == std::vector<double>{5, 7});
}

TEST_CASE("smooth L1 values and smoothness at the transition") {
  CHECK(smooth_l1_value(0, 0) == 0.0);
  CHECK(smooth_l1_value(0.5, 0) == doctest::Approx(0.125));
  CHECK(smooth_l1_value(3, 1) == doctest::Approx(1.5));
  // continuous value and first derivative at |d| = 1
  const double below = smooth_l1_value(1.0 - 1e-9, 0.0);
  const double above = smooth_l1_value(1.0 + 1e-9, 0.0);
  CHECK(std::abs(above - below) < 1e-6);
}

TEST_CASE("backward basics") {
  {  // x^2 at x=3
    Graph g;
    Tensor* x = g.make({1}, {3});
    Tensor* y = g.sum(g.hadamard(x, x));
    g.backward(y);
    CHECK(x->grad[0] == doctest::Approx(6.0));
  }
  {  // smooth_l1 quadratic branch derivative
    Graph g;
    Tensor* x = g.make({1}, {0.5});
    Tensor* loss = g.smooth_l1(x, 0.0);
    g.backward(loss);
    CHECK(x->grad[0] == doctest::Approx(0.5));
  }
  {  // sum(hadamard(a,a)) at a=[1,2]
    Graph g;
    Tensor* a = g.make({2}, {1, 2});
    Tensor* loss = g.sum(g.hadamard(a, a));
    g.backward(loss);
    CHECK(a->grad[0] == doctest::Approx(2.0));
    CHECK(a->grad[1] == doctest::Approx(4.0));
  }
  {  // non-scalar loss rejected
    Graph g;
    Tensor* a = g.make({2}, {1, 2});
    CHECK_THROWS_AS(g.backward(a), fact::validation_error);
  }
}

TEST_CASE("backward is linear in the loss") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor W({3, 3}), x({3}), b({3});
  for (Tensor* t : {&W, &x, &b})
    for (double& v : t->value) v = u(rng);

  auto grads_for = [&](double alpha) {
    for (Tensor* t : {&W, &x, &b}) t->zero_grad();
    Graph g;
    Tensor* y = g.sum(g.pointwise(Nonlinearity::Tanh, g.affine(&W, &x, &b)));
    g.backward(g.scale(y, alpha));
    return W.grad;
  };
  auto g1 = grads_for(1.0);
  auto g3 = grads_for(3.0);
  for (std::size_t i = 0; i < g1.size(); ++i)
    CHECK(g3[i] == doctest::Approx(3.0 * g1[i]).epsilon(1e-12));
}

TEST_CASE("gradient accumulation without reset") {
  Tensor x({1}, {3});
  for (int rep = 0; rep < 2; ++rep) {
    Graph g;
    Tensor* y = g.sum(g.hadamard(&x, &x));
    g.backward(y);
  }
  CHECK(x.grad[0] == doctest::Approx(12.0));
}

TEST_CASE("grad_check on a small composite") {
  Tensor x({1}, {3.0});
  std::vector<Tensor*> params = {&x};
  const double disc = grad_check(
      [&](Graph& g) { return g.sum(g.hadamard(&x, &x)); }, params, 1e-5);
  CHECK(disc < 1e-8);
}

TEST_CASE("grad_check rejects bad eps") {
  Tensor x({1}, {1.0});
  std::vector<Tensor*> params = {&x};
  CHECK_THROWS_AS(grad_check([&](Graph& g) { return g.sum(&x); }, params, 0.5),
                  fact::validation_error);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor p({2}, {1.0, -1.0});
    std::vector<Tensor*> params = {&p};
    Adam opt;
    opt.step(params);
    CHECK(p.value == std::vector<double>{1.0, -1.0});
    CHECK(opt.step_count() == 1);
  }
  SUBCASE("converges to the minimizer of a 1-D quadratic") {
    // loss = (p - 2)^2
    Tensor p({1}, {10.0});
    std::vector<Tensor*> params = {&p};
    AdamConfig cfg;
    cfg.lr = 0.05;
    Adam opt(cfg);
    for (int i = 0; i < 2000; ++i) {
      p.grad[0] = 2.0 * (p.value[0] - 2.0);
      opt.step(params);
    }
    CHECK(p.value[0] == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(opt.step_count() == 2000);
  }
  SUBCASE("non-finite gradient is skipped with a warning count") {
    Tensor p({1}, {1.0});
    std::vector<Tensor*> params = {&p};
    Adam opt;
    p.grad[0] = std::numeric_limits<double>::quiet_NaN();
    opt.step(params);
    CHECK(p.value[0] == 1.0);
    CHECK(opt.skipped_updates() == 1);
    CHECK(p.grad[0] == 0.0);
  }
}
