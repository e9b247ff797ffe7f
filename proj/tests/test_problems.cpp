#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "mada/numdiff.hpp"
#include "mada/problems.hpp"
#include "mada/rng.hpp"

using namespace mada;

namespace {

// finite-difference oracle: 20 random coordinates at a given point
double max_grad_rel_err(const Problem& p, const Vec& x0, long t, std::uint64_t seed,
                        Rng& rng) {
  EvalResult ev = p.eval(x0, t, seed);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    std::size_t i = rng.below(x0.size());
    auto f = [&](double xi) {
      Vec x = x0;
      x[i] = xi;
      return p.eval(x, t, seed).loss;
    };
    double fd = central_diff(f, x0[i]);
    double rel = std::fabs(ev.grad[i] - fd) /
                 std::max({std::fabs(ev.grad[i]), std::fabs(fd), 1e-6});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace

TEST_CASE("quadratic: hand values for Hessian = 2I") {
  QuadraticProblem p(Vec{2.0, 2.0}, Vec{0.0, 0.0});
  EvalResult r = p.eval(Vec{3.0, -1.0}, 1, 0);
  CHECK(r.loss == 10.0);
  CHECK(r.grad == Vec{6.0, -2.0});
}

TEST_CASE("rosenbrock: global minimum") {
  RosenbrockProblem p(2);
  EvalResult r = p.eval(Vec{1.0, 1.0}, 1, 0);
  CHECK(r.loss == 0.0);
  CHECK(r.grad == Vec{0.0, 0.0});
}

TEST_CASE("problem eval: contract errors") {
  QuadraticProblem p(Vec{1.0}, Vec{0.0});
  CHECK_THROWS_AS(p.eval(Vec{1.0, 2.0}, 1, 0), std::invalid_argument);
  ReddiProblem rp;
  CHECK_THROWS_AS(rp.eval(Vec{1.5}, 1, 0), std::domain_error);
}

TEST_CASE("logistic-synth: determinism in (x, t, seed)") {
  LogisticSynthProblem p(6, 128, 2.0, 0.1, 16, 3);
  Rng rng(11);
  Vec x(6);
  for (double& xi : x) xi = rng.normal();
  EvalResult a = p.eval(x, 17, 99);
  EvalResult b = p.eval(x, 17, 99);
  CHECK(a.loss == b.loss);
  CHECK(a.grad == b.grad);
  EvalResult c = p.eval(x, 18, 99);
  CHECK(a.loss != c.loss);  // different step samples a different batch
}

TEST_CASE("gradients match central differences on every kind") {
  Rng rng(1234);
  auto check = [&](const Problem& p, long t, std::uint64_t seed) {
    Vec x(p.dim());
    double worst = 0.0;
    for (int pt = 0; pt < 10; ++pt) {
      for (double& xi : x) xi = 0.7 * rng.normal();
      worst = std::max(worst, max_grad_rel_err(p, x, t + pt, seed, rng));
    }
    return worst;
  };
  CHECK(check(QuadraticProblem::random(12, 5), 1, 0) <= 1e-6);
  CHECK(check(RosenbrockProblem(6), 1, 0) <= 1e-6);
  CHECK(check(LogisticSynthProblem(8, 64, 1.5, 0.1, 8, 7), 3, 21) <= 1e-6);
  TinyMlpSpec spec;
  spec.layer_widths = {2, 8, 8, 2};
  spec.n_samples = 64;
  spec.batch_size = 8;
  spec.dataset_seed = 13;
  CHECK(check(TinyMlpProblem(spec), 5, 31) <= 1e-6);
}

TEST_CASE("reddi_grad: the 101-periodic adversarial gradient") {
  CHECK(reddi_grad(1, 0.5) == 1010.0);
  CHECK(reddi_grad(2, 0.5) == -10.0);
  CHECK(reddi_grad(102, -1.0) == 1010.0);
  CHECK_THROWS_AS(reddi_grad(1, 1.5), std::domain_error);
  for (long t = 1; t <= 500; ++t) {
    CHECK(reddi_grad(t, 0.0) == reddi_grad(t + 101, 0.0));
  }
}

TEST_CASE("reddi_average_regret") {
  CHECK(reddi_average_regret(Vec{-1.0, -1.0, -1.0}) == Vec{0.0, 0.0, 0.0});
  CHECK(reddi_average_regret(Vec{1.0}) == Vec{2020.0});
  // hand evaluation: g_1(0)-g_1(-1) = 1010, g_2(0)-g_2(-1) = -10*0 - 10 = -10
  Vec r = reddi_average_regret(Vec{0.0, 0.0});
  REQUIRE(r.size() == 2);
  CHECK(r[0] == Catch::Approx(1010.0));
  CHECK(r[1] == Catch::Approx(500.0));
  CHECK_THROWS_AS(reddi_average_regret(Vec{}), std::invalid_argument);
  // nonnegative for all prefixes on an arbitrary feasible history
  Rng rng(3);
  Vec hist(400);
  for (double& x : hist) x = rng.uniform(-1.0, 1.0);
  for (double v : reddi_average_regret(hist)) CHECK(v >= 0.0);
}

TEST_CASE("tiny-mlp: uniform softmax at zero weights") {
  TinyMlpSpec spec;
  spec.layer_widths = {2, 8, 2};
  spec.n_samples = 32;
  spec.batch_size = 16;
  TinyMlpProblem p(spec);
  Vec x(p.dim(), 0.0);
  EvalResult r = p.eval(x, 1, 9);
  CHECK(r.loss == Catch::Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("tiny-mlp: duplicating every sample leaves loss and grad unchanged") {
  TinyMlpSpec spec;
  spec.layer_widths = {2, 6, 2};
  spec.n_samples = 32;
  TinyMlpProblem p(spec);
  Vec x = p.initial_point(4);
  std::vector<std::size_t> batch{3, 11, 20, 5};
  std::vector<std::size_t> doubled{3, 3, 11, 11, 20, 20, 5, 5};
  EvalResult a = p.eval_batch(x, batch);
  EvalResult b = p.eval_batch(x, doubled);
  CHECK(a.loss == Catch::Approx(b.loss).epsilon(1e-14));
  for (std::size_t i = 0; i < a.grad.size(); ++i) {
    CHECK(a.grad[i] == Catch::Approx(b.grad[i]).margin(1e-14));
  }
}

TEST_CASE("tiny-mlp: parameter count contract") {
  TinyMlpSpec spec;
  spec.layer_widths = {2, 16, 16, 2};
  TinyMlpProblem p(spec);
  CHECK(p.dim() == (2 + 1) * 16 + (16 + 1) * 16 + (16 + 1) * 2);  // 354
  CHECK_THROWS_AS(p.eval(Vec(p.dim() + 1, 0.0), 1, 0), std::invalid_argument);
}
