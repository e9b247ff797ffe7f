#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "mada/base_opt.hpp"
#include "mada/poly_opt.hpp"
#include "mada/problems.hpp"
#include "mada/rng.hpp"
#include "mada/schedule.hpp"

using namespace mada;

namespace {

struct VertexCase {
  const char* name;
  BaseKind base;
  CoefficientVector q;
  PolyVariant variant;
};

CoefficientVector make_q(double b1, double b2, double b3, double rho, double c,
                         double gamma) {
  CoefficientVector q;
  q.beta1 = b1;
  q.beta2 = b2;
  q.beta3 = b3;
  q.rho = rho;
  q.c = c;
  q.gamma = gamma;
  return q;
}

std::vector<VertexCase> vertex_cases(double b1, double b2, double b3) {
  return {
      {"adam", BaseKind::adam, make_q(b1, b2, 0.0, 1.0, 1.0, 1.0), PolyVariant::avgrad_interp},
      {"avgrad", BaseKind::avgrad, make_q(b1, b2, 0.0, 0.0, 1.0, 1.0), PolyVariant::avgrad_interp},
      {"amsgrad", BaseKind::amsgrad, make_q(b1, b2, 0.0, 0.0, 1.0, 1.0), PolyVariant::max_interp},
      {"yogi", BaseKind::yogi, make_q(b1, b2, 0.0, 1.0, 0.0, 1.0), PolyVariant::avgrad_interp},
      {"adan", BaseKind::adan, make_q(b1, b2, b3, 1.0, 1.0, 1.0), PolyVariant::avgrad_interp},
  };
}

// Runs base and poly trajectories independently on the same problem and
// returns the max elementwise deviation over the whole run.
double vertex_deviation(const VertexCase& vc, const Problem& problem, long steps,
                        double eps, std::uint64_t seed) {
  BaseHyperParams hp;
  hp.beta1 = vc.q.beta1;
  hp.beta2 = vc.q.beta2;
  hp.beta3 = vc.q.beta3;
  hp.eps = eps;

  Vec xb = problem.initial_point(seed);
  Vec xp = xb;
  BaseOptState sb(problem.dim());
  PolyState sp(vc.variant, problem.dim());
  Schedule sched = Schedule::inv_sqrt(0.05);

  double worst = 0.0;
  for (long t = 1; t <= steps; ++t) {
    double a = schedule_at(sched, t);
    EvalResult eb = problem.eval(xb, t, seed);
    EvalResult ep = problem.eval(xp, t, seed);
    base_step(vc.base, sb, hp, xb, eb.grad, a);
    poly_step(sp, vc.q, xp, ep.grad, a, eps, 0.0);
    worst = std::max(worst, max_abs_diff(xb, xp));
  }
  return worst;
}

}  // namespace

TEST_CASE("vertex recovery: all five corners on quadratic and logistic") {
  QuadraticProblem quad = QuadraticProblem::random(20, 11);
  LogisticSynthProblem logi(20, 128, 2.0, 0.1, 16, 12);
  for (const auto& vc : vertex_cases(0.9, 0.95, 0.9)) {
    double dq = vertex_deviation(vc, quad, 300, 1e-8, 21);
    double dl = vertex_deviation(vc, logi, 300, 1e-8, 22);
    INFO(vc.name);
    CHECK(dq <= 1e-12);
    CHECK(dl <= 1e-12);
  }
}

TEST_CASE("gamma = 0 is the pure lion direction") {
  BaseHyperParams hp;
  CoefficientVector q = make_q(0.9, 0.95, 0.0, 1.0, 1.0, 0.0);
  q.lion_beta1 = hp.lion_beta1;
  q.lion_beta2 = hp.lion_beta2;
  Rng rng(31);
  Vec xb(5), xp(5), g(5);
  for (std::size_t i = 0; i < 5; ++i) xb[i] = xp[i] = rng.normal();
  BaseOptState sb(5);
  PolyState sp(PolyVariant::avgrad_interp, 5);
  for (int t = 0; t < 200; ++t) {
    for (double& gi : g) gi = rng.normal();
    base_step(BaseKind::lion, sb, hp, xb, g, 0.01);
    poly_step(sp, q, xp, g, 0.01, 1e-8, 0.0);
  }
  CHECK(max_abs_diff(xb, xp) == 0.0);
}

TEST_CASE("interior rho differs from both endpoints") {
  QuadraticProblem quad = QuadraticProblem::random(6, 77);
  auto run = [&](double rho) {
    CoefficientVector q = make_q(0.9, 0.95, 0.0, rho, 1.0, 1.0);
    Vec x = quad.initial_point(5);
    PolyState st(PolyVariant::avgrad_interp, 6);
    for (long t = 1; t <= 100; ++t) {
      EvalResult ev = quad.eval(x, t, 5);
      poly_step(st, q, x, ev.grad, 0.05, 1e-8, 0.0);
    }
    return x;
  };
  Vec x0 = run(0.0), xh = run(0.5), x1 = run(1.0);
  CHECK(max_abs_diff(x0, xh) > 1e-6);
  CHECK(max_abs_diff(x1, xh) > 1e-6);
  CHECK(max_abs_diff(x0, x1) > 1e-6);
}

TEST_CASE("all-zero gradients keep x exactly stationary") {
  Rng rng(13);
  for (PolyVariant variant : {PolyVariant::avgrad_interp, PolyVariant::max_interp}) {
    CoefficientVector q = make_q(0.7, 0.8, 0.3, 0.4, 0.6, 0.5);
    Vec x(4), g(4, 0.0);
    for (double& xi : x) xi = rng.normal();
    Vec x0 = x;
    PolyState st(variant, 4);
    for (int t = 0; t < 50; ++t) poly_step(st, q, x, g, 0.1, 1e-8, 0.0);
    CHECK(x == x0);
    // and with eps = 0, the 0/0 guard keeps it stationary too
    PolyState st2(variant, 4);
    Vec x2 = x0;
    for (int t = 0; t < 50; ++t) poly_step(st2, q, x2, g, 0.1, 0.0, 0.0);
    CHECK(x2 == x0);
  }
}

TEST_CASE("yogi sign tie: sign(0) = 0 keeps vbar unchanged at c = 0") {
  CoefficientVector q = make_q(0.0, 0.9, 0.0, 1.0, 0.0, 1.0);
  PolyState st(PolyVariant::avgrad_interp, 1);
  st.t = 1;
  st.vbar = Vec{1.0};
  st.prev_grad = Vec{1.0};
  Vec x{0.0}, g{1.0};  // ghat^2 = 1 = vbar, tie
  StepTrace tr = poly_step(st, q, x, g, 0.1, 1e-8, 0.0);
  CHECK(tr.yogi_sign[0] == 0.0);
  CHECK(st.vbar[0] == 1.0);  // 0.9*1 + 0.1*(1 + 1*0)
}

TEST_CASE("trace is reproducible bit for bit") {
  Rng rng(17);
  CoefficientVector q = make_q(0.8, 0.9, 0.2, 0.3, 0.7, 0.6);
  PolyState s1(PolyVariant::max_interp, 3), s2(PolyVariant::max_interp, 3);
  Vec x1(3), x2(3), g(3);
  for (std::size_t i = 0; i < 3; ++i) x1[i] = x2[i] = rng.normal();
  for (int t = 0; t < 20; ++t) {
    for (double& gi : g) gi = rng.normal();
    StepTrace t1 = poly_step(s1, q, x1, g, 0.05, 1e-8, 0.01);
    StepTrace t2 = poly_step(s2, q, x2, g, 0.05, 1e-8, 0.01);
    REQUIRE(t1 == t2);
  }
}

TEST_CASE("weight decay ordering: decay happens before the moment update") {
  CoefficientVector q = make_q(0.0, 0.5, 0.0, 1.0, 1.0, 1.0);
  PolyState st(PolyVariant::avgrad_interp, 1);
  Vec x{2.0}, g{1.0};
  poly_step(st, q, x, g, 0.1, 1.0, 0.5);
  // decay: x <- 2 - 0.5*0.1*2 = 1.9; m = 1, vbar = 0.5, v = 0.5
  // update: 1.9 - 0.1*(1/(sqrt(0.5)+1))
  CHECK(x[0] == Catch::Approx(1.9 - 0.1 * (1.0 / (std::sqrt(0.5) + 1.0))).epsilon(1e-15));
}

TEST_CASE("contract errors") {
  CoefficientVector q;
  q.rho = 1.5;  // outside the domain
  PolyState st(PolyVariant::avgrad_interp, 2);
  Vec x{0.0, 0.0}, g{1.0, 1.0};
  CHECK_THROWS_AS(poly_step(st, q, x, g, 0.1, 1e-8, 0.0), std::invalid_argument);
  CoefficientVector ok;
  Vec bad{1.0};
  CHECK_THROWS_AS(poly_step(st, ok, x, bad, 0.1, 1e-8, 0.0), std::invalid_argument);
}

TEST_CASE("freeze: adam vertex handle tracks base adam for 1000 steps") {
  QuadraticProblem quad = QuadraticProblem::random(8, 3);
  CoefficientVector q = make_q(0.9, 0.95, 0.0, 1.0, 1.0, 1.0);
  FrozenPoly frozen = freeze(q, PolyVariant::avgrad_interp, 8, 1e-8, 0.0);
  BaseHyperParams hp;
  hp.beta1 = 0.9;
  hp.beta2 = 0.95;
  BaseOptState sb(8);
  Vec xf = quad.initial_point(9), xb = xf;
  Schedule sched = Schedule::inv_sqrt(0.05);
  for (long t = 1; t <= 1000; ++t) {
    double a = schedule_at(sched, t);
    EvalResult ef = quad.eval(xf, t, 9);
    EvalResult eb = quad.eval(xb, t, 9);
    frozen.step(xf, ef.grad, a);
    base_step(BaseKind::adam, sb, hp, xb, eb.grad, a);
  }
  CHECK(max_abs_diff(xf, xb) <= 1e-12);
}

TEST_CASE("freeze: deterministic replay and domain validation") {
  CoefficientVector q = make_q(0.85, 0.9, 0.1, 0.5, 0.9, 0.8);
  auto run_once = [&] {
    QuadraticProblem quad = QuadraticProblem::random(4, 1);
    FrozenPoly f = freeze(q, PolyVariant::avgrad_interp, 4);
    Vec x = quad.initial_point(2);
    for (long t = 1; t <= 200; ++t) {
      EvalResult ev = quad.eval(x, t, 2);
      f.step(x, ev.grad, 0.02);
    }
    return x;
  };
  CHECK(run_once() == run_once());
  CoefficientVector bad;
  bad.beta2 = 0.2;  // below the beta2 clamp interval
  CHECK_THROWS_AS(freeze(bad, PolyVariant::avgrad_interp, 4), std::invalid_argument);
}
