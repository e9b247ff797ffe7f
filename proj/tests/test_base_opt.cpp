#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mada/base_opt.hpp"
#include "mada/problems.hpp"
#include "mada/rng.hpp"
#include "mada/schedule.hpp"

using namespace mada;

TEST_CASE("adam: hand-evaluated first step") {
  BaseHyperParams hp;
  hp.beta1 = 0.5;
  hp.beta2 = 0.5;
  hp.eps = 0.0;
  BaseOptState st(1);
  Vec x{1.0}, g{2.0};
  base_step(BaseKind::adam, st, hp, x, g, 0.1);
  CHECK(st.m[0] == 1.0);
  CHECK(st.v[0] == 2.0);
  CHECK(x[0] == Catch::Approx(1.0 - 0.1 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(st.t == 1);
}

TEST_CASE("avgrad: first step average equals the EMA") {
  BaseHyperParams hp;
  BaseOptState st(3);
  Vec x{0.0, 1.0, -2.0}, g{0.3, -0.7, 2.0};
  base_step(BaseKind::avgrad, st, hp, x, g, 0.01);
  CHECK(st.vavg == st.vbar);
}

TEST_CASE("lion: sign update with zero moment") {
  BaseHyperParams hp;
  hp.lion_beta1 = 0.9;
  BaseOptState st(1);
  Vec x{0.5}, g{-3.0};
  base_step(BaseKind::lion, st, hp, x, g, 0.25);
  // u = 0.9*0 + 0.1*(-3) = -0.3, update is +alpha
  CHECK(x[0] == 0.75);
  CHECK(st.mlion[0] == Catch::Approx(0.01 * (-3.0)));
}

TEST_CASE("yogi: first step from zero state equals adam") {
  BaseHyperParams hp;
  hp.beta1 = 0.9;
  hp.beta2 = 0.99;
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    BaseOptState sy(4), sa(4);
    Vec xy{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    Vec xa = xy;
    Vec g{rng.normal(), rng.normal(), rng.normal(), 0.0};
    base_step(BaseKind::yogi, sy, hp, xy, g, 0.05);
    base_step(BaseKind::adam, sa, hp, xa, g, 0.05);
    CHECK(xy == xa);
    CHECK(sy.v == sa.v);
  }
}

TEST_CASE("adan with beta3 = 0 is exactly adam") {
  BaseHyperParams hp;
  hp.beta1 = 0.9;
  hp.beta2 = 0.95;
  hp.beta3 = 0.0;
  Rng rng(6);
  BaseOptState s1(8), s2(8);
  Vec x1(8), x2(8), g(8);
  for (std::size_t i = 0; i < 8; ++i) x1[i] = x2[i] = rng.normal();
  for (int t = 0; t < 500; ++t) {
    for (double& gi : g) gi = rng.normal();
    base_step(BaseKind::adan, s1, hp, x1, g, 0.01);
    base_step(BaseKind::adam, s2, hp, x2, g, 0.01);
  }
  CHECK(x1 == x2);
}

TEST_CASE("determinism: identical inputs give bit-identical outputs") {
  BaseHyperParams hp;
  Rng rng(7);
  for (BaseKind kind : {BaseKind::adam, BaseKind::amsgrad, BaseKind::avgrad,
                        BaseKind::yogi, BaseKind::adan, BaseKind::lion,
                        BaseKind::sgd_momentum}) {
    BaseOptState s1(4), s2(4);
    Vec x1(4), x2(4), g(4);
    for (std::size_t i = 0; i < 4; ++i) x1[i] = x2[i] = rng.normal();
    for (int t = 0; t < 50; ++t) {
      for (double& gi : g) gi = rng.normal();
      base_step(kind, s1, hp, x1, g, 0.02);
      base_step(kind, s2, hp, x2, g, 0.02);
    }
    CHECK(x1 == x2);
  }
}

TEST_CASE("avgrad: running average matches an explicit prefix sum over 1e4 steps") {
  BaseHyperParams hp;
  hp.beta2 = 0.97;
  BaseOptState st(2);
  Vec x{0.0, 0.0}, g(2);
  Vec prefix_sum(2, 0.0);
  Rng rng(8);
  for (long t = 1; t <= 10000; ++t) {
    g[0] = rng.normal();
    g[1] = 0.01 * rng.normal();
    base_step(BaseKind::avgrad, st, hp, x, g, 1e-3);
    for (std::size_t i = 0; i < 2; ++i) prefix_sum[i] += st.vbar[i];
    for (std::size_t i = 0; i < 2; ++i) {
      double oracle = prefix_sum[i] / double(t);
      CHECK(std::fabs(st.vavg[i] - oracle) <= 1e-12 * std::max(1.0, oracle));
    }
  }
}

TEST_CASE("amsgrad: vmax is non-decreasing and effective lr non-increasing") {
  BaseHyperParams hp;
  hp.beta1 = 0.9;
  hp.beta2 = 0.99;
  BaseOptState st(6);
  Vec x(6, 0.0), g(6);
  Rng rng(9);
  Schedule sched = Schedule::inv_sqrt(0.1);
  Vec prev_eff, prev_vmax;
  for (long t = 1; t <= 1000; ++t) {
    for (double& gi : g) gi = 3.0 * rng.normal();
    double a = schedule_at(sched, t);
    base_step(BaseKind::amsgrad, st, hp, x, g, a);
    Vec eff = effective_lr(st, a);
    if (!prev_eff.empty()) {
      for (std::size_t i = 0; i < eff.size(); ++i) {
        if (prev_eff[i] > 0.0) CHECK(eff[i] <= prev_eff[i]);
        CHECK(st.vmax[i] >= prev_vmax[i]);
      }
    }
    prev_eff = eff;
    prev_vmax = st.vmax;
  }
}

TEST_CASE("effective_lr: formula and conventions") {
  BaseHyperParams hp;
  BaseOptState st(2);
  Vec x{0.0, 0.0}, g{2.0, 0.0};
  CHECK_THROWS_AS(effective_lr(st, 0.1), std::invalid_argument);  // not stepped
  base_step(BaseKind::adam, st, hp, x, g, 0.1);
  st.v = Vec{4.0, 0.0};
  Vec eff = effective_lr(st, 0.1);
  CHECK(eff[0] == 0.05);
  CHECK(eff[1] == 0.0);  // v == 0 -> 0 by convention
}

TEST_CASE("decoupled weight decay is applied before the update") {
  BaseHyperParams hp;
  hp.beta1 = 0.0;
  hp.beta2 = 0.0;
  hp.eps = 1.0;
  hp.weight_decay = 0.5;
  BaseOptState st(1);
  Vec x{2.0}, g{1.0};
  base_step(BaseKind::adam, st, hp, x, g, 0.1);
  // x <- 2 - 0.5*0.1*2 = 1.9, then m=v=1, x <- 1.9 - 0.1*(1/(1+1)) = 1.85
  CHECK(x[0] == Catch::Approx(1.85).epsilon(1e-15));
}

TEST_CASE("bias correction flag (off by default, smoke when on)") {
  BaseHyperParams hp;
  hp.beta1 = 0.9;
  hp.beta2 = 0.999;
  hp.eps = 0.0;
  hp.bias_correction = true;
  BaseOptState st(1);
  Vec x{0.0}, g{0.5};
  base_step(BaseKind::adam, st, hp, x, g, 0.1);
  // mhat = g, vhat = g^2, so the first step is -alpha*sign(g)
  CHECK(x[0] == Catch::Approx(-0.1).epsilon(1e-12));
}

TEST_CASE("errors: dimension mismatch and non-finite gradient") {
  BaseHyperParams hp;
  BaseOptState st(2);
  Vec x{0.0, 0.0};
  Vec bad{1.0};
  CHECK_THROWS_AS(base_step(BaseKind::adam, st, hp, x, bad, 0.1), std::invalid_argument);
  Vec g{1.0, std::nan("")};
  CHECK_THROWS_AS(base_step(BaseKind::adam, st, hp, x, g, 0.1), std::runtime_error);
  BaseHyperParams badhp;
  badhp.beta2 = 1.0;
  Vec g2{1.0, 1.0};
  CHECK_THROWS_AS(base_step(BaseKind::adam, st, badhp, x, g2, 0.1), std::invalid_argument);
}
