#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "mada/numdiff.hpp"
#include "mada/rng.hpp"
#include "mada/schedule.hpp"
#include "mada/vec.hpp"

using namespace mada;

TEST_CASE("schedule: inv-sqrt") {
  Schedule s = Schedule::inv_sqrt(0.1);
  CHECK(schedule_at(s, 4) == 0.05);
  CHECK(schedule_at(s, 1) == 0.1);
  CHECK_THROWS_AS(schedule_at(s, 0), std::out_of_range);
}

TEST_CASE("schedule: constant") {
  Schedule s = Schedule::constant(3e-4);
  for (long t : {1L, 7L, 100000L}) CHECK(schedule_at(s, t) == 3e-4);
}

TEST_CASE("schedule: cosine warmup hits the documented anchor points") {
  Schedule s = Schedule::cosine_warmup(6e-4, 1.5e-5, 2000, 100000);
  CHECK(schedule_at(s, 1000) == Catch::Approx(3e-4).epsilon(1e-12));  // warmup midpoint
  CHECK(schedule_at(s, 2000) == Catch::Approx(6e-4).epsilon(1e-12));  // peak at warmup end
  CHECK(schedule_at(s, 100000) == Catch::Approx(1.5e-5).margin(1e-18));
  CHECK_THROWS_AS(schedule_at(s, 100001), std::out_of_range);
}

TEST_CASE("schedule: non-increasing where required") {
  Schedule inv = Schedule::inv_sqrt(2.0);
  double prev = schedule_at(inv, 1);
  for (long t = 2; t <= 3000; ++t) {
    double a = schedule_at(inv, t);
    CHECK(a <= prev);
    prev = a;
  }
  Schedule cos = Schedule::cosine_warmup(1e-3, 1e-4, 100, 5000);
  prev = schedule_at(cos, 100);
  for (long t = 101; t <= 5000; ++t) {
    double a = schedule_at(cos, t);
    CHECK(a <= prev);
    CHECK(a >= 1e-4 * (1.0 - 1e-12));
    CHECK(a <= 1e-3 * (1.0 + 1e-12));
    prev = a;
  }
}

TEST_CASE("schedule: invalid construction") {
  CHECK_THROWS_AS(Schedule::constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Schedule::cosine_warmup(1e-3, 1e-4, 500, 500), std::invalid_argument);
}

TEST_CASE("central_diff: quadratics are exact") {
  CHECK(central_diff([](double x) { return x * x; }, 3.0, 1e-5) ==
        Catch::Approx(6.0).margin(1e-8));
  CHECK(central_diff([](double) { return 4.2; }, 100.0, 1e-4) == 0.0);
  CHECK(central_diff([](double x) { return std::sin(x); }, 0.0, 1e-4) ==
        Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("central_diff: degree-<=2 polynomials to 1e-10 relative across h") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    double a = rng.uniform(-0.25, 0.25);
    double b = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform(1.0, 2.0);
    double c = rng.uniform(-1.0, 1.0);
    auto f = [&](double x) { return a + b * x + c * x * x; };
    for (double h : {1e-6, 1e-5, 1e-4, 1e-3}) {
      double d = central_diff(f, 0.0, h);
      CHECK(std::fabs(d - b) / std::fabs(b) <= 1e-10);
    }
  }
}

TEST_CASE("central_diff: errors") {
  CHECK_THROWS_AS(central_diff([](double x) { return x; }, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(central_diff([](double x) { return std::log(x); }, 0.0, 1e-3),
                  std::runtime_error);
}

TEST_CASE("rng: determinism and substream independence") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());

  Rng s1 = Rng(42).substream(1);
  Rng s2 = Rng(42).substream(2);
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    if (s1.next_u64() == s2.next_u64()) ++agree;
  }
  CHECK(agree == 0);
}

TEST_CASE("rng: chi-square uniformity per substream") {
  // df = 99, p = 0.001 critical value
  const double critical = 148.230;
  for (std::uint64_t label : {0ULL, 1ULL, 17ULL, 123456789ULL}) {
    Rng rng = Rng(2024).substream(label);
    const int bins = 100;
    const int n = 100000;
    std::vector<int> count(bins, 0);
    for (int i = 0; i < n; ++i) {
      double u = rng.uniform01();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      count[std::size_t(u * bins)] += 1;
    }
    double expected = double(n) / bins;
    double chi2 = 0.0;
    for (int cnt : count) {
      double d = cnt - expected;
      chi2 += d * d / expected;
    }
    INFO("label " << label << " chi2 " << chi2);
    CHECK(chi2 < critical);
  }
}

TEST_CASE("rng: normal moments at desk scale") {
  Rng rng = Rng(5).substream(9);
  const int n = 200000;
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    mean += z;
    var += z * z;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("vec helpers") {
  Vec a{1.0, 2.0}, b{3.0, -1.0};
  CHECK(dot(a, b) == 1.0);
  CHECK(norm2(Vec{3.0, 4.0}) == 5.0);
  CHECK(sign0(0.0) == 0.0);
  CHECK(sign0(-2.5) == -1.0);
  CHECK(sign0(1e-300) == 1.0);
  CHECK_THROWS_AS(dot(a, Vec{1.0}), std::invalid_argument);
  CHECK_FALSE(all_finite(Vec{1.0, std::nan("")}));
}
