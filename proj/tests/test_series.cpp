#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chainrec/series.hpp"

using namespace chainrec;

TEST_CASE("analytic families decide correctly") {
  SeriesConfig cfg;

  // ratio == 1: terms stay at 1, sum diverges
  auto ones = classify_series([](long) { return 0.0; }, cfg);
  CHECK(ones.verdict == Verdict::Recurrent);
  CHECK(ones.rule == SeriesRule::BoundedBelow);

  // ratio (i+1)/i: the product telescopes to t_n = n+1, diverges
  auto grow = classify_series(
      [](long i) { return std::log((double)(i + 1) / (double)i); }, cfg);
  CHECK(grow.verdict == Verdict::Recurrent);
  CHECK(grow.log_t_final ==
        Catch::Approx(std::log((double)cfg.n_max + 1.0)).margin(1e-7));

  // ratio i/(i+2): telescopes to t_n = 2/((n+1)(n+2)), sum converges to 1
  auto quad = classify_series(
      [](long i) { return std::log((double)i / (double)(i + 2)); }, cfg);
  CHECK(quad.verdict == Verdict::Transient);
  double n = (double)cfg.n_max;
  CHECK(quad.log_t_final ==
        Catch::Approx(std::log(2.0 / ((n + 1.0) * (n + 2.0)))).margin(1e-7));
  CHECK(std::exp(quad.log_sum_final) == Catch::Approx(1.0).epsilon(1e-5));

  // constant 0.999999: converges under the geometric rule
  auto slow = classify_series([](long) { return std::log(0.999999); }, cfg);
  CHECK(slow.verdict == Verdict::Transient);
  CHECK(slow.rule == SeriesRule::GeometricRatio);
}

TEST_CASE("constant ratios away from one") {
  auto rec = classify_series([](long) { return std::log(2.0); });
  CHECK(rec.verdict == Verdict::Recurrent);
  auto tr = classify_series([](long) { return std::log(0.5); });
  CHECK(tr.verdict == Verdict::Transient);
}

TEST_CASE("harmonic boundary stays inconclusive") {
  // ratio i/(i+1): t_n = 1/(n+1); the sum diverges but at the 1/n knife edge
  // no rule may claim it
  auto harm = classify_series(
      [](long i) { return std::log((double)i / (double)(i + 1)); });
  CHECK(harm.verdict == Verdict::Inconclusive);
}

TEST_CASE("polynomial decay both sides of the boundary") {
  // t_n ~ n^{-1/2}: diverges, bounded-below rule
  auto half = classify_series(
      [](long i) { return -0.5 * std::log((double)(i + 1) / (double)i); });
  CHECK(half.verdict == Verdict::Recurrent);
  // t_n ~ n^{-3}: converges
  auto cube = classify_series(
      [](long i) { return -3.0 * std::log((double)(i + 1) / (double)i); });
  CHECK(cube.verdict == Verdict::Transient);
}

TEST_CASE("trace is sampled geometrically with nondecreasing partial sums") {
  SeriesConfig cfg;
  cfg.n_max = 100000;
  auto res = classify_series([](long) { return std::log(0.9999); }, cfg);
  REQUIRE(res.trace.size() > 10);
  CHECK(res.trace.front().n == 1);
  CHECK(res.trace.back().n == cfg.n_max);
  for (size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].n > res.trace[i - 1].n);
    CHECK(res.trace[i].log_sum >= res.trace[i - 1].log_sum);
  }
}

TEST_CASE("determinism") {
  SeriesConfig cfg;
  cfg.n_max = 50000;
  auto f = [](long i) { return 0.001 * std::sin((double)i); };
  auto a = classify_series(f, cfg);
  auto b = classify_series(f, cfg);
  CHECK(a.verdict == b.verdict);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].log_t == b.trace[i].log_t);
    CHECK(a.trace[i].log_sum == b.trace[i].log_sum);
  }
}

TEST_CASE("no overflow for extreme ratios") {
  // log t_n reaches +-7e5 without leaving log space
  auto up = classify_series([](long) { return std::log(2.0); });
  CHECK(std::isfinite(up.log_t_final));
  CHECK(std::isfinite(up.log_sum_final));
  auto down = classify_series([](long) { return std::log(0.5); });
  CHECK(down.log_t_final < -600000.0);
}
