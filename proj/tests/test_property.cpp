#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "chainrec/criterion.hpp"
#include "chainrec/oracle.hpp"
#include "chainrec/verifier.hpp"

using namespace chainrec;

namespace {

// Random spec generator: period 1..3 stencils, jumps within [-3, +3],
// optionally a geometric upward tail with r = 1/2, two head rows.
ChainSpec random_spec(std::mt19937& rng) {
  std::uniform_int_distribution<int> period_d(1, 3);
  std::uniform_int_distribution<int> w(1, 9);
  std::uniform_int_distribution<int> coin(0, 1);
  const int k = period_d(rng);
  const bool geo = coin(rng) == 1;

  std::vector<Stencil> tail;
  for (int m = 0; m < k; ++m) {
    // weights for offsets -3..-1 and +1..+3 (some zeroed), plus optional tail
    long wm3 = coin(rng) ? w(rng) : 0, wm2 = w(rng), wm1 = w(rng);
    long wp1 = w(rng), wp2 = coin(rng) ? w(rng) : 0, wp3 = 0;
    long geo_w = geo ? w(rng) : 0;
    long tot = wm3 + wm2 + wm1 + wp1 + wp2 + wp3 + geo_w;
    Stencil s;
    if (wm3) s.entries.emplace_back(-3, Rational(wm3, tot));
    s.entries.emplace_back(-2, Rational(wm2, tot));
    s.entries.emplace_back(-1, Rational(wm1, tot));
    s.entries.emplace_back(1, Rational(wp1, tot));
    if (wp2) s.entries.emplace_back(2, Rational(wp2, tot));
    if (geo) {
      // entries c r^d for d > 2 with r = 1/2: mass c r^3/(1-r) = geo_w/tot
      // requires d_max = 2, so park a zero entry at +2 when absent
      if (!wp2) s.entries.emplace_back(2, Rational(0));
      s.has_geo_tail = true;
      s.geo_r = Rational(1, 2);
      s.geo_c = Rational(geo_w, tot) * Rational(4);  // c/8 * 2 = mass
    }
    tail.push_back(std::move(s));
  }
  std::vector<Row> head;
  head.push_back({{1, Rational(1)}});
  head.push_back({{0, Rational(1, 2)}, {2, Rational(1, 4)}, {3, Rational(1, 4)}});
  head.push_back({{0, Rational(1, 3)}, {1, Rational(1, 3)}, {3, Rational(1, 3)}});
  return make_spec(std::move(head), std::move(tail));
}

}  // namespace

TEST_CASE("randomized specs: rows, drift table and classification cohere") {
  std::mt19937 rng(20260809);
  SeriesConfig quick;
  quick.n_max = 20000;
  for (int rep = 0; rep < 40; ++rep) {
    ChainSpec spec = random_spec(rng);

    // rows sum to one within the materialization tolerance
    for (long i = 0; i < 12; ++i) {
      double total = 0.0;
      for (const auto& [j, p] : row(spec, i)) total += p.to_double();
      REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
    }

    // drift table stabilizes and matches a direct recomputation
    DriftRatioTable t = DriftRatioTable::build(spec);
    for (long i = 1; i <= t.stable_from() + 2 * t.cycle_length(); ++i) {
      DriftRates direct = drift_rates(spec, i);
      REQUIRE(t.at(i).e_minus == direct.e_minus);
      REQUIRE(t.at(i).e_plus == direct.e_plus);
    }

    // associated chain is a genuine probability chain with exact ratios
    BirthDeathChain bd = associated_birth_death(spec);
    for (long i = 1; i <= 8; ++i) {
      REQUIRE(bd.q_at(i) > Rational(0));
      REQUIRE(bd.q_at(i) < Rational(1));
      REQUIRE(bd.q_at(i) / bd.p_at(i) ==
              drift_rates(spec, i).e_minus / drift_rates(spec, i).e_plus);
    }

    // classification is deterministic
    ClassifyConfig cfg;
    cfg.series = quick;
    Classification a = classify_chain(spec, cfg);
    Classification b = classify_chain(spec, cfg);
    REQUIRE(a.verdict == b.verdict);
    REQUIRE(a.test_fired == b.test_fired);

    // the truncated stationary solve holds balance to the guard
    std::vector<double> pi = stationary_truncated(spec, 60);
    double sum = 0.0;
    bool nonneg = true;
    for (double x : pi) {
      sum += x;
      if (x < -1e-12) nonneg = false;
    }
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-10));
    REQUIRE(nonneg);
  }
}

TEST_CASE("randomized specs: ruin curve monotone and within [0,1]") {
  std::mt19937 rng(99991);
  for (int rep = 0; rep < 15; ++rep) {
    ChainSpec spec = random_spec(rng);
    double prev = 0.0;
    for (long L : {5L, 25L, 125L, 625L}) {
      double h = first_passage_solve(spec, L);
      REQUIRE(h >= prev - 1e-12);
      REQUIRE(h >= 0.0);
      REQUIRE(h <= 1.0);
      prev = h;
    }
  }
}

TEST_CASE("randomized specs: criterion agrees with the oracle away from the boundary") {
  // filter to chains whose asymptotic per-cycle drift ratio is clearly away
  // from 1, where both methods must resolve and must agree
  std::mt19937 rng(31337);
  int checked = 0;
  for (int rep = 0; rep < 60 && checked < 12; ++rep) {
    ChainSpec spec = random_spec(rng);
    DriftRatioTable t = DriftRatioTable::build(spec);
    double log_cycle = 0.0;
    for (long i = t.stable_from(); i < t.stable_from() + t.cycle_length(); ++i)
      log_cycle += t.log_ratio(i);
    if (std::abs(log_cycle) < 0.2 * t.cycle_length()) continue;  // near-critical
    Classification cls = classify_chain(spec);
    if (cls.verdict == Verdict::AssumptionViolated) continue;  // geo-free gaps
    OracleReport orc = oracle_classify(spec, {100, 1000, 10000});
    ++checked;
    REQUIRE(cls.verdict == orc.verdict);
  }
  REQUIRE(checked >= 5);
}
