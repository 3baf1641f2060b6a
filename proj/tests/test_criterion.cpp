#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "chainrec/criterion.hpp"

using namespace chainrec;

TEST_CASE("drift rates on the banded worked examples") {
  // first example, i = 3: e- = p_{3,2} = 7/12, e+ = p_{3,4} + 2 p_{2,4} = 7/12
  ChainSpec ex1 = reduce_lazy(make_builtin("sec3-ex1"));
  DriftRates d = drift_rates(ex1, 3);
  CHECK(d.e_minus == Rational(7, 12));
  CHECK(d.e_plus == Rational(7, 12));
  CHECK(d.trunc_error == 0.0);

  // second example, i = 3: e+ = 2/12 + 2 * 3/12 = 8/12
  ChainSpec ex2 = reduce_lazy(make_builtin("sec3-ex2"));
  DriftRates d2 = drift_rates(ex2, 3);
  CHECK(d2.e_minus == Rational(7, 12));
  CHECK(d2.e_plus == Rational(8, 12));

  // pure birth-death input: e- = q, e+ = p
  ChainSpec bd = make_bd_spec(Rational(1, 3));
  DriftRates db = drift_rates(bd, 4);
  CHECK(db.e_minus == Rational(1, 3));
  CHECK(db.e_plus == Rational(2, 3));
}

TEST_CASE("associated birth-death chains match the worked reductions") {
  BirthDeathChain a = associated_birth_death(reduce_lazy(make_builtin("sec3-ex1")));
  CHECK(a.q_at(1) == Rational(7, 10));
  CHECK(a.p_at(1) == Rational(3, 10));
  for (long n = 2; n <= 12; ++n) {
    CHECK(a.q_at(n) == Rational(1, 2));
    CHECK(a.p_at(n) == Rational(1, 2));
  }

  BirthDeathChain b = associated_birth_death(reduce_lazy(make_builtin("sec3-ex2")));
  CHECK(b.q_at(1) == Rational(7, 9));
  CHECK(b.p_at(1) == Rational(2, 9));
  for (long n = 2; n <= 12; ++n) {
    CHECK(b.q_at(n) == Rational(7, 15));
    CHECK(b.p_at(n) == Rational(8, 15));
  }

  // pure birth-death input comes back unchanged
  BirthDeathChain c = associated_birth_death(make_bd_spec(Rational(2, 5)));
  for (long n = 1; n <= 6; ++n) CHECK(c.q_at(n) == Rational(2, 5));

  // ratios q/p equal e-/e+ exactly
  ChainSpec red = reduce_lazy(make_builtin("sec3-ex2"));
  for (long n = 1; n <= 6; ++n) {
    DriftRates d = drift_rates(red, n);
    CHECK(b.q_at(n) / b.p_at(n) == d.e_minus / d.e_plus);
  }
}

TEST_CASE("classify_chain on the worked examples") {
  Classification c1 = classify_chain(make_builtin("sec3-ex1"));
  CHECK(c1.verdict == Verdict::Recurrent);
  CHECK(c1.validation.connected_domain);

  Classification c2 = classify_chain(make_builtin("sec3-ex2"));
  CHECK(c2.verdict == Verdict::Transient);

  Classification c3 = classify_chain(
      make_builtin("sec4-counter-recurrent", {{"eps", Rational(1, 20)}}));
  CHECK(c3.verdict == Verdict::AssumptionViolated);
  REQUIRE(c3.series_verdict.has_value());
  // the raw series converges here even though the chain is recurrent: the
  // criterion genuinely fails without the connected-domain hypothesis
  CHECK(*c3.series_verdict == Verdict::Transient);

  Classification c4 = classify_chain(
      make_builtin("sec4-counter-transient", {{"eps", Rational(1, 20)}}));
  CHECK(c4.verdict == Verdict::AssumptionViolated);
  REQUIRE(c4.series_verdict.has_value());
  CHECK(*c4.series_verdict == Verdict::Recurrent);
}

TEST_CASE("twin-birth and one-or-three-birth chains track the plain chain") {
  struct Case {
    long lam, mu;
    Verdict expect;
  };
  for (const Case& cs : {Case{1, 2, Verdict::Recurrent},
                         Case{1, 1, Verdict::Recurrent},
                         Case{2, 1, Verdict::Transient}}) {
    std::map<std::string, Rational> params{{"lambda", Rational(cs.lam)},
                                           {"mu", Rational(cs.mu)}};
    auto bd_verdict =
        bd_classify(associated_birth_death(make_builtin("ex1-A", params)))
            .verdict;
    CHECK(bd_verdict == cs.expect);

    Classification b = classify_chain(make_builtin("ex1-B", params));
    REQUIRE(b.series_verdict.has_value());
    CHECK(*b.series_verdict == cs.expect);
    CHECK_FALSE(b.validation.connected_domain);  // twin jumps skip a state

    Classification c = classify_chain(make_builtin("ex2-C", params));
    REQUIRE(c.series_verdict.has_value());
    CHECK(*c.series_verdict == cs.expect);
  }
}

TEST_CASE("drift ratios of the twin chain equal mu/lambda beyond the head") {
  ChainSpec b = make_builtin("ex1-B", {{"lambda", Rational(1)}, {"mu", Rational(2)}});
  DriftRatioTable t = DriftRatioTable::build(b);
  for (long i = 2; i <= 10; ++i) {
    const DriftRates& d = t.at(i);
    CHECK(d.e_minus / d.e_plus == Rational(2));  // mu/lambda
  }
}

TEST_CASE("drift rates with a geometric upward tail") {
  Stencil s;
  s.entries = {{-1, Rational(9, 20)}, {-2, Rational(1, 4)}};
  s.has_geo_tail = true;
  s.geo_c = Rational(3, 10);
  s.geo_r = Rational(1, 2);
  Row r1 = {{0, Rational(7, 10)}, {2, Rational(3, 20)}, {3, Rational(3, 40)}, {4, Rational(3, 40)}};
  ChainSpec geo = make_spec({{{1, Rational(1)}}, r1}, {s}, {}, "geo");

  DriftRates d = drift_rates(geo, 60, 1e-12);
  // downward side is an exact finite sum: 9/20 + 2 * 1/4 = 19/20
  CHECK(d.e_minus == Rational(19, 20));
  // upward side converges to sum_l l (3/10) 2^{-l} = 3/5; truncation bounded
  CHECK(d.trunc_error > 0.0);
  CHECK(d.trunc_error <= 1e-12);
  CHECK(std::abs(d.e_plus.to_double() - 0.6) < 1e-11);

  // stabilized cycle exists and the chain classifies recurrent
  DriftRatioTable t = DriftRatioTable::build(geo);
  CHECK(t.cycle_length() == 1);
  Classification cls = classify_chain(geo);
  CHECK(cls.verdict == Verdict::Recurrent);
}

TEST_CASE("lazy-scaling invariance on random matrices") {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> num(1, 9);
  for (int rep = 0; rep < 20; ++rep) {
    // random birth-death ratios and random c_i in [1/5, 1]
    RationalSeq q, c;
    for (int i = 0; i < 4; ++i) q.head.push_back(Rational(num(rng), 10));
    q.cycle = {Rational(num(rng), 10)};
    for (int i = 0; i < 3; ++i) c.head.push_back(Rational(num(rng) + 1, 10));
    c.cycle = {Rational(num(rng) + 1, 10)};
    ChainSpec lazy = make_lazy_bd_spec(q, c);
    ChainSpec plain = make_bd_spec(q);
    Classification a = classify_chain(lazy);
    Classification b = classify_chain(plain);
    CHECK(a.verdict == b.verdict);
    CHECK(a.validation.connected_domain);
  }
}

TEST_CASE("drift rates of the period-2 counterexample, by hand") {
  // eps = 1/20. Even rows: {-2: 1/3-e, -1: e, +1: e, +2: 2/3-e};
  // odd rows: {-2: 1/2+e, +2: 1/2-e}; row 1: {0: e, 2: 1-e}.
  ChainSpec c4 = make_builtin("sec4-counter-recurrent", {{"eps", Rational(1, 20)}});
  DriftRates d1 = drift_rates(c4, 1);
  CHECK(d1.e_minus == Rational(1, 20) + Rational(2) * Rational(17, 60));  // 37/60
  CHECK(d1.e_plus == Rational(19, 20));
  DriftRates d2 = drift_rates(c4, 2);
  CHECK(d2.e_minus == Rational(23, 20));
  CHECK(d2.e_plus == Rational(1, 20));
  DriftRates d3 = drift_rates(c4, 3);
  CHECK(d3.e_minus == Rational(17, 30));
  CHECK(d3.e_plus == Rational(37, 30));
  DriftRates d4 = drift_rates(c4, 4);
  CHECK(d4.e_minus == Rational(23, 20));
  CHECK(d4.e_plus == Rational(19, 20));
  // the cycle alternates below/above 1, with a convergent per-period product
  double per_period = (d3.e_minus / d3.e_plus).to_double() *
                      (d4.e_minus / d4.e_plus).to_double();
  CHECK(per_period < 1.0);
}

TEST_CASE("drift table stabilizes onto an exact periodic cycle") {
  ChainSpec c4 = make_builtin("sec4-counter-transient", {{"eps", Rational(1, 20)}});
  DriftRatioTable t = DriftRatioTable::build(c4);
  CHECK(t.cycle_length() == 2);
  const DriftRates& a = t.at(t.stable_from());
  const DriftRates& b = t.at(t.stable_from() + 2);
  CHECK(a.e_minus == b.e_minus);
  CHECK(a.e_plus == b.e_plus);
}

TEST_CASE("pre/post-reduction drift discrepancies are surfaced") {
  // a chain with jumps {-1,+1,+2} and state-dependent diagonal mass: the
  // drift ratios before and after reduction genuinely differ
  Stencil s;
  s.entries = {{-1, Rational(4, 12)},
               {0, Rational(3, 12)},
               {1, Rational(3, 12)},
               {2, Rational(2, 12)}};
  Stencil t;
  t.entries = {{-1, Rational(6, 12)},
               {0, Rational(1, 12)},
               {1, Rational(3, 12)},
               {2, Rational(2, 12)}};
  ChainSpec spec = make_spec({{{1, Rational(1)}}}, {s, t});
  Classification cls = classify_chain(spec);
  bool found = false;
  for (const auto& n : cls.notes)
    if (n.find("differ before/after lazy reduction") != std::string::npos)
      found = true;
  CHECK(found);
}
