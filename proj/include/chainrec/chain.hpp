#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chainrec/rational.hpp"

namespace chainrec {

using RowEntry = std::pair<long, Rational>;  // (target state, probability)
using Row = std::vector<RowEntry>;

// One repeating row shape applied at every state of its residue class.
// Explicit entries are (offset, probability) with target = state + offset.
// An optional geometric tail adds entries (d, c * r^d) for every offset
// d > max(0, largest explicit offset), giving rows with unbounded upward
// support while keeping the representation finite.
struct Stencil {
  std::vector<std::pair<long, Rational>> entries;  // sorted by offset
  bool has_geo_tail = false;
  Rational geo_c, geo_r;

  long tail_start() const {
    long m = 0;
    for (const auto& [d, p] : entries) m = std::max(m, d);
    return m + 1;
  }
  long max_down() const {
    long m = 0;
    for (const auto& [d, p] : entries) m = std::max(m, -d);
    return m;
  }
  long max_up_explicit() const {
    long m = 0;
    for (const auto& [d, p] : entries) m = std::max(m, d);
    return m;
  }
  // Exact total mass, geometric tail included in closed form.
  Rational mass() const {
    Rational s(0);
    for (const auto& [d, p] : entries) s += p;
    if (has_geo_tail)
      s += geo_c * geo_r.pow(tail_start()) / (Rational(1) - geo_r);
    return s;
  }
  Rational at_offset(long d) const {
    auto it = std::lower_bound(
        entries.begin(), entries.end(), d,
        [](const auto& e, long v) { return e.first < v; });
    if (it != entries.end() && it->first == d) return it->second;
    if (has_geo_tail && d >= tail_start()) {
      try {
        return geo_c * geo_r.pow(d);
      } catch (const rational_overflow&) {
        // deep tail entry whose exact power no longer fits; fall back to the
        // nearest representable rational of the double value
        double v = geo_c.to_double() *
                   std::pow(geo_r.to_double(), static_cast<double>(d));
        return rational_from_double(v, 1000000000000000000LL);
      }
    }
    return Rational(0);
  }
};

// Finite description of a countable-state transition matrix: explicit head
// rows for states 0..i0-1, then a cyclic list of stencils for states >= i0
// (state i uses tail[(i - i0) % period]). params carries named scalars for
// builtin families.
struct ChainSpec {
  std::vector<Row> head_rows;
  std::vector<Stencil> tail;
  std::map<std::string, Rational> params;
  std::string name;

  long i0() const { return static_cast<long>(head_rows.size()); }
  long period() const { return static_cast<long>(tail.size()); }
  bool finite() const { return tail.empty(); }

  const Stencil& stencil_at(long i) const {
    return tail[static_cast<size_t>((i - i0()) % period())];
  }

  // Largest downward jump over all rows.
  long max_down_span() const {
    long m = 0;
    for (long i = 0; i < i0(); ++i)
      for (const auto& [j, p] : head_rows[i]) m = std::max(m, i - j);
    for (const auto& s : tail) m = std::max(m, s.max_down());
    return m;
  }
  long max_up_explicit_span() const {
    long m = 0;
    for (long i = 0; i < i0(); ++i)
      for (const auto& [j, p] : head_rows[i]) m = std::max(m, j - i);
    for (const auto& s : tail) m = std::max(m, s.max_up_explicit());
    return m;
  }
  bool has_geo_tail() const {
    for (const auto& s : tail)
      if (s.has_geo_tail) return true;
    return false;
  }
  long head_max_target() const {
    long m = 0;
    for (const auto& row : head_rows)
      for (const auto& [j, p] : row) m = std::max(m, j);
    return m;
  }

  // Exact single-entry lookup p_{i,j}.
  Rational prob(long i, long j) const {
    if (i < 0 || j < 0) return Rational(0);
    if (i < i0()) {
      const Row& r = head_rows[i];
      auto it = std::lower_bound(r.begin(), r.end(), j,
                                 [](const RowEntry& e, long v) { return e.first < v; });
      if (it != r.end() && it->first == j) return it->second;
      return Rational(0);
    }
    if (finite())
      throw std::out_of_range("prob: state " + std::to_string(i) +
                              " beyond finite spec");
    return stencil_at(i).at_offset(j - i);
  }
};

struct MaterializedRow {
  Row entries;          // sorted by target, all > 0
  double trunc_error;   // mass omitted from an unbounded geometric tail
};

inline constexpr double kRowTailTol = 1e-14;

// Materializes row i. Geometric tails are expanded until the remaining mass
// drops below kRowTailTol; the omitted mass is reported, never renormalized.
inline MaterializedRow materialize_row(const ChainSpec& spec, long i) {
  if (i < 0) throw std::invalid_argument("row: negative state");
  MaterializedRow out;
  out.trunc_error = 0.0;
  if (i < spec.i0()) {
    out.entries = spec.head_rows[i];
    return out;
  }
  if (spec.finite())
    throw std::out_of_range("row: state " + std::to_string(i) +
                            " beyond finite spec");
  const Stencil& s = spec.stencil_at(i);
  for (const auto& [d, p] : s.entries) {
    long j = i + d;
    if (j < 0)
      throw std::invalid_argument(
          "row: stencil at state " + std::to_string(i) +
          " reaches negative state (i0 too small)");
    out.entries.emplace_back(j, p);
  }
  if (s.has_geo_tail) {
    const double c = s.geo_c.to_double();
    const double r = s.geo_r.to_double();
    long d = s.tail_start();
    double remaining = c * std::pow(r, (double)d) / (1.0 - r);
    while (remaining >= kRowTailTol) {
      out.entries.emplace_back(i + d, s.at_offset(d));
      remaining *= r;
      ++d;
    }
    out.trunc_error = remaining;
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const RowEntry& a, const RowEntry& b) { return a.first < b.first; });
  return out;
}

inline Row row(const ChainSpec& spec, long i) {
  return materialize_row(spec, i).entries;
}

// --- construction-time checks -------------------------------------------

inline void validate_row_shape(const Row& r, long i) {
  Rational sum(0);
  long prev = -1;
  for (const auto& [j, p] : r) {
    if (j < 0)
      throw std::invalid_argument("row " + std::to_string(i) +
                                  ": negative target state");
    if (j <= prev)
      throw std::invalid_argument("row " + std::to_string(i) +
                                  ": targets not strictly increasing");
    prev = j;
    if (p.is_negative() || p > Rational(1))
      throw std::invalid_argument("row " + std::to_string(i) +
                                  ": probability outside [0,1]");
    sum += p;
  }
  if (std::abs((sum - Rational(1)).to_double()) > 1e-12)
    throw std::invalid_argument("row " + std::to_string(i) +
                                ": probabilities sum to " + sum.str());
}

inline ChainSpec make_spec(std::vector<Row> head_rows, std::vector<Stencil> tail,
                           std::map<std::string, Rational> params = {},
                           std::string name = "") {
  ChainSpec spec;
  spec.head_rows = std::move(head_rows);
  spec.tail = std::move(tail);
  spec.params = std::move(params);
  spec.name = std::move(name);

  for (long i = 0; i < spec.i0(); ++i) {
    std::sort(spec.head_rows[i].begin(), spec.head_rows[i].end(),
              [](const RowEntry& a, const RowEntry& b) { return a.first < b.first; });
    validate_row_shape(spec.head_rows[i], i);
  }
  for (long m = 0; m < spec.period(); ++m) {
    Stencil& s = spec.tail[m];
    std::sort(s.entries.begin(), s.entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    bool has_neg = false, has_pos = s.has_geo_tail;
    long prev = std::numeric_limits<long>::min();
    for (const auto& [d, p] : s.entries) {
      if (d == prev)
        throw std::invalid_argument("stencil: duplicate offset " + std::to_string(d));
      prev = d;
      if (p.is_negative() || p > Rational(1))
        throw std::invalid_argument("stencil: probability outside [0,1]");
      if (d < 0 && !p.is_zero()) has_neg = true;
      if (d > 0 && !p.is_zero()) has_pos = true;
    }
    if (!has_neg || !has_pos)
      throw std::invalid_argument(
          "stencil: needs at least one downward and one upward offset");
    if (s.has_geo_tail &&
        !(s.geo_r > Rational(0) && s.geo_r < Rational(1) && s.geo_c > Rational(0)))
      throw std::invalid_argument("stencil: geometric tail needs c > 0, 0 < r < 1");
    if (std::abs((s.mass() - Rational(1)).to_double()) > 1e-12)
      throw std::invalid_argument("stencil " + std::to_string(m) +
                                  ": mass sums to " + s.mass().str());
    // first application of this stencil is at state i0 + m
    if (spec.i0() + m - s.max_down() < 0)
      throw std::invalid_argument(
          "stencil " + std::to_string(m) +
          ": reaches below state 0 at its first application (i0 too small)");
  }
  if (spec.head_rows.empty() && spec.tail.empty())
    throw std::invalid_argument("spec: empty");
  return spec;
}

// --- validation against the classification hypotheses ---------------------

struct ValidationReport {
  bool stochastic = true;
  double worst_row_sum_deviation = 0.0;

  bool connected_domain = true;
  std::vector<std::pair<long, long>> witnesses;  // (i, k) with a zero gap
  std::vector<long> j1, j2;  // inferred bounds for checked i (index i-1); -1 = unbounded above

  double lazy_epsilon = 1.0;     // inf over checked i of 1 - p_{i,i}
  bool lazy_ok = true;           // lazy_epsilon > configured eps
  double e0_plus = 0.0;          // sum_j j p_{0,j}
  bool e0_plus_finite = true;
  long checked_range = 0;

  bool ok() const { return stochastic && connected_domain && lazy_ok && e0_plus_finite; }
};

// Checks stochasticity, the connected-domain property (contiguous strictly
// positive support below and above the diagonal) and the lazy
// hypothesis inf_i (1 - p_{i,i}) > eps for rows 0..depth. Beyond the head
// rows one stencil period certifies the rest by shift invariance;
// checked_range records how far the certificate actually reaches.
inline ValidationReport validate(const ChainSpec& spec, double eps = 1e-6,
                                 long depth = 0) {
  ValidationReport rep;
  long min_depth = spec.i0() + std::max<long>(spec.period(), 1);
  if (depth <= 0) depth = std::max<long>(min_depth, 8);
  depth = std::max(depth, min_depth);
  if (spec.finite()) depth = spec.i0() - 1;
  rep.checked_range = depth;

  for (long i = 0; i <= depth; ++i) {
    MaterializedRow mr = materialize_row(spec, i);
    // stochastic: exact mass incl. geometric closed form
    Rational mass(0);
    bool geo = false;
    if (i >= spec.i0()) {
      mass = spec.stencil_at(i).mass();
      geo = spec.stencil_at(i).has_geo_tail;
    } else {
      for (const auto& [j, p] : mr.entries) mass += p;
    }
    double dev = std::abs((mass - Rational(1)).to_double());
    rep.worst_row_sum_deviation = std::max(rep.worst_row_sum_deviation, dev);
    if (dev > 1e-12) rep.stochastic = false;

    double pii = spec.prob(i, i).to_double();
    rep.lazy_epsilon = std::min(rep.lazy_epsilon, 1.0 - pii);

    if (i == 0) {
      double e0 = 0.0;
      for (const auto& [j, p] : mr.entries) e0 += (double)j * p.to_double();
      rep.e0_plus = e0;
      continue;  // connected-domain property constrains rows i >= 1 only
    }

    long lo = std::numeric_limits<long>::max(), hi = -1;
    for (const auto& [j, p] : mr.entries) {
      if (p.is_zero() || j == i) continue;
      lo = std::min(lo, j);
      hi = std::max(hi, j);
    }
    bool unbounded_up = geo;
    rep.j1.push_back(lo == std::numeric_limits<long>::max() ? -1 : lo);
    rep.j2.push_back(unbounded_up ? -1 : hi);

    auto add_witness = [&](long k) {
      rep.connected_domain = false;
      if (rep.witnesses.size() < 16) rep.witnesses.emplace_back(i, k);
    };
    if (lo > i - 1 || hi < i + 1) {
      // one side of the diagonal has no support at all
      if (lo > i - 1) add_witness(i - 1);
      if (hi < i + 1) add_witness(i + 1);
      continue;
    }
    for (long k = lo; k <= i - 1; ++k)
      if (spec.prob(i, k).is_zero()) add_witness(k);
    long top = unbounded_up ? std::max(hi, i + 1) : hi;
    for (long k = i + 1; k <= top; ++k)
      if (spec.prob(i, k).is_zero()) add_witness(k);
  }
  rep.lazy_ok = rep.lazy_epsilon > eps;
  rep.e0_plus_finite = std::isfinite(rep.e0_plus);
  return rep;
}

// Removes diagonal mass and renormalizes each row by 1/(1 - p_{i,i}),
// i.e. passes to the law conditional on the state changing. Exact in
// rational arithmetic; off-diagonal ratios are preserved.
inline ChainSpec reduce_lazy(const ChainSpec& spec) {
  ChainSpec out = spec;
  for (long i = 0; i < out.i0(); ++i) {
    Row& r = out.head_rows[i];
    Rational pii(0);
    for (const auto& [j, p] : r)
      if (j == i) pii = p;
    if (pii.is_zero()) continue;
    if (pii == Rational(1))
      throw std::invalid_argument("reduce_lazy: state " + std::to_string(i) +
                                  " is absorbing");
    Rational scale = Rational(1) / (Rational(1) - pii);
    Row nr;
    for (const auto& [j, p] : r)
      if (j != i) nr.emplace_back(j, p * scale);
    r = std::move(nr);
  }
  for (auto& s : out.tail) {
    Rational p0(0);
    for (const auto& [d, p] : s.entries)
      if (d == 0) p0 = p;
    if (p0.is_zero()) continue;
    if (p0 == Rational(1))
      throw std::invalid_argument("reduce_lazy: absorbing stencil state");
    Rational scale = Rational(1) / (Rational(1) - p0);
    std::vector<std::pair<long, Rational>> ne;
    for (const auto& [d, p] : s.entries)
      if (d != 0) ne.emplace_back(d, p * scale);
    s.entries = std::move(ne);
    if (s.has_geo_tail) s.geo_c *= scale;
  }
  return out;
}

// Eventually-cyclic sequence of rationals indexed from 1: explicit head
// values, then the cycle repeats forever.
struct RationalSeq {
  std::vector<Rational> head;
  std::vector<Rational> cycle;  // nonempty

  Rational at(long i) const {
    if (i < 1) throw std::invalid_argument("RationalSeq: index < 1");
    if (i <= (long)head.size()) return head[i - 1];
    if (cycle.empty()) throw std::logic_error("RationalSeq: empty cycle");
    return cycle[(i - 1 - head.size()) % cycle.size()];
  }
};

// --- builtin chain families ----------------------------------------------

// Plain birth-death rows: q at -1, p at +1; row 0 jumps to 1.
inline ChainSpec make_bd_spec(const RationalSeq& q, std::string name = "bd") {
  std::vector<Row> head;
  head.push_back({{1, Rational(1)}});
  for (long i = 1; i <= (long)q.head.size(); ++i)
    head.push_back({{i - 1, q.at(i)}, {i + 1, Rational(1) - q.at(i)}});
  std::vector<Stencil> tail;
  for (size_t m = 0; m < q.cycle.size(); ++m) {
    Stencil s;
    s.entries = {{-1, q.cycle[m]}, {1, Rational(1) - q.cycle[m]}};
    tail.push_back(s);
  }
  return make_spec(std::move(head), std::move(tail), {}, std::move(name));
}

inline ChainSpec make_bd_spec(const Rational& q, std::string name = "bd") {
  RationalSeq seq;
  seq.cycle = {q};
  return make_bd_spec(seq, std::move(name));
}

// Lazy birth-death rows (matrix with diagonal): c_i q at -1, 1-c_i on the
// diagonal, c_i p at +1. reduce_lazy recovers the plain chain exactly.
inline ChainSpec make_lazy_bd_spec(const RationalSeq& q, const RationalSeq& c,
                                   std::string name = "lazy-bd") {
  std::vector<Row> head;
  head.push_back({{1, Rational(1)}});
  long nh = static_cast<long>(std::max(q.head.size(), c.head.size()));
  for (long i = 1; i <= nh; ++i) {
    Rational qi = q.at(i), ci = c.at(i);
    head.push_back({{i - 1, ci * qi},
                    {i, Rational(1) - ci},
                    {i + 1, ci * (Rational(1) - qi)}});
  }
  long k = std::lcm((long)q.cycle.size(), (long)c.cycle.size());
  std::vector<Stencil> tail;
  for (long m = 0; m < k; ++m) {
    long i = nh + 1 + m;
    Rational qi = q.at(i), ci = c.at(i);
    Stencil s;
    s.entries = {{-1, ci * qi}, {0, Rational(1) - ci}, {1, ci * (Rational(1) - qi)}};
    tail.push_back(s);
  }
  return make_spec(std::move(head), std::move(tail), {}, std::move(name));
}

namespace detail {
inline Rational get_param(const std::map<std::string, Rational>& params,
                          const std::string& key, const Rational& dflt) {
  auto it = params.find(key);
  return it == params.end() ? dflt : it->second;
}
}  // namespace detail

// Named chains from the worked examples. sec3-*: banded chains with jumps
// {-1,+1,+2}. sec4-*: the period-2 counterexamples whose states do not form
// a connected domain (parameter eps). ex1-A/ex1-B: birth-death vs twin-birth
// chains, ex2-C: one-or-three-births chain (parameters lambda, mu); the
// regeneration row of ex1-B jumps 0 -> 2 and of ex2-C jumps 0 -> {1,3}, so
// the embedded chains match the processes they describe.
inline ChainSpec make_builtin(const std::string& name,
                              std::map<std::string, Rational> params = {}) {
  using detail::get_param;
  if (name == "sec3-ex1" || name == "sec3-ex2") {
    Rational up1 = name == "sec3-ex1" ? Rational(3, 12) : Rational(2, 12);
    Rational up2 = name == "sec3-ex1" ? Rational(2, 12) : Rational(3, 12);
    Stencil s;
    s.entries = {{-1, Rational(7, 12)}, {1, up1}, {2, up2}};
    return make_spec({{{1, Rational(1)}}}, {s}, std::move(params), name);
  }
  if (name == "sec4-counter-recurrent" || name == "sec4-counter-transient") {
    Rational e = get_param(params, "eps", Rational(1, 20));
    params["eps"] = e;
    bool rec = name == "sec4-counter-recurrent";
    Rational third(1, 3), half(1, 2), one(1);
    Row r0 = {{1, one}};
    Row r1 = rec ? Row{{0, e}, {2, one - e}} : Row{{0, one - e}, {2, e}};
    Stencil even, odd;
    if (rec) {
      even.entries = {{-2, third - e}, {-1, e}, {1, e}, {2, Rational(2, 3) - e}};
      odd.entries = {{-2, half + e}, {2, half - e}};
    } else {
      even.entries = {{-2, Rational(2, 3) - e}, {-1, e}, {1, e}, {2, third - e}};
      odd.entries = {{-2, half - e}, {2, half + e}};
    }
    return make_spec({r0, r1}, {even, odd}, std::move(params), name);
  }
  if (name == "ex1-A" || name == "ex1-B" || name == "ex2-C") {
    Rational lam = get_param(params, "lambda", Rational(1));
    Rational mu = get_param(params, "mu", Rational(2));
    params["lambda"] = lam;
    params["mu"] = mu;
    if (name == "ex1-A") {
      RationalSeq q;
      q.cycle = {mu / (lam + mu)};
      ChainSpec spec = make_bd_spec(q, name);
      spec.params = std::move(params);
      return spec;
    }
    Rational cq = Rational(2) * mu / (lam + Rational(2) * mu);
    if (name == "ex1-B") {
      Stencil s;
      s.entries = {{-1, cq}, {2, lam / (lam + Rational(2) * mu)}};
      return make_spec({{{2, Rational(1)}}}, {s}, std::move(params), name);
    }
    // ex2-C: one birth w.p. 1/2 or three births w.p. 1/2
    Rational cp = lam / (Rational(2) * (lam + Rational(2) * mu));
    Stencil s;
    s.entries = {{-1, cq}, {1, cp}, {3, cp}};
    Row r0 = {{1, Rational(1, 2)}, {3, Rational(1, 2)}};
    return make_spec({r0}, {s}, std::move(params), name);
  }
  if (name == "bd") {
    Rational q = get_param(params, "q", Rational(1, 2));
    params["q"] = q;
    ChainSpec spec = make_bd_spec(q);
    spec.params = std::move(params);
    return spec;
  }
  throw std::invalid_argument("unknown builtin chain '" + name + "'");
}

inline std::vector<std::string> builtin_names() {
  return {"sec3-ex1",
          "sec3-ex2",
          "sec4-counter-recurrent",
          "sec4-counter-transient",
          "ex1-A",
          "ex1-B",
          "ex2-C",
          "bd"};
}

}  // namespace chainrec
