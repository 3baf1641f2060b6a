#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "chainrec/chain.hpp"
#include "chainrec/logsum.hpp"
#include "chainrec/series.hpp"

namespace chainrec {

// Birth-death chain on {0,1,...} with p_{0,1} = 1 and, for i >= 1,
// down probability q_i and up probability p_i = 1 - q_i.
struct BirthDeathChain {
  RationalSeq q;

  Rational q_at(long i) const { return q.at(i); }
  Rational p_at(long i) const { return Rational(1) - q.at(i); }
  double log_ratio(long i) const {  // log(q_i / p_i)
    return std::log(q_at(i).to_double()) - std::log(p_at(i).to_double());
  }
};

inline BirthDeathChain make_bd_chain(const Rational& q) {
  BirthDeathChain c;
  c.q.cycle = {q};
  return c;
}

inline ChainSpec to_spec(const BirthDeathChain& chain) {
  return make_bd_spec(chain.q);
}

// Classical criterion: recurrent iff sum_n prod_{i<=n} q_i/p_i diverges.
inline SeriesResult bd_classify(const BirthDeathChain& chain,
                                const SeriesConfig& config = {}) {
  for (long i = 1; i <= (long)chain.q.head.size() + (long)chain.q.cycle.size(); ++i) {
    Rational qi = chain.q_at(i);
    if (!(qi > Rational(0) && qi < Rational(1)))
      throw std::invalid_argument("bd_classify: q_i must lie in (0,1)");
  }
  return classify_series([&](long i) { return chain.log_ratio(i); }, config);
}

// Exact gambler's-ruin probability: starting from state 1, hit 0 before
// reaching level >= L.  h(L) = (sum_{n=1}^{L-1} pi_n) / (sum_{n=0}^{L-1} pi_n)
// with pi_0 = 1, pi_n = prod_{i<=n} q_i/p_i; evaluated in log space.
inline double bd_ruin(const BirthDeathChain& chain, long L) {
  if (L < 2) throw std::invalid_argument("bd_ruin: L >= 2 required");
  LogAccumulator all, from1;
  double log_pi = 0.0;
  all.add_log(0.0);  // pi_0
  for (long n = 1; n <= L - 1; ++n) {
    log_pi += chain.log_ratio(n);
    all.add_log(log_pi);
    from1.add_log(log_pi);
  }
  return std::exp(from1.log_total() - all.log_total());
}

struct RuinCurve {
  std::vector<long> levels;
  std::vector<double> h;
};

struct BdStationary {
  std::vector<double> weights;     // normalized over 0..N
  double tail_mass_estimate = 0.0; // +inf when the product diverges
  bool divergent = false;          // detailed-balance product does not decay
};

// Detailed-balance solution P_n  prop  prod_{i=1}^n p_{i-1}/q_i with p_0 = 1,
// restricted to 0..N and renormalized.
inline BdStationary bd_stationary_truncated(const BirthDeathChain& chain, long N) {
  if (N < 1) throw std::invalid_argument("bd_stationary_truncated: N >= 1");
  BdStationary out;
  std::vector<double> logw(static_cast<size_t>(N) + 1);
  logw[0] = 0.0;
  double lw = 0.0;
  for (long n = 1; n <= N; ++n) {
    double lp_prev = n == 1 ? 0.0 : std::log(chain.p_at(n - 1).to_double());
    lw += lp_prev - std::log(chain.q_at(n).to_double());
    logw[n] = lw;
  }
  LogAccumulator total;
  for (double v : logw) total.add_log(v);
  out.weights.resize(logw.size());
  for (size_t i = 0; i < logw.size(); ++i)
    out.weights[i] = std::exp(logw[i] - total.log_total());

  double ratio_next = (chain.p_at(N).to_double()) / chain.q_at(N + 1).to_double();
  if (ratio_next >= 1.0 - 1e-12) {
    out.divergent = true;
    out.tail_mass_estimate = std::numeric_limits<double>::infinity();
  } else {
    out.tail_mass_estimate = out.weights.back() * ratio_next / (1.0 - ratio_next);
  }
  return out;
}

}  // namespace chainrec
