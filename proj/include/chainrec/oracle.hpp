#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "chainrec/birth_death.hpp"
#include "chainrec/chain.hpp"
#include "chainrec/series.hpp"

namespace chainrec {

namespace detail {

// h_j = P(hit 0 before any state >= L | start j) for j = 1..L-1, from the
// banded linear system h_i = sum_j p_{i,j} h_j with h_0 = 1, h_{>=L} = 0.
inline std::vector<double> first_passage_interior(const ChainSpec& spec, long L) {
  using SpMat = Eigen::SparseMatrix<double>;
  const long n = L - 1;
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (long i = 1; i < L; ++i) {
    trips.emplace_back(i - 1, i - 1, 1.0);
    for (const auto& [j, p] : row(spec, i)) {
      double pv = p.to_double();
      if (j == 0)
        b[i - 1] += pv;
      else if (j < L)
        trips.emplace_back(i - 1, j - 1, -pv);
    }
  }
  SpMat A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("first_passage: factorization failed");
  Eigen::VectorXd h = lu.solve(b);
  double resid = (A * h - b).cwiseAbs().maxCoeff();
  if (!(resid < 1e-9))
    throw std::runtime_error("first_passage: solve residual " + std::to_string(resid));
  return std::vector<double>(h.data(), h.data() + n);
}

}  // namespace detail

// Probability that the chain, started from row 0's distribution conditioned
// on leaving state 0, hits 0 before entering any state >= L. Clamped into
// [0,1] against rounding from the linear solve.
inline double first_passage_solve(const ChainSpec& spec, long L) {
  if (L < 2) throw std::invalid_argument("first_passage_solve: L >= 2");
  std::vector<double> h = detail::first_passage_interior(spec, L);
  double total = 0.0, val = 0.0;
  for (const auto& [j, p] : row(spec, 0)) {
    if (j == 0) continue;
    total += p.to_double();
    if (j < L) val += p.to_double() * h[j - 1];
  }
  return std::clamp(val / total, 0.0, 1.0);
}

// Probability of returning to 0 before reaching level L, starting at 0
// (the one-step exit from 0 folded in analytically).
inline double return_before_level(const ChainSpec& spec, long L) {
  std::vector<double> h = detail::first_passage_interior(spec, L);
  double val = 0.0;
  for (const auto& [j, p] : row(spec, 0)) {
    if (j == 0)
      val += p.to_double();
    else if (j < L)
      val += p.to_double() * h[j - 1];
  }
  return val;
}

inline RuinCurve ruin_curve(const ChainSpec& spec, const std::vector<long>& levels) {
  RuinCurve c;
  for (long L : levels) {
    c.levels.push_back(L);
    c.h.push_back(first_passage_solve(spec, L));
  }
  return c;
}

struct OracleThresholds {
  double theta_rec = 1e-2;        // 1 - h(L_max) below this suggests recurrence
  double theta_stab = 1e-4;       // h stabilized across the last two levels
  double transient_gap = 1e-3;    // h must stay below 1 - gap for transience
  double decay_per_decade = 0.5;  // required shrink factor of 1-h per decade
  double floor = 1e-9;            // 1-h below this counts as converged to 1
};

struct McSummary {
  long trials = 0;
  long successes = 0;
  long horizon = 0;
  std::uint64_t seed = 0;
  double frequency = 0.0;
  double wilson_lo = 0.0, wilson_hi = 1.0;
};

struct OracleReport {
  RuinCurve curve;
  Verdict verdict = Verdict::Inconclusive;
  std::string rule;
  std::optional<McSummary> mc;
};

inline std::vector<long> default_level_grid() { return {100, 1000, 10000, 30000}; }

// Criterion-independent verdict from the ruin curve: recurrent when 1-h(L)
// is small at the top level and kept shrinking across the grid, transient
// when h stabilized strictly below 1.
inline OracleReport oracle_classify(const ChainSpec& spec,
                                    const std::vector<long>& grid_in = {},
                                    const OracleThresholds& th = {}) {
  std::vector<long> grid = grid_in.empty() ? default_level_grid() : grid_in;
  if (grid.size() < 3 || !std::is_sorted(grid.begin(), grid.end()))
    throw std::invalid_argument("oracle_classify: need an ascending grid of >= 3 levels");
  OracleReport rep;
  rep.curve = ruin_curve(spec, grid);
  const auto& h = rep.curve.h;
  const size_t k = h.size();

  bool decays = 1.0 - h.back() < th.theta_rec;
  for (size_t m = 1; m + 0 < k && decays; ++m) {
    double prev = 1.0 - h[m - 1], cur = 1.0 - h[m];
    double allowed = prev * std::pow(th.decay_per_decade,
                                     std::log10((double)grid[m] / (double)grid[m - 1]));
    if (cur > std::max(allowed, th.floor)) decays = false;
  }
  if (decays) {
    rep.verdict = Verdict::Recurrent;
    rep.rule = "ruin-curve-decay";
    return rep;
  }
  bool stable = std::abs(h[k - 1] - h[k - 2]) < th.theta_stab &&
                std::abs(h[k - 2] - h[k - 3]) < th.theta_stab &&
                h[k - 1] < 1.0 - th.transient_gap;
  if (stable) {
    rep.verdict = Verdict::Transient;
    rep.rule = "ruin-curve-stabilized";
    return rep;
  }
  rep.verdict = Verdict::Inconclusive;
  rep.rule = "none";
  return rep;
}

// --- Monte Carlo -----------------------------------------------------------

namespace detail {

struct SplitMix64 {
  std::uint64_t s;
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return (double)(next() >> 11) * 0x1.0p-53; }
};

// Independent substream for one trial; depends only on (seed, index), so
// results do not depend on scheduling or worker count.
inline SplitMix64 substream(std::uint64_t seed, long index) {
  SplitMix64 g{seed ^ (0xD1B54A32D192ED03ULL * (std::uint64_t)(index + 1))};
  g.next();
  g.next();
  return g;
}

// Cumulative row for sampling.
struct RowCdf {
  std::vector<double> cum;
  std::vector<long> target;
};

class RowSampler {
 public:
  explicit RowSampler(const ChainSpec& spec) : spec_(spec) {}

  long step(long state, double u) {
    const RowCdf& r = cdf(state);
    auto it = std::lower_bound(r.cum.begin(), r.cum.end(), u * r.cum.back());
    size_t idx = std::min<size_t>(it - r.cum.begin(), r.cum.size() - 1);
    return r.target[idx];
  }

 private:
  const RowCdf& cdf(long state) {
    auto it = cache_.find(state);
    if (it != cache_.end()) return it->second;
    RowCdf r;
    double acc = 0.0;
    for (const auto& [j, p] : row(spec_, state)) {
      acc += p.to_double();
      r.cum.push_back(acc);
      r.target.push_back(j);
    }
    return cache_.emplace(state, std::move(r)).first->second;
  }
  const ChainSpec& spec_;
  std::unordered_map<long, RowCdf> cache_;
};

inline void wilson_interval(long successes, long n, double* lo, double* hi) {
  const double z = 1.959963984540054;
  double p = (double)successes / (double)n;
  double denom = 1.0 + z * z / (double)n;
  double center = (p + z * z / (2.0 * (double)n)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / (double)n +
                              z * z / (4.0 * (double)n * (double)n)) / denom;
  *lo = std::max(0.0, center - half);
  *hi = std::min(1.0, center + half);
}

}  // namespace detail

// Simulates `trials` independent excursions from state 0; a trial succeeds
// if state 0 is revisited within `horizon` steps. Each trial runs on its own
// counter-based substream, so the result is byte-identical for any worker
// count. workers = 0 picks a hardware-based default.
inline McSummary mc_return(const ChainSpec& spec, long trials, long horizon,
                           std::uint64_t seed, int workers = 0) {
  if (trials < 1 || horizon < 1)
    throw std::invalid_argument("mc_return: trials >= 1 and horizon >= 1 required");
  int W = workers > 0
              ? workers
              : std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<long> hits(W, 0);
  auto run = [&](int w) {
    detail::RowSampler sampler(spec);
    long count = 0;
    for (long t = w; t < trials; t += W) {
      detail::SplitMix64 g = detail::substream(seed, t);
      long state = 0;
      for (long step = 0; step < horizon; ++step) {
        state = sampler.step(state, g.uniform());
        if (state == 0) {
          ++count;
          break;
        }
      }
    }
    hits[w] = count;
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < W; ++w) pool.emplace_back(run, w);
  run(0);
  for (auto& th : pool) th.join();

  McSummary s;
  s.trials = trials;
  s.horizon = horizon;
  s.seed = seed;
  for (long c : hits) s.successes += c;
  s.frequency = (double)s.successes / (double)trials;
  detail::wilson_interval(s.successes, trials, &s.wilson_lo, &s.wilson_hi);
  return s;
}

// --- finite-horizon return probability (deterministic bracket) -------------

struct HorizonReturn {
  double lo = 0.0, hi = 1.0;  // P(return to 0 within `horizon` steps) bracket
  long horizon = 0;
};

// Forward evolution of the absorbed-at-0 occupation vector. Probability mass
// trimmed below `trim` at the window edges is counted as "possibly returned",
// giving the [lo, hi] bracket; widths stay tiny for the chains in scope.
inline HorizonReturn return_within_horizon(const ChainSpec& spec, long horizon,
                                           double trim = 1e-12) {
  if (horizon < 1) throw std::invalid_argument("return_within_horizon: horizon >= 1");
  HorizonReturn out;
  out.horizon = horizon;

  long max_up = 1, max_down = 1;
  std::vector<std::vector<std::pair<long, double>>> srows;  // per state residue
  const long i0 = spec.i0();
  const long k = std::max<long>(1, spec.period());
  if (!spec.finite()) {
    for (long m = 0; m < k; ++m) {
      std::vector<std::pair<long, double>> off;
      for (const auto& [j, p] : row(spec, i0 + k + m))  // representative row
        off.emplace_back(j - (i0 + k + m), p.to_double());
      for (const auto& [d, w] : off) {
        max_up = std::max(max_up, d);
        max_down = std::max(max_down, -d);
      }
      srows.push_back(std::move(off));
    }
  }
  std::vector<std::vector<std::pair<long, double>>> hrows(i0);
  for (long i = 0; i < i0; ++i) {
    for (const auto& [j, p] : row(spec, i)) {
      hrows[i].emplace_back(j, p.to_double());
      max_up = std::max(max_up, j - i);
    }
  }

  long cap = std::max<long>(16, spec.head_max_target() + 2);
  std::vector<double> u(cap, 0.0), v;
  double p_ret = 0.0, lost = 0.0;
  for (const auto& [j, p] : hrows[0]) {
    if (j == 0)
      p_ret += p;
    else
      u[j] += p;
  }
  long hi = cap;
  for (long t = 1; t < horizon; ++t) {
    while (hi > 1 && u[hi - 1] == 0.0) --hi;
    if (hi <= 1) break;
    v.assign(hi + max_up, 0.0);
    long head_top = std::min<long>(i0, hi);
    for (long i = 1; i < head_top; ++i) {
      if (u[i] == 0.0) continue;
      for (const auto& [j, p] : hrows[i]) v[j] += p * u[i];
    }
    if (!spec.finite()) {
      for (long m = 0; m < k; ++m) {
        for (const auto& [d, w] : srows[m]) {
          for (long i = i0 + m; i < hi; i += k) v[i + d] += w * u[i];
        }
      }
    }
    p_ret += v[0];
    v[0] = 0.0;
    long top = (long)v.size();
    while (top > 1 && v[top - 1] < trim) {
      lost += v[top - 1];
      --top;
    }
    v.resize(std::max<long>(top, 2));
    u.swap(v);
    hi = (long)u.size();
  }
  out.lo = p_ret;
  out.hi = std::min(1.0, p_ret + lost);
  return out;
}

// --- continuous-time extension ---------------------------------------------

struct CtmcResult {
  std::vector<double> occupancy;   // states 0..cap-1; index cap = overflow
  std::vector<double> stderr_est;  // batch-means standard error per slot
  double t_end = 0.0;
  long jumps = 0;
};

// Simulates the continuous-time extension (exponential holding times with
// mean 1/2 at every state) and returns time-average occupancy over [0, t_end].
// With constant holding rates this estimates the embedded chain's stationary
// distribution.
inline CtmcResult ctmc_simulate(const ChainSpec& spec, double t_end,
                                std::uint64_t seed, long cap = 64) {
  if (!(t_end > 0)) throw std::invalid_argument("ctmc_simulate: t_end > 0");
  const double mean_holding = 0.5;
  const int B = 32;
  CtmcResult res;
  res.t_end = t_end;
  std::vector<std::vector<double>> batch(B, std::vector<double>(cap + 1, 0.0));
  detail::RowSampler sampler(spec);
  detail::SplitMix64 g = detail::substream(seed, 0);

  double t = 0.0;
  long state = 0;
  const double batch_len = t_end / B;
  while (t < t_end) {
    double hold = -mean_holding * std::log1p(-g.uniform());
    double until = std::min(t + hold, t_end);
    size_t slot = std::min<long>(state, cap);
    // spread the holding interval over the batches it overlaps
    double a = t;
    while (a < until) {
      int bi = std::min<int>((int)(a / batch_len), B - 1);
      double b_end = std::min(until, (double)(bi + 1) * batch_len);
      if (b_end <= a) b_end = until;  // fp edge at a batch boundary
      batch[bi][slot] += b_end - a;
      a = b_end;
    }
    t = until;
    if (t >= t_end) break;
    state = sampler.step(state, g.uniform());
    ++res.jumps;
  }
  res.occupancy.assign(cap + 1, 0.0);
  res.stderr_est.assign(cap + 1, 0.0);
  for (long s = 0; s <= cap; ++s) {
    double mean = 0.0;
    for (int b = 0; b < B; ++b) mean += batch[b][s] / batch_len;
    mean /= B;
    double var = 0.0;
    for (int b = 0; b < B; ++b) {
      double d = batch[b][s] / batch_len - mean;
      var += d * d;
    }
    res.occupancy[s] = mean;
    res.stderr_est[s] = std::sqrt(var / (double)(B * (B - 1)));
  }
  return res;
}

}  // namespace chainrec
