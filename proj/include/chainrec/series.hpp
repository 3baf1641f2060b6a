#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "chainrec/logsum.hpp"

namespace chainrec {

enum class Verdict { Recurrent, Transient, Inconclusive, AssumptionViolated };

enum class SeriesRule { None, BoundedBelow, GeometricRatio, Raabe };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Recurrent: return "Recurrent";
    case Verdict::Transient: return "Transient";
    case Verdict::Inconclusive: return "Inconclusive";
    case Verdict::AssumptionViolated: return "AssumptionViolated";
  }
  return "?";
}

inline const char* to_string(SeriesRule r) {
  switch (r) {
    case SeriesRule::None: return "none";
    case SeriesRule::BoundedBelow: return "bounded-below";
    case SeriesRule::GeometricRatio: return "geometric-ratio";
    case SeriesRule::Raabe: return "Raabe";
  }
  return "?";
}

struct SeriesConfig {
  long n_max = 1000000;       // terms of the criterion series to examine
  long window = 1000;         // trailing window the decision rules look at
  double delta = 1e-9;        // bounded-below floor for t_n
  double ratio_margin = 1e-6; // geometric rule: t_{n+1}/t_n <= 1 - margin
  double raabe_margin = 0.05; // margin for the Raabe test and slope guard
  long trace_per_decade = 10; // trace sampling density
};

struct TracePoint {
  long n;
  double log_t;    // log prod_{i<=n} ratio(i)
  double log_sum;  // log sum_{m<=n} t_m
};

struct SeriesResult {
  Verdict verdict = Verdict::Inconclusive;
  SeriesRule rule = SeriesRule::None;
  std::vector<TracePoint> trace;
  double log_t_final = 0.0;
  double log_sum_final = kNegInf;
  long n_used = 0;
};

// Decides divergence of sum_n prod_{i<=n} ratio(i) from the log-ratios,
// entirely in log space. Rule cascade over the trailing window at n_max:
//   (a) bounded-below: window min of log t_n >= log(delta) and the local
//       log-log slope d log t / d log n exceeds -1 + margin  -> diverges;
//   (b) geometric: every ratio in the window <= 1 - ratio_margin -> converges;
//   (c) Raabe: mean of n (t_n/t_{n+1} - 1) over the window, compared
//       against 1 -+ margin;
//   otherwise Inconclusive (boundary decay at rate ~1/n is left undecided).
inline SeriesResult classify_series(const std::function<double(long)>& log_ratio,
                                    const SeriesConfig& config = {}) {
  SeriesResult res;
  const long n_max = std::max<long>(config.n_max, 4);
  const long W = std::max<long>(1, std::min(config.window, n_max / 2));

  std::vector<double> ring(static_cast<size_t>(W) + 1, 0.0);  // log t over last W+1 n
  double log_t = 0.0;
  LogAccumulator sum;

  double raabe_acc = 0.0;
  double max_lr_window = kNegInf;

  long next_trace = 1;
  const double trace_mult = std::pow(10.0, 1.0 / (double)config.trace_per_decade);

  for (long n = 1; n <= n_max; ++n) {
    const double lr = log_ratio(n);
    log_t += lr;
    sum.add_log(log_t);
    ring[static_cast<size_t>(n % (W + 1))] = log_t;

    if (n > n_max - W) {  // final window: n in [n_max-W+1, n_max]
      raabe_acc += (double)(n - 1) * (std::exp(-lr) - 1.0);
      max_lr_window = std::max(max_lr_window, lr);
    }
    if (n == next_trace || n == n_max) {
      res.trace.push_back({n, log_t, sum.log_total()});
      while (next_trace <= n)
        next_trace = std::max(next_trace + 1,
                              (long)std::ceil((double)next_trace * trace_mult));
    }
  }
  res.log_t_final = log_t;
  res.log_sum_final = sum.log_total();
  res.n_used = n_max;

  double window_min = ring[0];
  for (double v : ring) window_min = std::min(window_min, v);
  const double log_t_at_start = ring[static_cast<size_t>((n_max - W) % (W + 1))];
  const double slope = (log_t - log_t_at_start) /
                       (std::log((double)n_max) - std::log((double)(n_max - W)));

  if (window_min >= std::log(config.delta) && slope > -1.0 + config.raabe_margin) {
    res.verdict = Verdict::Recurrent;
    res.rule = SeriesRule::BoundedBelow;
    return res;
  }
  if (max_lr_window <= std::log1p(-config.ratio_margin)) {
    res.verdict = Verdict::Transient;
    res.rule = SeriesRule::GeometricRatio;
    return res;
  }
  const double raabe_mean = raabe_acc / (double)W;
  if (raabe_mean < 1.0 - config.raabe_margin) {
    res.verdict = Verdict::Recurrent;
    res.rule = SeriesRule::Raabe;
    return res;
  }
  if (raabe_mean > 1.0 + config.raabe_margin) {
    res.verdict = Verdict::Transient;
    res.rule = SeriesRule::Raabe;
    return res;
  }
  res.verdict = Verdict::Inconclusive;
  res.rule = SeriesRule::None;
  return res;
}

}  // namespace chainrec
