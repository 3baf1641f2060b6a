#pragma once

#include <cmath>
#include <limits>

namespace chainrec {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without leaving log space.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

// Running log-space sum of positive terms.
class LogAccumulator {
 public:
  void add_log(double log_term) { total_ = log_add(total_, log_term); }
  double log_total() const { return total_; }

 private:
  double total_ = kNegInf;
};

// Kahan-compensated plain-space accumulator for long linear sums.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0, c_ = 0.0;
};

}  // namespace chainrec
