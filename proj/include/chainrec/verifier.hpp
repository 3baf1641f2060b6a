#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "chainrec/chain.hpp"
#include "chainrec/criterion.hpp"
#include "chainrec/logsum.hpp"

namespace chainrec {

namespace detail {

// Rows of the chain truncated to 0..N with upward overflow reflected into
// state N, as double-valued (target, prob) lists.
inline std::vector<std::vector<std::pair<long, double>>> truncated_rows(
    const ChainSpec& spec, long N) {
  std::vector<std::vector<std::pair<long, double>>> rows(N + 1);
  for (long i = 0; i <= N; ++i) {
    double overflow = 0.0;
    for (const auto& [j, p] : row(spec, i)) {
      if (j > N)
        overflow += p.to_double();
      else
        rows[i].emplace_back(j, p.to_double());
    }
    if (overflow > 0.0) {
      if (!rows[i].empty() && rows[i].back().first == N)
        rows[i].back().second += overflow;
      else
        rows[i].emplace_back(N, overflow);
    }
  }
  return rows;
}

inline std::vector<double> solve_replaced_row_system(
    std::vector<Eigen::Triplet<double>>& trips, long dim, long replaced_row,
    const char* what) {
  using SpMat = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> kept;
  kept.reserve(trips.size() + dim);
  for (const auto& t : trips)
    if (t.row() != replaced_row) kept.push_back(t);
  for (long j = 0; j < dim; ++j) kept.emplace_back(replaced_row, j, 1.0);
  SpMat A(dim, dim);
  A.setFromTriplets(kept.begin(), kept.end());
  A.makeCompressed();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  b[replaced_row] = 1.0;
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error(std::string(what) + ": factorization failed");
  Eigen::VectorXd x = lu.solve(b);
  return std::vector<double>(x.data(), x.data() + dim);
}

}  // namespace detail

// Stationary vector of the chain restricted to 0..N (upward overflow
// reflected into N), obtained as the null vector of the truncated generator
// with one equation replaced by the normalization. Throws when the solve
// does not reach a 1e-13 balance residual.
inline std::vector<double> stationary_truncated(const ChainSpec& spec, long N) {
  if (N < 1) throw std::invalid_argument("stationary_truncated: N >= 1");
  auto rows = detail::truncated_rows(spec, N);
  std::vector<Eigen::Triplet<double>> trips;
  for (long i = 0; i <= N; ++i) {
    trips.emplace_back(i, i, -1.0);
    for (const auto& [j, p] : rows[i]) trips.emplace_back(j, i, p);  // (P^T - I)
  }
  std::vector<double> pi =
      detail::solve_replaced_row_system(trips, N + 1, 0, "stationary_truncated");

  // balance residual of the replaced equation follows from the others; check all
  std::vector<double> flow(N + 1, 0.0);
  for (long i = 0; i <= N; ++i)
    for (const auto& [j, p] : rows[i]) flow[j] += p * pi[i];
  double resid = 0.0;
  for (long n = 0; n <= N; ++n) resid = std::max(resid, std::abs(flow[n] - pi[n]));
  if (!(resid < 1e-13))
    throw std::runtime_error("stationary_truncated: residual " + std::to_string(resid));
  return pi;
}

// Tail-mass proxy: stationary weight parked within one jump span of the
// reflecting boundary.
inline double truncation_tail_mass(const ChainSpec& spec, const std::vector<double>& Q) {
  long N = (long)Q.size() - 1;
  long span = std::max<long>(spec.max_down_span(), spec.max_up_explicit_span());
  double m = 0.0;
  for (long n = std::max<long>(0, N - span); n <= N; ++n) m += Q[n];
  return m;
}

// --- the jump-weighted balance system ---------------------------------------

// LHS coefficient of the weighted balance equation at n:
//   sum_{i>=n} (i-n+1) P(i -> n-1)  +  sum_{i=1..n} (n-i+1) P(i -> n+1).
inline double weighted_outflow_coef(const ChainSpec& spec, long n) {
  const long D = spec.max_down_span();
  double s = 0.0;
  for (long i = n; i <= n - 1 + D; ++i)
    s += (double)(i - n + 1) * spec.prob(i, n - 1).to_double();
  for (long i = 1; i <= n; ++i) {
    Rational p = spec.prob(i, n + 1);
    if (!p.is_zero()) s += (double)(n - i + 1) * p.to_double();
  }
  return s;
}

// RHS of the weighted balance equation at n for a given vector Q:
//   sum_{i<n} (n-i) P(i -> n) Q_i + sum_{i>n} (i-n) P(i -> n) Q_i.
inline double weighted_inflow(const ChainSpec& spec, long n,
                              const std::vector<double>& Q) {
  const long D = spec.max_down_span();
  const long N = (long)Q.size() - 1;
  double s = 0.0;
  for (long i = 0; i < n; ++i) {
    Rational p = spec.prob(i, n);
    if (!p.is_zero()) s += (double)(n - i) * p.to_double() * Q[i];
  }
  for (long i = n + 1; i <= std::min(N, n + D); ++i)
    s += (double)(i - n) * spec.prob(i, n).to_double() * Q[i];
  return s;
}

// sum_i i * P(i -> 0): the boundary coefficient of the weighted system.
inline double weighted_boundary_coef(const ChainSpec& spec) {
  const long D = spec.max_down_span();
  double s = 0.0;
  for (long i = 1; i <= D; ++i) s += (double)i * spec.prob(i, 0).to_double();
  return s;
}

struct BalanceReport {
  long N = 0;  // truncation level of Q
  std::vector<long> n;
  std::vector<double> lhs, rhs, residual;
  double max_residual = 0.0;
  double tail_mass = 0.0;
  bool boundary_checked = false;  // boundary equation evaluated at n = 0
  double boundary_residual = 0.0;
};

// Residuals of the weighted balance system at a given vector Q (typically
// from stationary_truncated). The boundary equation Q_0 = Q_1 sum_i i p_{i,0}
// is evaluated only when row 0 is the unit jump to state 1, the shape it is
// stated for.
inline BalanceReport check_balance_general(const ChainSpec& spec,
                                           const std::vector<double>& Q,
                                           long n_lo, long n_hi) {
  const long N = (long)Q.size() - 1;
  const long span = std::max(spec.max_down_span(), spec.max_up_explicit_span());
  if (n_hi > N - span)
    throw std::invalid_argument("check_balance_general: range touches the truncation boundary");
  if (n_lo < 1) n_lo = 1;
  BalanceReport rep;
  rep.N = N;
  rep.tail_mass = truncation_tail_mass(spec, Q);
  for (long n = n_lo; n <= n_hi; ++n) {
    double lhs = weighted_outflow_coef(spec, n) * Q[n];
    double rhs = weighted_inflow(spec, n, Q);
    rep.n.push_back(n);
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(rhs);
    rep.residual.push_back(lhs - rhs);
    rep.max_residual = std::max(rep.max_residual, std::abs(lhs - rhs));
  }
  const Row r0 = row(spec, 0);
  if (r0.size() == 1 && r0[0].first == 1 && r0[0].second == Rational(1)) {
    rep.boundary_checked = true;
    rep.boundary_residual = Q[0] - Q[1] * weighted_boundary_coef(spec);
    rep.max_residual = std::max(rep.max_residual, std::abs(rep.boundary_residual));
  }
  return rep;
}

// Solves the weighted balance system itself on the truncation (boundary
// equation at 0, weighted equations at 1..N-1, normalization replacing the
// last row). The solution is a diagnostic object: whether it is positive and
// tight is exactly what the system's tightness argument asks.
inline std::vector<double> weighted_balance_solution(const ChainSpec& spec, long N) {
  std::vector<Eigen::Triplet<double>> trips;
  const long D = spec.max_down_span();
  trips.emplace_back(0, 0, 1.0);
  trips.emplace_back(0, 1, -weighted_boundary_coef(spec));
  for (long n = 1; n < N; ++n) {
    trips.emplace_back(n, n, weighted_outflow_coef(spec, n));
    for (long i = 0; i < n; ++i) {
      Rational p = spec.prob(i, n);
      if (!p.is_zero()) trips.emplace_back(n, i, -(double)(n - i) * p.to_double());
    }
    for (long i = n + 1; i <= std::min(N, n + D); ++i) {
      Rational p = spec.prob(i, n);
      if (!p.is_zero()) trips.emplace_back(n, i, -(double)(i - n) * p.to_double());
    }
  }
  return detail::solve_replaced_row_system(trips, N + 1, N, "weighted_balance_solution");
}

// Stationary solution of the associated birth-death system (the summed-rate
// equations): boundary P_0 = P_1 e_1^-, interior balance with the
// jump-weighted up/down coefficients, normalization at the top.
inline std::vector<double> assoc_system_solution(const ChainSpec& spec, long N) {
  auto up_coef = [&](long n) {  // sum_{i=0}^{n-1} (n-i) P(i -> n) = e^+_{n-1}
    double s = 0.0;
    for (long i = 0; i < n; ++i) {
      Rational p = spec.prob(i, n);
      if (!p.is_zero()) s += (double)(n - i) * p.to_double();
    }
    return s;
  };
  auto down_coef = [&](long n) {  // sum_{i>n} (i-n) P(i -> n) = e^-_{n+1}
    double s = 0.0;
    const long D = spec.max_down_span();
    for (long i = n + 1; i <= n + D; ++i)
      s += (double)(i - n) * spec.prob(i, n).to_double();
    return s;
  };
  auto bracket = [&](long n) {  // e_n^- + sum_{i=1..n}(n-i+1) P(i -> n+1)
    return weighted_outflow_coef(spec, n);
  };
  std::vector<Eigen::Triplet<double>> trips;
  trips.emplace_back(0, 0, 1.0);
  trips.emplace_back(0, 1, -down_coef(0));
  for (long n = 1; n < N; ++n) {
    trips.emplace_back(n, n, bracket(n));
    trips.emplace_back(n, n - 1, -up_coef(n));
    trips.emplace_back(n, n + 1, -down_coef(n));
  }
  return detail::solve_replaced_row_system(trips, N + 1, N, "assoc_system_solution");
}

struct SummedEquivalence {
  double resid_general = 0.0;   // |LHS - RHS| of the summed general system at Q
  double resid_bd = 0.0;        // |LHS - RHS| of the summed BD system at P_assoc
  double fubini_up = 0.0;       // order-swap residual of the upward double sum
  double fubini_down = 0.0;     // order-swap residual of the downward double sum
};

// Evaluates the summed forms of both balance systems over the truncated
// range, plus the series-rearrangement identities checked directly as
// order-of-summation swaps of the same finite double sums (the only reading
// under which they are identities; swapping is legitimate because every term
// is nonnegative).
inline SummedEquivalence check_summed_equivalence(const ChainSpec& spec,
                                                  const std::vector<double>& Q,
                                                  const std::vector<double>& P_assoc,
                                                  long range) {
  const long NQ = (long)Q.size() - 1;
  const long NP = (long)P_assoc.size() - 1;
  const long D = spec.max_down_span();
  const long R = std::min({range, NQ - D, NP - D});
  if (R < 2) throw std::invalid_argument("check_summed_equivalence: range too small");
  SummedEquivalence out;

  {  // summed general system at Q
    KahanSum lhs, rhs;
    lhs.add(Q[0]);
    rhs.add(Q[1] * weighted_boundary_coef(spec));
    for (long n = 1; n <= R; ++n) {
      lhs.add(weighted_outflow_coef(spec, n) * Q[n]);
      rhs.add(weighted_inflow(spec, n, Q));
    }
    out.resid_general = std::abs(lhs.value() - rhs.value());
  }
  {  // summed BD system at P_assoc
    auto up_coef = [&](long n) {
      double s = 0.0;
      for (long i = 0; i < n; ++i) {
        Rational p = spec.prob(i, n);
        if (!p.is_zero()) s += (double)(n - i) * p.to_double();
      }
      return s;
    };
    auto down_coef = [&](long n) {
      double s = 0.0;
      for (long i = n + 1; i <= n + D; ++i)
        s += (double)(i - n) * spec.prob(i, n).to_double();
      return s;
    };
    KahanSum lhs, rhs;
    lhs.add(P_assoc[0]);
    rhs.add(P_assoc[1] * down_coef(0));
    for (long n = 1; n <= R; ++n) {
      lhs.add(weighted_outflow_coef(spec, n) * P_assoc[n]);
      rhs.add(P_assoc[n - 1] * up_coef(n) + P_assoc[n + 1] * down_coef(n));
    }
    out.resid_bd = std::abs(lhs.value() - rhs.value());
  }
  {  // upward double sum, both summation orders
    KahanSum by_n, by_i;
    for (long n = 1; n <= R; ++n)
      for (long i = 0; i < n; ++i) {
        Rational p = spec.prob(i, n);
        if (!p.is_zero()) by_n.add((double)(n - i) * p.to_double() * Q[i]);
      }
    for (long i = 0; i < R; ++i) {
      double inner = 0.0;
      for (long n = i + 1; n <= R; ++n) {
        Rational p = spec.prob(i, n);
        if (!p.is_zero()) inner += (double)(n - i) * p.to_double();
      }
      by_i.add(Q[i] * inner);
    }
    out.fubini_up = std::abs(by_n.value() - by_i.value());
  }
  {  // downward double sum, both summation orders
    KahanSum by_n, by_i;
    for (long n = 1; n <= R; ++n)
      for (long i = n + 1; i <= std::min(NQ, n + D); ++i)
        by_n.add((double)(i - n) * spec.prob(i, n).to_double() * Q[i]);
    for (long i = 2; i <= std::min(NQ, R + D); ++i) {
      double inner = 0.0;
      for (long n = std::max<long>(1, i - D); n <= std::min(R, i - 1); ++n)
        inner += (double)(i - n) * spec.prob(i, n).to_double();
      by_i.add(Q[i] * inner);
    }
    out.fubini_down = std::abs(by_n.value() - by_i.value());
  }
  return out;
}

}  // namespace chainrec
