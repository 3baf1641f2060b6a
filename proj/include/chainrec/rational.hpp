#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace chainrec {

// Exact rational arithmetic on 128-bit integers. All operations are
// overflow-checked and throw rational_overflow instead of wrapping; the
// word size leaves ample headroom for the denominators that show up in
// transition probabilities and drift-rate sums (e.g. powers of small
// primes from geometric tails).
class rational_overflow : public std::overflow_error {
 public:
  rational_overflow() : std::overflow_error("rational: 128-bit overflow") {}
};

class Rational {
 public:
  using int128 = __int128;

  constexpr Rational() : num_(0), den_(1) {}
  template <typename T, typename = std::enable_if_t<std::is_integral_v<T>>>
  constexpr Rational(T n) : num_(n), den_(1) {}
  Rational(int128 n, int128 d) : num_(n), den_(d) { normalize(); }

  int128 num() const { return num_; }
  int128 den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }

  double to_double() const {
    // split conversion; avoids the 128-bit -> x87 libgcc path, which is not
    // reproduced faithfully by some emulation environments
    double n = u128_to_double(num_ < 0 ? -(unsigned __int128)num_
                                       : (unsigned __int128)num_);
    double v = n / u128_to_double((unsigned __int128)den_);
    return num_ < 0 ? -v : v;
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    // a.num*b.den + b.num*a.den over a.den*b.den
    int128 x = checked_mul(a.num_, b.den_);
    int128 y = checked_mul(b.num_, a.den_);
    int128 n;
    if (__builtin_add_overflow(x, y, &n)) throw rational_overflow();
    return Rational(n, checked_mul(a.den_, b.den_));
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return a + (-b);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    // cross-reduce first to keep intermediates small
    int128 g1 = gcd128(abs128(a.num_), b.den_);
    int128 g2 = gcd128(abs128(b.num_), a.den_);
    Rational r;
    r.num_ = checked_mul(a.num_ / g1, b.num_ / g2);
    r.den_ = checked_mul(a.den_ / g2, b.den_ / g1);
    return r;
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational: division by zero");
    return a * Rational(b.den_, b.num_);
  }
  Rational operator-() const {
    Rational r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
  }
  Rational& operator+=(const Rational& b) { return *this = *this + b; }
  Rational& operator-=(const Rational& b) { return *this = *this - b; }
  Rational& operator*=(const Rational& b) { return *this = *this * b; }
  Rational& operator/=(const Rational& b) { return *this = *this / b; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return checked_mul(a.num_, b.den_) < checked_mul(b.num_, a.den_);
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  Rational pow(long e) const {
    if (e < 0) return Rational(1) / pow(-e);
    Rational r(1);
    Rational base = *this;
    while (e > 0) {
      if (e & 1) r *= base;
      base = (e > 1) ? base * base : base;
      e >>= 1;
    }
    return r;
  }

  std::string str() const {
    std::string s = int128_str(num_);
    if (den_ != 1) s += "/" + int128_str(den_);
    return s;
  }

  // Parses "7/12", "-3", "0.05" (decimals are exact powers of ten).
  static Rational parse(std::string_view sv);

 private:
  int128 num_, den_;

  static double u128_to_double(unsigned __int128 u) {
    return std::ldexp(static_cast<double>(static_cast<std::uint64_t>(u >> 64)), 64) +
           static_cast<double>(static_cast<std::uint64_t>(u));
  }

  static int128 abs128(int128 x) { return x < 0 ? -x : x; }

  static int128 gcd128(int128 a, int128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
      int128 t = a % b;
      a = b;
      b = t;
    }
    return a == 0 ? 1 : a;
  }

  static int128 checked_mul(int128 a, int128 b) {
    int128 r;
    if (__builtin_mul_overflow(a, b, &r)) throw rational_overflow();
    return r;
  }

  void normalize() {
    if (den_ == 0) throw std::domain_error("rational: zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    int128 g = gcd128(num_, den_);
    num_ /= g;
    den_ /= g;
  }

  static std::string int128_str(int128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    unsigned __int128 u = neg ? -(unsigned __int128)v : (unsigned __int128)v;
    std::string s;
    while (u > 0) {
      s.insert(s.begin(), char('0' + (int)(u % 10)));
      u /= 10;
    }
    return neg ? "-" + s : s;
  }
};

inline Rational Rational::parse(std::string_view sv) {
  auto fail = [&] {
    throw std::invalid_argument("rational: cannot parse '" + std::string(sv) + "'");
  };
  if (sv.empty()) fail();
  size_t slash = sv.find('/');
  if (slash != std::string_view::npos) {
    Rational n = parse(sv.substr(0, slash));
    Rational d = parse(sv.substr(slash + 1));
    if (d.is_zero()) fail();
    return n / d;
  }
  bool neg = false;
  size_t i = 0;
  if (sv[i] == '+' || sv[i] == '-') {
    neg = sv[i] == '-';
    ++i;
  }
  int128 num = 0, den = 1;
  bool seen_digit = false, seen_dot = false;
  for (; i < sv.size(); ++i) {
    char c = sv[i];
    if (c == '.') {
      if (seen_dot) fail();
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') fail();
    seen_digit = true;
    if (__builtin_mul_overflow(num, (int128)10, &num)) throw rational_overflow();
    if (__builtin_add_overflow(num, (int128)(c - '0'), &num)) throw rational_overflow();
    if (seen_dot) {
      if (__builtin_mul_overflow(den, (int128)10, &den)) throw rational_overflow();
    }
  }
  if (!seen_digit) fail();
  return Rational(neg ? -num : num, den);
}

// Nearest-rational recovery of a double via continued fractions; used when a
// value arrives as a binary double but was almost surely meant exactly
// (e.g. 0.05 from a JSON number).
inline Rational rational_from_double(double x, long long max_den = 1000000000LL) {
  if (x != x || x > 1e18 || x < -1e18)
    throw std::invalid_argument("rational_from_double: out of range");
  bool neg = x < 0;
  if (neg) x = -x;
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double v = x;
  for (int it = 0; it < 64; ++it) {
    long long a = (long long)v;
    long long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double frac = v - (double)a;
    if (frac < 1e-15 * (v < 1 ? 1 : v)) break;
    v = 1.0 / frac;
  }
  Rational r(p1, q1 == 0 ? 1 : q1);
  return neg ? -r : r;
}

}  // namespace chainrec
