#pragma once
// Extended-real arithmetic for integrals that may diverge.
//
// An integral of f against a measure is accumulated as two nonnegative
// sums, one for the positive part of f and one for the negative part.
// The result is +inf or -inf when exactly one part diverges and the
// distinct `undefined` value when both do.

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace ripr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// A part sum above this is treated as divergent.
inline constexpr double kOverflowThreshold = 1e300;

class Extended {
 public:
  constexpr Extended() = default;
  constexpr Extended(double v) : v_(v), undefined_(v != v) {}  // NOLINT

  static constexpr Extended undefined() {
    Extended e;
    e.undefined_ = true;
    return e;
  }
  static constexpr Extended pos_inf() { return Extended(kInf); }
  static constexpr Extended neg_inf() { return Extended(-kInf); }

  constexpr bool is_undefined() const { return undefined_; }
  constexpr bool is_finite() const { return !undefined_ && v_ > -kInf && v_ < kInf; }
  constexpr bool is_pos_inf() const { return !undefined_ && v_ == kInf; }
  constexpr bool is_neg_inf() const { return !undefined_ && v_ == -kInf; }

  double value() const {
    if (undefined_) throw std::domain_error("value() of an undefined extended real");
    return v_;
  }

  // Supremum convention: undefined values count as -inf.
  constexpr double value_or_neg_inf() const { return undefined_ ? -kInf : v_; }

  std::string to_string(int digits = 10) const {
    if (undefined_) return "undefined";
    if (v_ == kInf) return "inf";
    if (v_ == -kInf) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v_);
    return buf;
  }

  friend constexpr bool operator==(const Extended& a, const Extended& b) {
    if (a.undefined_ || b.undefined_) return a.undefined_ && b.undefined_;
    return a.v_ == b.v_;
  }

  friend Extended operator-(const Extended& a) {
    return a.undefined_ ? a : Extended(-a.v_);
  }

  // inf - inf and anything involving undefined is undefined.
  friend Extended operator+(const Extended& a, const Extended& b) {
    if (a.undefined_ || b.undefined_) return undefined();
    const double r = a.v_ + b.v_;
    return r != r ? undefined() : Extended(r);
  }
  friend Extended operator-(const Extended& a, const Extended& b) { return a + (-b); }

 private:
  double v_ = 0.0;
  bool undefined_ = false;
};

// Neumaier-compensated accumulator for the two parts of an integral.
class ExtendedSum {
 public:
  void add(double term) {
    if (term != term) {
      nan_seen_ = true;
      return;
    }
    if (term > 0) {
      if (term == kInf) pos_inf_ = true; else accumulate(pos_, pos_c_, term);
    } else if (term < 0) {
      if (term == -kInf) neg_inf_ = true; else accumulate(neg_, neg_c_, -term);
    }
  }

  // Adds f * weight where weight >= 0; 0 * (+-inf) contributes nothing.
  void add_weighted(double f, double weight) {
    if (weight == 0.0) return;
    if (f != f) {
      nan_seen_ = true;
      return;
    }
    if (f == kInf || f == -kInf) {
      add(f);
      return;
    }
    add(f * weight);
  }

  double positive_part() const { return pos_inf_ ? kInf : pos_ + pos_c_; }
  double negative_part() const { return neg_inf_ ? kInf : neg_ + neg_c_; }

  Extended result() const {
    if (nan_seen_) return Extended::undefined();
    const double p = positive_part();
    const double n = negative_part();
    const bool p_inf = p > kOverflowThreshold;
    const bool n_inf = n > kOverflowThreshold;
    if (p_inf && n_inf) return Extended::undefined();
    if (p_inf) return Extended::pos_inf();
    if (n_inf) return Extended::neg_inf();
    return Extended(p - n);
  }

 private:
  static void accumulate(double& sum, double& comp, double x) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) comp += (sum - t) + x;
    else comp += (x - t) + sum;
    sum = t;
  }

  double pos_ = 0.0, pos_c_ = 0.0;
  double neg_ = 0.0, neg_c_ = 0.0;
  bool pos_inf_ = false, neg_inf_ = false, nan_seen_ = false;
};

// Compensated sum of finite nonnegative or signed terms.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace ripr
