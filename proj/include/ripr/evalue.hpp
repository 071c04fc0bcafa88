#pragma once
// E-statistics: construction from a projection, verification against a
// convex null through its generators, the stronger-than ordering, and
// seeded sequential simulation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ripr/divergence.hpp"
#include "ripr/extended.hpp"
#include "ripr/measures.hpp"

namespace ripr {

enum class EStatSource { likelihood_ratio, explicit_values };

struct EVerification {
  bool passed = false;
  double sup_slack = kInf;        // max_t int E dQ_t - 1
  std::size_t worst_member = 0;
  std::vector<Extended> integrals;
};

class EStatistic {
 public:
  // Values are held as logarithms; -inf is E = 0 and +inf is E = inf.
  static EStatistic from_log_values(GridPtr grid, std::vector<double> log_values,
                                    EStatSource source = EStatSource::explicit_values) {
    if (!grid) throw std::invalid_argument("estat: null grid");
    if (log_values.size() != grid->size()) throw grid_mismatch("estat: length != grid size");
    for (double l : log_values)
      if (l != l) throw std::invalid_argument("estat: NaN value");
    return EStatistic(std::move(grid), std::move(log_values), source);
  }

  static EStatistic from_values(GridPtr grid, std::span<const double> values) {
    std::vector<double> lv(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] >= 0)) throw std::invalid_argument("estat: values must be >= 0");
      lv[i] = std::log(values[i]);
    }
    return from_log_values(std::move(grid), std::move(lv));
  }

  static EStatistic constant(GridPtr grid, double c) {
    const std::size_t n = grid->size();
    return from_values(grid, std::vector<double>(n, c));
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return log_values_.size(); }
  std::span<const double> log_values() const { return log_values_; }
  double value(std::size_t i) const { return std::exp(log_values_[i]); }
  std::vector<double> values() const {
    std::vector<double> v(log_values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(log_values_[i]);
    return v;
  }
  EStatSource source() const { return source_; }

  EStatistic scaled(double c) const {
    if (!(c > 0)) throw std::invalid_argument("estat: scale must be > 0");
    std::vector<double> lv(log_values_);
    const double lc = std::log(c);
    for (double& l : lv) l += lc;
    return EStatistic(grid_, std::move(lv), source_);
  }

  const std::optional<EVerification>& verification() const { return verification_; }
  void set_verification(EVerification v) { verification_ = std::move(v); }

 private:
  EStatistic(GridPtr grid, std::vector<double> lv, EStatSource source)
      : grid_(std::move(grid)), log_values_(std::move(lv)), source_(source) {}

  GridPtr grid_;
  std::vector<double> log_values_;
  EStatSource source_;
  std::optional<EVerification> verification_;
};

// E = p / q_hat with 0/0 = 0 and c/0 = inf.
inline EStatistic make_estat(const GridMeasure& P, const GridMeasure& Qhat) {
  require_same_grid(P.grid(), Qhat.grid(), "make_estat");
  const auto lp = P.log_density();
  const auto lq = Qhat.log_density();
  std::vector<double> lv(lp.size());
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (lp[i] == -kInf) lv[i] = -kInf;
    else if (lq[i] == -kInf) lv[i] = kInf;
    else lv[i] = lp[i] - lq[i];
  }
  return EStatistic::from_log_values(P.grid_ptr(), std::move(lv), EStatSource::likelihood_ratio);
}

// P-mass of the points where E = inf; a valid e-statistic needs 0.
inline double infinite_mass(const EStatistic& E, const GridMeasure& P) {
  require_same_grid(E.grid(), P.grid(), "infinite_mass");
  double s = 0;
  for (std::size_t i = 0; i < E.size(); ++i)
    if (E.log_values()[i] == kInf && P.in_support(i)) s += std::exp(log_point_mass(P, i));
  return s;
}

inline Extended expectation(const EStatistic& E, const GridMeasure& Q) {
  require_same_grid(E.grid(), Q.grid(), "expectation");
  return integrate_exp(E.log_values(), Q);
}

// int E dQ_t for every generator; by linearity this covers the hull.
inline EVerification verify_estat(const EStatistic& E, const ParametricFamily& family, double tol = 1e-9) {
  require_same_grid(E.grid(), family.grid(), "verify_estat");
  EVerification v;
  v.integrals.reserve(family.size());
  double worst = -kInf;
  for (std::size_t t = 0; t < family.size(); ++t) {
    const Extended x = expectation(E, family[t]);
    v.integrals.push_back(x);
    const double val = x.is_undefined() ? kInf : x.value();
    if (val > worst) {
      worst = val;
      v.worst_member = t;
    }
  }
  v.sup_slack = worst - 1.0;
  v.passed = v.sup_slack <= tol;
  return v;
}

enum class StrengthDirection { first_stronger, second_stronger, tie, incomparable };

inline const char* to_string(StrengthDirection d) {
  switch (d) {
    case StrengthDirection::first_stronger: return "first_stronger";
    case StrengthDirection::second_stronger: return "second_stronger";
    case StrengthDirection::tie: return "tie";
    case StrengthDirection::incomparable: return "incomparable";
  }
  return "incomparable";
}

struct StrengthVerdict {
  Extended value;
  StrengthDirection direction = StrengthDirection::incomparable;
};

inline StrengthDirection direction_of(const Extended& v, double tie_tol = 1e-9) {
  if (v.is_undefined()) return StrengthDirection::incomparable;
  const double x = v.value();
  if (std::fabs(x) <= tie_tol) return StrengthDirection::tie;
  return x > 0 ? StrengthDirection::first_stronger : StrengthDirection::second_stronger;
}

// int ln(E1/E2) dP with ln(0/c) = -inf, ln(c/0) = inf; 0/0 and inf/inf at
// a P-positive point make the integral undefined.
inline StrengthVerdict compare_strength(const EStatistic& E1, const EStatistic& E2, const GridMeasure& P) {
  require_same_grid(E1.grid(), P.grid(), "compare_strength");
  require_same_grid(E2.grid(), P.grid(), "compare_strength");
  ExtendedSum s;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (!P.in_support(i)) continue;
    const double d = E1.log_values()[i] - E2.log_values()[i];
    if (d == kInf || d == -kInf || d != d) {
      s.add(d);
      continue;
    }
    s.add(std::exp(log_point_mass(P, i)) * d);
  }
  StrengthVerdict v;
  v.value = s.result();
  v.direction = direction_of(v.value);
  return v;
}

// int ln E dP.
inline Extended gro_value(const EStatistic& E, const GridMeasure& P) {
  require_same_grid(E.grid(), P.grid(), "gro_value");
  return integrate(E.log_values(), P);
}

// Inverse-CDF sampling of grid indices in proportion to density * weight.
class GridSampler {
 public:
  explicit GridSampler(const GridMeasure& m) {
    cdf_.resize(m.size());
    CompensatedSum s;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m.in_support(i)) s.add(std::exp(log_point_mass(m, i)));
      cdf_[i] = s.value();
    }
    total_ = s.value();
    if (!(total_ > 0)) throw precondition_error("sampler: measure has zero mass");
  }

  template <class Rng>
  std::size_t operator()(Rng& rng) const {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u * total_);
    const std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    return std::min(i, cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
  double total_ = 0;
};

struct GrowthReport {
  std::vector<double> log_ratio_sums;  // per run
  std::size_t n = 0;
  double mean_rate = 0;                // mean over runs of sum / n
  double std_error = 0;
  Extended expected;                   // compare_strength value
  double z_score = 0;                  // (mean_rate - expected) / std_error
};

inline GrowthReport simulate_eprocess(const GridMeasure& P, const EStatistic& E1, const EStatistic& E2,
                                      std::size_t n, std::size_t runs, std::uint64_t seed) {
  if (n == 0 || runs == 0) throw std::invalid_argument("simulate_eprocess: n and runs must be positive");
  const GridSampler sample(P);
  const auto l1 = E1.log_values();
  const auto l2 = E2.log_values();
  GrowthReport r;
  r.n = n;
  r.log_ratio_sums.resize(runs);
  for (std::size_t run = 0; run < runs; ++run) {
    std::mt19937_64 rng(seed + run);
    CompensatedSum s;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t i = sample(rng);
      s.add(l1[i] - l2[i]);
    }
    r.log_ratio_sums[run] = s.value();
  }
  CompensatedSum m;
  for (double x : r.log_ratio_sums) m.add(x / static_cast<double>(n));
  r.mean_rate = m.value() / static_cast<double>(runs);
  if (runs > 1) {
    CompensatedSum v;
    for (double x : r.log_ratio_sums) {
      const double d = x / static_cast<double>(n) - r.mean_rate;
      v.add(d * d);
    }
    r.std_error = std::sqrt(v.value() / static_cast<double>(runs - 1) / static_cast<double>(runs));
  }
  r.expected = compare_strength(E1, E2, P).value;
  if (r.expected.is_finite() && r.std_error > 0) r.z_score = (r.mean_rate - r.expected.value()) / r.std_error;
  return r;
}

struct TypeOneReport {
  std::size_t rejections = 0;
  std::size_t runs = 0;
  double rate = 0;
  double allowed = 0;  // alpha + 3 sqrt(alpha / runs)
  bool passed = false;
};

// Fraction of runs in which the running product of E over n_batch null
// draws ever reaches 1/alpha.
inline TypeOneReport type1_check(const GridMeasure& Q, const EStatistic& E, std::size_t n_batch, std::size_t runs,
                                 double alpha, std::uint64_t seed) {
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("type1_check: alpha must lie in (0,1)");
  if (runs == 0) throw std::invalid_argument("type1_check: runs must be positive");
  const GridSampler sample(Q);
  const auto le = E.log_values();
  const double level = -std::log(alpha);
  TypeOneReport r;
  r.runs = runs;
  for (std::size_t run = 0; run < runs; ++run) {
    std::mt19937_64 rng(seed + run);
    double acc = 0;
    for (std::size_t t = 0; t < n_batch; ++t) {
      acc += le[sample(rng)];
      if (acc >= level) {
        ++r.rejections;
        break;
      }
    }
  }
  r.rate = static_cast<double>(r.rejections) / static_cast<double>(runs);
  r.allowed = alpha + 3 * std::sqrt(alpha / static_cast<double>(runs));
  r.passed = r.rate <= r.allowed;
  return r;
}

}  // namespace ripr
