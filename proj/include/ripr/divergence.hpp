#pragma once
// Divergence functionals between finite measures on a shared grid:
// KL, description gain, information gain to a hull, the m_P metric,
// Itakura-Saito, and the g-transform.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ripr/extended.hpp"
#include "ripr/measures.hpp"

namespace ripr {

enum class GainStatus { exact, lower_bound, diverged, undefined };

inline const char* to_string(GainStatus s) {
  switch (s) {
    case GainStatus::exact: return "exact";
    case GainStatus::lower_bound: return "lower_bound";
    case GainStatus::diverged: return "diverged";
    case GainStatus::undefined: return "undefined";
  }
  return "undefined";
}

struct GainReport {
  Extended value;
  std::optional<MixtureWeights> attained_at;
  std::optional<double> certified_upper;
  GainStatus status = GainStatus::undefined;
  // The members discretize a continuous range; exact refers to the hull
  // of the listed members only.
  bool discretized = false;
  double gap = kInf;
  int iterations = 0;
};

// ln cosh(x) without overflow or cancellation.
inline double log_cosh(double x) {
  const double a = std::fabs(x);
  if (a < 20) {
    const double s = std::sinh(a);
    return 0.5 * std::log1p(s * s);
  }
  return a + std::log1p(std::exp(-2 * a)) - std::numbers::ln2;
}

// e^d - 1 - d, accurate for small d.
inline double exp_minus_one_minus(double d) {
  if (std::fabs(d) < 1e-3) return d * d * (0.5 + d * (1.0 / 6 + d * (1.0 / 24 + d / 120)));
  return std::expm1(d) - d;
}

// P-weighted point mass p(i) * mu(i), in the log domain.
inline double log_point_mass(const GridMeasure& m, std::size_t i) {
  return m.log_density()[i] + m.grid().log_weights()[i];
}

// int p ln(p/q) dmu - (P(Omega) - Q(Omega)); +inf unless P << Q on the grid.
inline Extended kl(const GridMeasure& P, const GridMeasure& Q) {
  require_same_grid(P.grid(), Q.grid(), "kl");
  const auto lp = P.log_density();
  const auto lq = Q.log_density();
  ExtendedSum s;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (lp[i] == -kInf) continue;
    if (lq[i] == -kInf) return Extended::pos_inf();
    s.add(std::exp(log_point_mass(P, i)) * (lp[i] - lq[i]));
  }
  return s.result() - Extended(P.mass() - Q.mass());
}

// True when the KL above is taken on a window that cuts off mass.
inline bool kl_truncated(const GridMeasure& P, const GridMeasure& Q) {
  return P.truncated() || Q.truncated();
}

// D(P || Q ~> Qp). At a P-positive point where both densities vanish the
// log-ratio is undefined and so is the integral.
inline Extended description_gain(const GridMeasure& P, const GridMeasure& Q, const GridMeasure& Qp) {
  require_same_grid(P.grid(), Q.grid(), "description_gain");
  require_same_grid(P.grid(), Qp.grid(), "description_gain");
  const auto lp = P.log_density();
  const auto lq = Q.log_density();
  const auto lr = Qp.log_density();
  ExtendedSum s;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (lp[i] == -kInf) continue;
    if (lq[i] == -kInf && lr[i] == -kInf) return Extended::undefined();
    if (lq[i] == -kInf) {
      s.add(kInf);
    } else if (lr[i] == -kInf) {
      s.add(-kInf);
    } else {
      s.add(std::exp(log_point_mass(P, i)) * (lr[i] - lq[i]));
    }
  }
  return s.result() - Extended(Qp.mass() - Q.mass());
}

struct GainOptions {
  double tol = 1e-7;
  int max_iter = 5000;
  double step = 0.5;
  // Subtracts the mass change of the description gain; off gives the
  // plain log-likelihood ratio sup_w int ln(q_w / q) dP.
  bool include_mass = true;
  std::optional<std::vector<double>> warm_start;  // dense weights over members
};

inline constexpr double kDivergenceLevel = 27.631021115928547;  // ln(1e12)

// sup over the hull of the member list of D(P || Q ~> Q_w), by
// exponentiated-gradient ascent in log-weights with a backtracking step.
// The Frank-Wolfe gap max_t g_t - sum_t w_t g_t bounds the distance to the
// optimum from above, so value + gap is a certified upper bound.
inline GainReport gain_to_hull(const GridMeasure& P, const GridMeasure& Q, const ParametricFamily& family,
                               const GainOptions& opts = {}) {
  require_same_grid(P.grid(), Q.grid(), "gain_to_hull");
  require_same_grid(P.grid(), family.grid(), "gain_to_hull");
  GainReport rep;
  rep.discretized = family.discretized();

  const auto lp = P.log_density();
  const auto lq = Q.log_density();
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (lp[i] == -kInf) continue;
    if (lq[i] == -kInf) {
      rep.value = Extended::pos_inf();
      rep.status = GainStatus::diverged;
      rep.certified_upper = kInf;
      return rep;
    }
    support.push_back(i);
  }
  const std::size_t n = family.size();
  const std::size_t s = support.size();
  if (s == 0) {
    // P = 0: only the mass term remains, linear in w.
    std::size_t best = 0;
    for (std::size_t t = 1; t < n; ++t)
      if (family[t].mass() < family[best].mass()) best = t;
    const double v = opts.include_mass ? Q.mass() - family[best].mass() : 0.0;
    rep.value = v;
    rep.attained_at = MixtureWeights::single(best);
    rep.certified_upper = v;
    rep.status = GainStatus::exact;
    rep.gap = 0;
    return rep;
  }

  // ratio[t*s + j] = q_t / q at support point j, scaled by exp(-shift[j]).
  std::vector<double> pw(s), shift(s, -kInf), ratio(n * s);
  for (std::size_t j = 0; j < s; ++j) {
    const std::size_t i = support[j];
    pw[j] = std::exp(log_point_mass(P, i));
    for (std::size_t t = 0; t < n; ++t) shift[j] = std::max(shift[j], family[t].log_density()[i] - lq[i]);
  }
  for (std::size_t j = 0; j < s; ++j) {
    if (shift[j] == -kInf) {
      // Every member vanishes at a P-positive point.
      rep.value = Extended::neg_inf();
      rep.status = GainStatus::exact;
      rep.attained_at = MixtureWeights::uniform(n);
      rep.certified_upper = -kInf;
      rep.gap = 0;
      return rep;
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    const auto lt = family[t].log_density();
    for (std::size_t j = 0; j < s; ++j) {
      const std::size_t i = support[j];
      ratio[t * s + j] = std::exp(lt[i] - lq[i] - shift[j]);
    }
  }
  std::vector<double> mass(n);
  for (std::size_t t = 0; t < n; ++t) mass[t] = opts.include_mass ? family[t].mass() : 0.0;
  const double q_mass = opts.include_mass ? Q.mass() : 0.0;

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (opts.warm_start) {
    if (opts.warm_start->size() != n) throw std::invalid_argument("gain_to_hull: warm start length");
    // A small uniform share keeps every member reachable.
    for (std::size_t t = 0; t < n; ++t) w[t] = (1 - 1e-6) * (*opts.warm_start)[t] + 1e-6 / static_cast<double>(n);
  }

  std::vector<double> mix(s), grad(n);
  auto evaluate = [&](const std::vector<double>& wt, bool want_grad) {
    CompensatedSum f;
    for (std::size_t j = 0; j < s; ++j) {
      double m = 0;
      for (std::size_t t = 0; t < n; ++t) m += wt[t] * ratio[t * s + j];
      mix[j] = m;
      f.add(pw[j] * (shift[j] + std::log(m)));
    }
    double used = 0;
    for (std::size_t t = 0; t < n; ++t) used += wt[t] * mass[t];
    f.add(-(used - q_mass));
    if (want_grad) {
      for (std::size_t t = 0; t < n; ++t) {
        CompensatedSum g;
        const double* r = &ratio[t * s];
        for (std::size_t j = 0; j < s; ++j)
          if (r[j] > 0) g.add(pw[j] * r[j] / mix[j]);
        grad[t] = g.value() - mass[t];
      }
    }
    return f.value();
  };

  double value = evaluate(w, true);
  double eta = opts.step;
  std::vector<double> trial(n), logw(n);
  double gap = kInf;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    double avg = 0, mx = -kInf;
    for (std::size_t t = 0; t < n; ++t) {
      avg += w[t] * grad[t];
      mx = std::max(mx, grad[t]);
    }
    gap = std::max(0.0, mx - avg);
    if (value > kDivergenceLevel) break;
    if (gap <= opts.tol) break;
    // Step in units of the gradient spread over active members, so one
    // step moves every log-weight by at most eta.
    double lo = mx;
    for (std::size_t t = 0; t < n; ++t)
      if (w[t] > 0) lo = std::min(lo, grad[t]);
    const double unit = 1 / std::max(1.0, mx - lo);
    // Backtrack until the step does not decrease the objective.
    bool accepted = false;
    for (int bt = 0; bt < 60 && !accepted; ++bt) {
      double top = -kInf;
      for (std::size_t t = 0; t < n; ++t) {
        logw[t] = w[t] > 0 ? std::log(w[t]) + eta * unit * (grad[t] - mx) : -kInf;
        top = std::max(top, logw[t]);
      }
      double z = 0;
      for (std::size_t t = 0; t < n; ++t) z += std::exp(logw[t] - top);
      for (std::size_t t = 0; t < n; ++t) trial[t] = std::exp(logw[t] - top) / z;
      const double v = evaluate(trial, false);
      if (v >= value) {
        w.swap(trial);
        value = evaluate(w, true);
        eta = std::min(eta * 1.25, 1e8);
        accepted = true;
      } else {
        eta *= 0.5;
      }
    }
    if (!accepted) break;
  }
  rep.iterations = it;
  rep.gap = gap;
  if (value > kDivergenceLevel) {
    rep.value = Extended::pos_inf();
    rep.status = GainStatus::diverged;
    rep.certified_upper = kInf;
    rep.attained_at = MixtureWeights::dense(w);
    return rep;
  }
  rep.value = value;
  rep.certified_upper = value + gap;
  rep.status = gap <= opts.tol ? GainStatus::exact : GainStatus::lower_bound;
  rep.attained_at = MixtureWeights::dense(w);
  return rep;
}

inline void require_positive_on_support(const GridMeasure& f, const GridMeasure& g, const GridMeasure& P,
                                        const char* what) {
  require_same_grid(P.grid(), f.grid(), what);
  require_same_grid(P.grid(), g.grid(), what);
  const auto lp = P.log_density();
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (lp[i] == -kInf) continue;
    if (f.log_density()[i] == -kInf || g.log_density()[i] == -kInf)
      throw precondition_error(std::string(what) + ": density vanishes at a P-positive point (index " +
                               std::to_string(i) + ")");
  }
}

// m_P^2(f, g) = int ln cosh(ln(f/g) / 2) dP, the averaged Bregman form.
inline double mp_metric_squared(const GridMeasure& f, const GridMeasure& g, const GridMeasure& P) {
  require_positive_on_support(f, g, P, "mp_metric");
  const auto lp = P.log_density();
  const auto lf = f.log_density();
  const auto lg = g.log_density();
  CompensatedSum s;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (lp[i] == -kInf) continue;
    s.add(std::exp(log_point_mass(P, i)) * log_cosh(0.5 * (lf[i] - lg[i])));
  }
  return std::max(0.0, s.value());
}

inline double mp_metric(const GridMeasure& f, const GridMeasure& g, const GridMeasure& P) {
  return std::sqrt(mp_metric_squared(f, g, P));
}

// int (f/g - 1 - ln(f/g)) dP.
inline Extended itakura_saito(const GridMeasure& f, const GridMeasure& g, const GridMeasure& P) {
  require_positive_on_support(f, g, P, "itakura_saito");
  const auto lp = P.log_density();
  const auto lf = f.log_density();
  const auto lg = g.log_density();
  ExtendedSum s;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (lp[i] == -kInf) continue;
    const double term = exp_minus_one_minus(lf[i] - lg[i]);
    s.add(term == kInf ? kInf : std::exp(log_point_mass(P, i)) * term);
  }
  return s.result();
}

inline double g_transform(double t) {
  if (!(t >= 0)) throw std::domain_error("g_transform: t must be >= 0");
  return 2 * t + 2 * std::log1p(std::sqrt(-std::expm1(-2 * t)));
}

// ln((x+y)/2) - ln(x)/2 - ln(y)/2.
inline double m_gamma_squared(double x, double y) {
  if (!(x > 0 && y > 0)) throw std::domain_error("m_gamma_squared: arguments must be > 0");
  return log_cosh(0.5 * (std::log(x) - std::log(y)));
}

struct ThreePointBound {
  double lhs = 0;
  Extended rhs;              // from the solver values
  Extended rhs_upper;        // from the certified upper bounds
  bool both_exact = false;
};

// m_P^2(q1, q2) against the mean of the two gains to the hull.
inline ThreePointBound three_point_bound(const GridMeasure& Q1, const GridMeasure& Q2, const GridMeasure& P,
                                         const ParametricFamily& family, const GainOptions& opts = {}) {
  ThreePointBound r;
  r.lhs = mp_metric_squared(Q1, Q2, P);
  const GainReport a = gain_to_hull(P, Q1, family, opts);
  const GainReport b = gain_to_hull(P, Q2, family, opts);
  const Extended sum = a.value + b.value;
  r.rhs = sum.is_finite() ? Extended(0.5 * sum.value()) : sum;
  const double ua = a.certified_upper.value_or(kInf);
  const double ub = b.certified_upper.value_or(kInf);
  r.rhs_upper = Extended(0.5 * (ua + ub));
  r.both_exact = a.status == GainStatus::exact && b.status == GainStatus::exact;
  return r;
}

}  // namespace ripr
