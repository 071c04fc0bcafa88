#pragma once
// Approximation-rate experiments: the Bernoulli square-root rate, the
// moment-based slack bound, geometric blow-up, and the e-power inequality.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ripr/divergence.hpp"
#include "ripr/evalue.hpp"
#include "ripr/families.hpp"
#include "ripr/measures.hpp"
#include "ripr/projection.hpp"

namespace ripr {

// Least-squares slope of y on x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: need two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// int (q'/q)^power dP, evaluated in the log domain.
inline Extended ratio_moment(const GridMeasure& P, const GridMeasure& Q, const GridMeasure& Qp, double power) {
  require_same_grid(P.grid(), Q.grid(), "ratio_moment");
  require_same_grid(P.grid(), Qp.grid(), "ratio_moment");
  std::vector<double> lf(P.size());
  for (std::size_t i = 0; i < lf.size(); ++i) {
    const double lq = Q.log_density()[i], lr = Qp.log_density()[i];
    if (lr == -kInf) lf[i] = -kInf;
    else if (lq == -kInf) lf[i] = kInf;
    else lf[i] = power * (lr - lq);
  }
  return integrate_exp(lf, P);
}

enum class BoundStatus { ok, violated, inapplicable };

inline const char* to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::ok: return "ok";
    case BoundStatus::violated: return "violated";
    case BoundStatus::inapplicable: return "inapplicable";
  }
  return "inapplicable";
}

// Explicit slack bound for a given delta and c_beta = int (q'/q)^{1+beta} dP.
// For beta > 1 the constant is twice the closing c*: the choice of the
// free parameter there gives gamma <= 2 (V^{1/2} + 1).
inline double rate_bound(double delta, double c_beta, double beta, double K = 1.0) {
  if (!(beta > 0)) throw std::invalid_argument("rate_bound: beta must be > 0");
  if (!(delta >= 0)) throw std::invalid_argument("rate_bound: delta must be >= 0");
  if (delta == 0) return 0;
  if (beta == 1) return std::max(std::sqrt(8 * c_beta * delta), 4 * delta);
  if (beta < 1) {
    const double a = std::pow(beta * std::sqrt(c_beta) / ((1 - beta) * std::sqrt(2 * delta)), 2 / (1 + beta));
    return std::max(std::sqrt(8 * std::pow(a, 1 - beta) * c_beta * delta), 4 * delta) + std::pow(a, -beta) * c_beta;
  }
  const double kp = std::max(K, 1.0);
  const double h = std::pow(4 / (1 + beta), 2 / (beta - 1)) * 2 * (beta - 1) / (1 + beta);
  const double cstar = std::pow(c_beta, 1 / (1 + beta)) * std::pow(8 * kp / h, (beta - 1) / (2 * (1 + beta)));
  return 2 * cstar * std::pow(delta, beta / (1 + beta)) + 2 * delta;
}

struct RateRow {
  double epsilon = 0;
  double delta = 0;
  double slack = 0;
  double bound = 0;
  double c_norm = 0;  // ||q'/q||_{1+beta}
  BoundStatus status = BoundStatus::inapplicable;
};

struct RateExperiment {
  std::vector<RateRow> rows;
  double beta = 1;
  double fitted_slope = 0;
  std::size_t fitted_points = 0;
};

// P = Ber(1/2), Q = Ber(1/2 + eps), Q' = Ber(qprime); P lies in the hull
// so delta = kl(P, Q).
inline RateExperiment bernoulli_rate(const std::vector<double>& eps_list, double qprime = 0.25,
                                     double family_lo = 0.25, double family_hi = 0.75) {
  RateExperiment ex;
  ex.beta = 1;
  const GridPtr grid = Grid::counting(0, 1);
  const GridMeasure P = make_member("bernoulli", 0.5, grid);
  const GridMeasure Qp = make_member("bernoulli", qprime, grid);
  std::vector<double> lx, ly;
  double prev_eps = kInf;
  for (double eps : eps_list) {
    if (!(eps >= 0 && eps < 0.25)) throw std::invalid_argument("bernoulli_rate: eps must lie in [0, 1/4)");
    if (!(eps < prev_eps)) throw std::invalid_argument("bernoulli_rate: eps list must be decreasing");
    if (0.5 + eps > family_hi || qprime < family_lo) throw std::invalid_argument("bernoulli_rate: outside family range");
    prev_eps = eps;
    const GridMeasure Q = make_member("bernoulli", 0.5 + eps, grid);
    RateRow r;
    r.epsilon = eps;
    r.delta = kl(P, Q).value();
    r.slack = ratio_moment(P, Q, Qp, 1).value() - 1;
    const double c1 = ratio_moment(P, Q, Qp, 2).value();
    r.c_norm = std::sqrt(c1);
    r.bound = rate_bound(r.delta, c1, 1);
    r.status = r.slack <= r.bound + 1e-12 ? BoundStatus::ok : BoundStatus::violated;
    if (r.slack > 0 && r.delta > 0) {
      lx.push_back(std::log(r.delta));
      ly.push_back(std::log(r.slack));
    }
    ex.rows.push_back(r);
  }
  ex.fitted_points = lx.size();
  if (lx.size() >= 2) ex.fitted_slope = fit_slope(lx, ly);
  return ex;
}

struct RateBoundReport {
  double beta = 1;
  double delta = 0;       // certified upper bound on D(P || Q ~> C)
  double slack = 0;       // int q'/q dP - 1
  Extended c_beta;        // int (q'/q)^{1+beta} dP
  double c_norm = 0;
  double K = 0;           // D(P || Q' ~> C) / delta when beta > 1
  double bound = 0;
  BoundStatus status = BoundStatus::inapplicable;
  std::string note;
};

inline RateBoundReport rate_bound_check(const GridMeasure& P, const GridMeasure& Q, const GridMeasure& Qp,
                                           const ParametricFamily& family, double beta,
                                           std::optional<double> K_opt = std::nullopt,
                                           std::optional<double> delta_opt = std::nullopt) {
  RateBoundReport r;
  r.beta = beta;
  r.c_beta = ratio_moment(P, Q, Qp, 1 + beta);
  if (!r.c_beta.is_finite()) {
    r.note = "moment ||q'/q||_{1+beta} is infinite";
    return r;
  }
  const Extended s = ratio_moment(P, Q, Qp, 1);
  r.slack = s.value() - 1;
  if (delta_opt) {
    r.delta = *delta_opt;
  } else {
    const GainReport g = gain_to_hull(P, Q, family);
    if (!g.value.is_finite()) {
      r.note = "gain to the hull is not finite";
      return r;
    }
    r.delta = std::max(0.0, g.certified_upper.value_or(g.value.value()));
  }
  r.c_norm = std::pow(r.c_beta.value(), 1 / (1 + beta));
  if (beta > 1) {
    if (K_opt) {
      r.K = *K_opt;
    } else {
      const GainReport gp = gain_to_hull(P, Qp, family);
      if (!gp.value.is_finite()) {
        r.note = "gain of Q' to the hull is not finite";
        return r;
      }
      r.K = r.delta > 0 ? std::max(0.0, gp.certified_upper.value_or(gp.value.value())) / r.delta : kInf;
    }
    if (!std::isfinite(r.K)) {
      r.note = "no finite K with D(P || Q' ~> C) <= K delta";
      return r;
    }
  }
  r.bound = rate_bound(r.delta, r.c_beta.value(), beta, r.K);
  r.status = r.slack <= r.bound + 1e-12 ? BoundStatus::ok : BoundStatus::violated;
  return r;
}

// Largest beta in the candidate list with a moment below the limit.
inline std::optional<double> choose_beta(const GridMeasure& P, const GridMeasure& Q, const GridMeasure& Qp,
                                         const std::vector<double>& candidates = {0.25, 0.5, 0.75, 1.0},
                                         double limit = 1e6) {
  std::optional<double> best;
  for (double b : candidates) {
    const Extended m = ratio_moment(P, Q, Qp, 1 + b);
    if (m.is_finite() && std::pow(m.value(), 1 / (1 + b)) < limit) best = b;
  }
  return best;
}

// ---- geometric family against P = Q_{1/2} --------------------------------

// D(Q_{1/2} || Q_theta) = ln(1/2 / (1 - theta)) + ln(1/2 / theta).
inline double geometric_kl_half(double theta) { return std::log(0.5 / (1 - theta)) + std::log(0.5 / theta); }

// Closed form of int q_{theta'} / q_theta dQ_{1/2}; inf when theta' >= 2 theta.
inline double geometric_ratio_closed(double theta, double thetap) {
  if (!(thetap < 2 * theta)) return kInf;
  return 0.5 * (1 - thetap) / (1 - theta) / (1 - thetap / (2 * theta));
}

// Partial sum over n = 0..terms-1 of (theta'/(2 theta))^n (1 - theta') / (2 (1 - theta)).
inline double geometric_ratio_partial(double theta, double thetap, long terms) {
  const double r = thetap / (2 * theta);
  const double c = 0.5 * (1 - thetap) / (1 - theta);
  CompensatedSum s;
  double t = c;
  for (long n = 0; n < terms; ++n, t *= r) s.add(t);
  return s.value();
}

struct BlowupRow {
  double theta = 0;
  double delta = 0;          // closed form
  double delta_grid = 0;     // kl on the counting grid
  double sup_finite = 0;     // largest finite integral over the theta' grid
  double sup_thetap = 0;     // theta' attaining the reported sup
  bool diverged = false;
  std::string method;        // ratio-test or partial-sum
};

struct BlowupReport {
  std::vector<BlowupRow> rows;
  std::vector<double> thetap_grid;
  bool deltas_decreasing = true;
};

inline std::vector<double> default_thetap_grid() {
  std::vector<double> g = linspace(0.05, 0.95, 19);
  g.push_back(0.99);
  g.push_back(0.999);
  return g;
}

// For each theta, delta and the sup over the theta' grid of int q'/q dP.
// Divergence is certified by the ratio test (theta'/(2 theta) >= 1) or by
// partial sums over the counting support exceeding 1e6.
inline BlowupReport geometric_blowup(const std::vector<double>& theta_seq,
                                     const std::vector<double>& thetap_grid = default_thetap_grid(),
                                     long support = 10000) {
  BlowupReport rep;
  rep.thetap_grid = thetap_grid;
  const GridPtr grid = Grid::counting(0, support);
  const GridMeasure P = make_member("geometric", 0.5, grid);
  double prev_theta = 1.0 / 3, prev_delta = kInf;
  for (double theta : theta_seq) {
    if (!(theta > prev_theta && theta < 0.5))
      throw std::invalid_argument("geometric_blowup: thetas must increase within (1/3, 1/2)");
    prev_theta = theta;
    BlowupRow row;
    row.theta = theta;
    row.delta = geometric_kl_half(theta);
    row.delta_grid = kl(P, make_member("geometric", theta, grid)).value();
    if (!(row.delta < prev_delta)) rep.deltas_decreasing = false;
    prev_delta = row.delta;
    for (double tp : thetap_grid) {
      const double r = tp / (2 * theta);
      const double partial = geometric_ratio_partial(theta, tp, support + 1);
      if (r >= 1 || partial > 1e6) {
        if (!row.diverged) {
          row.diverged = true;
          row.sup_thetap = tp;
          row.method = r >= 1 ? "ratio-test" : "partial-sum";
        }
        continue;
      }
      if (!row.diverged && partial > row.sup_finite) {
        row.sup_finite = partial;
        row.sup_thetap = tp;
      }
    }
    rep.rows.push_back(row);
  }
  return rep;
}

// ---- e-power of a mixture alternative ------------------------------------

struct EpowerRow {
  double lhs = 0;        // int ln(p*/qhat*) dP
  double d_lower = 0;    // lower estimate of D(P || C)
  double rhs = 0;        // d_lower - ln n - tol
  bool holds = false;
};

struct EpowerReport {
  std::vector<EpowerRow> rows;
  double tol = 0;        // residual gain of the trace
  double log_n = 0;
  bool passed = false;
};

// P* = uniform mixture of the vertices, qhat* its greedy projection; checks
// int ln(p*/qhat*) dP >= D(P || C) - ln n - tol for every vertex P.
inline EpowerReport epower_inequality(const std::vector<GridMeasure>& vertices, const ParametricFamily& family,
                                      int trace_kmax = 200) {
  if (vertices.empty()) throw std::invalid_argument("epower_inequality: no vertices");
  const double n = static_cast<double>(vertices.size());
  GridMeasure pstar = vertices[0];
  for (std::size_t k = 1; k < vertices.size(); ++k) pstar = blend(pstar, vertices[k], 1.0 / static_cast<double>(k + 1));
  ProjectionOptions po;
  po.k_max = trace_kmax;
  po.compute_bound = false;
  const ProjectionTrace trace = greedy_project(pstar, family, std::nullopt, po);
  const GridMeasure qhat = mix(family, trace.final);
  const GainReport& last = trace.iterations.back().gain;
  EpowerReport rep;
  rep.tol = std::max(0.0, last.value.value_or_neg_inf());
  rep.log_n = std::log(n);
  const GridMeasure qref = mix(family, MixtureWeights::uniform(family.size()));
  rep.passed = true;
  for (const auto& P : vertices) {
    EpowerRow row;
    std::vector<double> lr(P.size());
    for (std::size_t i = 0; i < lr.size(); ++i) lr[i] = pstar.log_density()[i] - qhat.log_density()[i];
    row.lhs = integrate(lr, P).value();
    const GainReport g = gain_to_hull(P, qref, family);
    row.d_lower = kl(P, qref).value() - g.certified_upper.value_or(kInf);
    row.rhs = row.d_lower - rep.log_n - rep.tol;
    row.holds = row.lhs >= row.rhs;
    rep.passed = rep.passed && row.holds;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace ripr
