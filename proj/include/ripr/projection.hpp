#pragma once
// Greedy approximation of the universal reverse information projection,
// with per-iteration gain estimates and the 1/k certificate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ripr/divergence.hpp"
#include "ripr/extended.hpp"
#include "ripr/measures.hpp"

namespace ripr {

struct ProjectionOptions {
  int k_max = 500;
  // Early stop once this many consecutive steps move less than stop_tol in m_P.
  double stop_tol = 1e-10;
  int stop_patience = 10;
  bool compute_gain = true;
  bool compute_bound = true;
  GainOptions gain;
};

struct ProjectionStep {
  int k = 0;
  std::size_t theta_index = 0;
  double alpha = 1.0;
  std::vector<double> weights;  // dense over members
  GainReport gain;
  Extended bound_b;             // b_Q^(k)(P) with Q the gain witness
  Extended objective;           // D(P || Q_k ~> Q*)
  double mp_step = 0;           // m_P(q_k, q_{k-1})
};

struct ProjectionTrace {
  std::vector<ProjectionStep> iterations;
  MixtureWeights reference;
  MixtureWeights final;
  bool discretized = false;     // precondition checked over the member list only
  bool early_stopped = false;

  std::vector<std::size_t> chosen(std::size_t upto) const {
    std::vector<std::size_t> c;
    for (std::size_t i = 0; i < upto && i < iterations.size(); ++i) c.push_back(iterations[i].theta_index);
    return c;
  }
};

// Envelope certificate: int (1 + sup_{t* in chosen} ln(sup_t q_t / q_t*))
// * sum_t w_t q_t^2 / q_w^2 dP, with natural logarithms.
inline Extended envelope_bound(const GridMeasure& P, const ParametricFamily& family, const MixtureWeights& Q,
                             const std::vector<std::size_t>& chosen) {
  if (chosen.empty()) throw std::invalid_argument("envelope_bound: chosen set is empty");
  require_same_grid(P.grid(), family.grid(), "envelope_bound");
  const auto lp = P.log_density();
  const auto lqw = mix_log_density(family, Q);
  const auto idx = Q.indices();
  const auto ws = Q.weights();
  ExtendedSum s;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (lp[i] == -kInf) continue;
    double top = -kInf;
    for (std::size_t t = 0; t < family.size(); ++t) top = std::max(top, family[t].log_density()[i]);
    double low = kInf;
    for (std::size_t c : chosen) low = std::min(low, family.member(c).log_density()[i]);
    if (lqw[i] == -kInf) {
      s.add(kInf);
      continue;
    }
    double second = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double l = family[idx[j]].log_density()[i];
      if (l > -kInf) second += ws[j] * std::exp(2 * (l - lqw[i]));
    }
    const double first = low == -kInf ? kInf : 1 + top - low;
    if (first == kInf) {
      s.add(kInf);
      continue;
    }
    s.add(std::exp(log_point_mass(P, i)) * first * second);
  }
  return s.result();
}

namespace detail {

// int ln(q*/q_c) dP - (Q*(Omega) - Q_c(Omega)) from log densities on the support of P.
inline Extended gain_against_reference(const GridMeasure& P, const std::vector<std::size_t>& support,
                                       const std::vector<double>& l_cand, double cand_mass,
                                       std::span<const double> l_ref, double ref_mass) {
  ExtendedSum s;
  for (std::size_t i : support) {
    if (l_cand[i] == -kInf && l_ref[i] == -kInf) return Extended::undefined();
    if (l_cand[i] == -kInf) {
      s.add(kInf);
      continue;
    }
    if (l_ref[i] == -kInf) {
      s.add(-kInf);
      continue;
    }
    s.add(std::exp(log_point_mass(P, i)) * (l_ref[i] - l_cand[i]));
  }
  return s.result() - Extended(ref_mass - cand_mass);
}

}  // namespace detail

// Greedy mixture projection with Q_k = (1 - a_k) Q_{k-1} + a_k Q_{t_k}, a_k = 2/(k+1), and
// t_k the lowest-index exhaustive minimizer of D(P || candidate ~> Q*).
inline ProjectionTrace greedy_project(const GridMeasure& P, const ParametricFamily& family,
                                      std::optional<MixtureWeights> reference = std::nullopt,
                                      const ProjectionOptions& opts = {}) {
  require_same_grid(P.grid(), family.grid(), "greedy_project");
  if (opts.k_max < 1) throw std::invalid_argument("greedy_project: k_max must be >= 1");
  const std::size_t n = family.size();
  const std::size_t npts = family.grid().size();
  ProjectionTrace trace;
  trace.reference = reference ? *reference : MixtureWeights::uniform(n);
  trace.discretized = family.discretized();
  const GridMeasure qstar = mix(family, trace.reference);
  const auto l_ref = qstar.log_density();
  const double ref_mass = qstar.mass();

  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < npts; ++i)
    if (P.in_support(i)) support.push_back(i);

  // Precondition: inf_t D(P || Q_t ~> Q*) finite and no member at -inf.
  std::vector<Extended> first(n);
  std::size_t best = n;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> lt(family[t].log_density().begin(), family[t].log_density().end());
    first[t] = detail::gain_against_reference(P, support, lt, family[t].mass(), l_ref, ref_mass);
    if (first[t].is_undefined() || first[t].is_neg_inf())
      throw precondition_error("greedy_project: D(P || Q_theta ~> Q*) is " + first[t].to_string() +
                               " for theta index " + std::to_string(t) + " (label " +
                               Extended(family.label(t)).to_string() + ")");
    if (first[t].is_finite() && (best == n || first[t].value() < first[best].value())) best = t;
  }
  if (best == n)
    throw precondition_error("greedy_project: D(P || Q_theta ~> Q*) = inf for every theta; reference unusable");

  std::vector<double> weights(n, 0.0);
  weights[best] = 1.0;
  std::vector<double> lqk(family[best].log_density().begin(), family[best].log_density().end());
  double qk_mass = family[best].mass();
  std::vector<std::size_t> chosen{best};
  std::optional<std::vector<double>> warm;
  int quiet = 0;

  auto record = [&](int k, std::size_t theta, double alpha, const Extended& objective, double mp_step) {
    ProjectionStep st;
    st.k = k;
    st.theta_index = theta;
    st.alpha = alpha;
    st.weights = weights;
    st.objective = objective;
    st.mp_step = mp_step;
    if (opts.compute_gain) {
      const GridMeasure qk = GridMeasure::from_log_density(family.grid_ptr(), lqk);
      GainOptions go = opts.gain;
      if (warm) go.warm_start = warm;
      st.gain = gain_to_hull(P, qk, family, go);
      if (st.gain.attained_at) {
        warm = st.gain.attained_at->to_dense(n);
        if (opts.compute_bound) st.bound_b = envelope_bound(P, family, *st.gain.attained_at, chosen);
      }
    } else if (opts.compute_bound) {
      st.bound_b = envelope_bound(P, family, MixtureWeights::dense(weights), chosen);
    }
    trace.iterations.push_back(std::move(st));
  };

  record(1, best, 1.0, first[best], 0.0);

  std::vector<double> cand(npts);
  for (int k = 2; k <= opts.k_max; ++k) {
    const double alpha = 2.0 / (k + 1);
    const double la = std::log(alpha), lb = std::log1p(-alpha);
    std::size_t pick = n;
    Extended pick_val;
    std::vector<double> pick_l;
    for (std::size_t t = 0; t < n; ++t) {
      const auto lt = family[t].log_density();
      for (std::size_t i : support) cand[i] = log_add_exp(lb + lqk[i], la + lt[i]);
      const double cm = (1 - alpha) * qk_mass + alpha * family[t].mass();
      const Extended v = detail::gain_against_reference(P, support, cand, cm, l_ref, ref_mass);
      if (v.is_undefined() || v.is_pos_inf()) continue;
      if (pick == n || v.value() < pick_val.value()) {
        pick = t;
        pick_val = v;
      }
    }
    if (pick == n) throw precondition_error("greedy_project: every candidate has infinite or undefined gain");

    std::vector<double> next(npts);
    const auto lt = family[pick].log_density();
    for (std::size_t i = 0; i < npts; ++i) next[i] = log_add_exp(lb + lqk[i], la + lt[i]);
    const GridMeasure prev = GridMeasure::from_log_density(family.grid_ptr(), lqk);
    const GridMeasure cur = GridMeasure::from_log_density(family.grid_ptr(), next);
    const double step = support.empty() ? 0.0 : mp_metric(cur, prev, P);
    lqk.swap(next);
    qk_mass = (1 - alpha) * qk_mass + alpha * family[pick].mass();
    for (double& w : weights) w *= 1 - alpha;
    weights[pick] += alpha;
    chosen.push_back(pick);
    record(k, pick, alpha, pick_val, step);

    quiet = step < opts.stop_tol ? quiet + 1 : 0;
    if (quiet >= opts.stop_patience && k < opts.k_max) {
      trace.early_stopped = true;
      break;
    }
  }
  trace.final = MixtureWeights::dense(weights);
  return trace;
}

struct CertifyOptions {
  double cauchy_tol = 1e-4;
  double envelope_slack = 1e-9;
};

struct ProjectionCertificate {
  std::vector<double> mp_steps;      // m_P(q_k, q_{k-1}) for k >= 2
  bool cauchy_ok = false;            // the last step is below cauchy_tol
  Extended residual_gain;            // max over probes of D(P || Q_final ~> probe)
  std::size_t residual_probe = 0;
  std::size_t envelope_checks = 0;   // pairs (k, probe) with both sides finite
  std::size_t envelope_violations = 0;
  double worst_envelope_margin = kInf;  // min of bound/k - D over checks
};

// Cauchy diagnostics in m_P, residual gain against probes, and the
// D(P || Q_k ~> Q) <= b_Q^(k)/k envelope for every probe and every k.
inline ProjectionCertificate certify_projection(const ProjectionTrace& trace, const GridMeasure& P,
                                                const ParametricFamily& family,
                                                const std::vector<MixtureWeights>& probes,
                                                const CertifyOptions& opts = {}) {
  if (trace.iterations.empty()) throw std::invalid_argument("certify_projection: empty trace");
  ProjectionCertificate c;
  for (std::size_t k = 1; k < trace.iterations.size(); ++k) c.mp_steps.push_back(trace.iterations[k].mp_step);
  c.cauchy_ok = c.mp_steps.empty() || c.mp_steps.back() < opts.cauchy_tol;

  std::vector<GridMeasure> probe_m;
  probe_m.reserve(probes.size());
  for (const auto& q : probes) probe_m.push_back(mix(family, q));

  const GridMeasure qfinal = mix(family, trace.final);
  c.residual_gain = Extended::neg_inf();
  for (std::size_t j = 0; j < probe_m.size(); ++j) {
    const Extended g = description_gain(P, qfinal, probe_m[j]);
    if (g.value_or_neg_inf() > c.residual_gain.value_or_neg_inf()) {
      c.residual_gain = g;
      c.residual_probe = j;
    }
  }

  for (std::size_t k = 0; k < trace.iterations.size(); ++k) {
    const auto& st = trace.iterations[k];
    const GridMeasure qk = mix(family, MixtureWeights::dense(st.weights));
    const auto chosen = trace.chosen(k + 1);
    for (std::size_t j = 0; j < probes.size(); ++j) {
      const Extended d = description_gain(P, qk, probe_m[j]);
      const Extended b = envelope_bound(P, family, probes[j], chosen);
      if (!d.is_finite() || !b.is_finite()) continue;
      ++c.envelope_checks;
      const double margin = b.value() / static_cast<double>(st.k) - d.value();
      c.worst_envelope_margin = std::min(c.worst_envelope_margin, margin);
      if (margin < -opts.envelope_slack) ++c.envelope_violations;
    }
  }
  return c;
}

}  // namespace ripr
