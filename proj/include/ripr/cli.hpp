#pragma once
// Batch experiments behind the command-line tool. One call runs one
// command, writes its reports into the output directory, and returns
// 0 on success, 1 on usage errors, 2 when a checked invariant fails.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "ripr/divergence.hpp"
#include "ripr/evalue.hpp"
#include "ripr/families.hpp"
#include "ripr/io.hpp"
#include "ripr/measures.hpp"
#include "ripr/projection.hpp"
#include "ripr/ratelab.hpp"
#include "ripr/subprob.hpp"

namespace ripr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInvariant = 2;

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> c{"project", "gain",    "estat", "strength",
                                          "sequential", "subprob", "rate",  "epower"};
  return c;
}

namespace detail {

class Session {
 public:
  Session(const RunConfig& cfg, std::ostream& log) : cfg_(cfg), log_(log), dir_(cfg.out) {
    std::filesystem::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    files_.push_back(name);
    return f;
  }

  void fail(const std::string& invariant) {
    failures_.push_back(invariant);
    log_ << "invariant violated: " << invariant << "\n";
  }

  int finish() {
    if (!failures_.empty()) {
      auto f = open("failures.txt");
      for (const auto& s : failures_) f << s << "\n";
    }
    std::ofstream m(dir_ / "MANIFEST", std::ios::binary);
    m << "command = " << cfg_.command << "\n";
    m << "config_hash = " << hex64(fnv1a(cfg_.canonical())) << "\n";
    m << "seed = " << cfg_.seed << "\n";
    m << "version = " << kVersion << "\n";
    m << "status = " << (failures_.empty() ? "ok" : "invariant_violated") << "\n";
    std::string list;
    for (const auto& s : files_) list += (list.empty() ? "" : ",") + s;
    m << "files = " << list << "\n";
    return failures_.empty() ? kExitOk : kExitInvariant;
  }

  const RunConfig& cfg() const { return cfg_; }
  std::ostream& log() { return log_; }

 private:
  const RunConfig& cfg_;
  std::ostream& log_;
  std::filesystem::path dir_;
  std::vector<std::string> files_;
  std::vector<std::string> failures_;
};

inline ParametricFamily require_family(const RunConfig& c) {
  if (c.family.empty())
    throw usage_error("command '" + c.command + "' needs a family: none given (use --family NAME)");
  return make_family(named_family(c.family, c.grid));
}

// A named family used as a single measure: the uniform mixture of its members.
inline GridMeasure measure_from(const std::string& name, const RunConfig& c, const ParametricFamily& on,
                                const char* role) {
  if (name.empty())
    throw usage_error("command '" + c.command + "' needs " + role + ": none given (use --" + role + " NAME)");
  const ParametricFamily f = make_family(named_family(name, c.grid));
  if (!f.grid().same_as(on.grid()))
    throw usage_error(std::string(role) + " '" + name + "' lives on a different grid than family '" + on.name() + "'");
  const GridMeasure m = mix(f, MixtureWeights::uniform(f.size()));
  GridMeasure out = GridMeasure::from_log_density(on.grid_ptr(), {m.log_density().begin(), m.log_density().end()});
  bool truncated = false;
  for (const auto& member : f.members()) truncated = truncated || member.truncated();
  out.mark_truncated(truncated);
  return out;
}

inline ProjectionOptions projection_options(const RunConfig& c) {
  ProjectionOptions po;
  po.k_max = c.k_max;
  po.gain.tol = c.tol;
  po.gain.max_iter = c.max_iter;
  return po;
}

inline GainOptions gain_options(const RunConfig& c) {
  GainOptions g;
  g.tol = c.tol;
  g.max_iter = c.max_iter;
  return g;
}

inline void check_gain(Session& s, const GainReport& g, const std::string& what) {
  if (g.certified_upper && g.value.is_finite() && *g.certified_upper < g.value.value())
    s.fail(what + ": certified_upper below value");
}

inline int cmd_project(Session& s) {
  const RunConfig& c = s.cfg();
  const ParametricFamily fam = require_family(c);
  const GridMeasure P = measure_from(c.alt, c, fam, "alt");
  const ProjectionTrace trace = greedy_project(P, fam, std::nullopt, projection_options(c));
  std::vector<MixtureWeights> probes;
  for (std::size_t t = 0; t < fam.size(); ++t) probes.push_back(MixtureWeights::single(t));
  probes.push_back(MixtureWeights::uniform(fam.size()));
  CertifyOptions co;
  co.cauchy_tol = c.cauchy_tol;
  const ProjectionCertificate cert = certify_projection(trace, P, fam, probes, co);

  {
    auto f = s.open("trace.csv");
    write_trace_csv(f, trace);
  }
  const GainReport& last = trace.iterations.back().gain;
  {
    auto f = s.open("final.csv");
    CsvWriter w(f);
    w.row({"index", "label", "weight", "status"});
    for (std::size_t t = 0; t < fam.size(); ++t)
      w.row({std::to_string(t), fmt(fam.label(t)), fmt(trace.final.weight_of(t)), to_string(last.status)});
  }
  {
    auto f = s.open("report.jsonl");
    Json g = to_json(last);
    g = Json{{"record", "final_gain"}, {"gain", g}};
    f << g.dump() << "\n";
    Json r{{"record", "certificate"},
           {"residual_gain", to_json(cert.residual_gain)},
           {"residual_probe", cert.residual_probe},
           {"cauchy_ok", cert.cauchy_ok},
           {"last_mp_step", cert.mp_steps.empty() ? 0.0 : cert.mp_steps.back()},
           {"envelope_checks", cert.envelope_checks},
           {"envelope_violations", cert.envelope_violations},
           {"discretized", trace.discretized},
           {"early_stopped", trace.early_stopped},
           {"alt_truncated", P.truncated()}};
    f << r.dump() << "\n";
  }
  for (const auto& st : trace.iterations) check_gain(s, st.gain, "gain at k=" + std::to_string(st.k));
  if (cert.envelope_violations > 0)
    s.fail("D(P || Q_k ~> Q) <= b_Q^(k)/k violated " + std::to_string(cert.envelope_violations) + " times");
  s.log() << "final weights:";
  for (std::size_t t = 0; t < fam.size() && t < 8; ++t) s.log() << ' ' << fmt(trace.final.weight_of(t));
  s.log() << "\n";
  return kExitOk;
}

inline int cmd_gain(Session& s) {
  const RunConfig& c = s.cfg();
  const ParametricFamily fam = require_family(c);
  const GridMeasure P = measure_from(c.alt, c, fam, "alt");
  const GridMeasure Q = c.query.empty() ? mix(fam, MixtureWeights::uniform(fam.size()))
                                        : measure_from(c.query, c, fam, "query");
  const GainReport g = gain_to_hull(P, Q, fam, gain_options(c));
  auto f = s.open("gain.jsonl");
  Json j = to_json(g);
  j["kl_P_Q"] = to_json(kl(P, Q));
  j["kl_truncated"] = kl_truncated(P, Q);
  f << j.dump() << "\n";
  check_gain(s, g, "gain");
  s.log() << "gain = " << fmt(g.value) << " (" << to_string(g.status) << ")\n";
  return kExitOk;
}

struct Projected {
  ProjectionTrace trace;
  GridMeasure qhat;
  EStatistic E;
};

inline Projected project_estat(const RunConfig& c, const ParametricFamily& fam, const GridMeasure& P) {
  ProjectionTrace trace = greedy_project(P, fam, std::nullopt, projection_options(c));
  GridMeasure qhat = mix(fam, trace.final);
  EStatistic E = make_estat(P, qhat);
  return Projected{std::move(trace), std::move(qhat), std::move(E)};
}

inline int cmd_estat(Session& s) {
  const RunConfig& c = s.cfg();
  const ParametricFamily fam = require_family(c);
  const GridMeasure P = measure_from(c.alt, c, fam, "alt");
  const Projected pr = project_estat(c, fam, P);
  const EVerification v = verify_estat(pr.E, fam);
  {
    auto f = s.open("estat.csv");
    CsvWriter w(f);
    w.row({"point", "log_e", "e_value", "status"});
    for (std::size_t i = 0; i < pr.E.size(); ++i) {
      const double l = pr.E.log_values()[i];
      w.row({fmt(fam.grid().points()[i]), fmt(l), fmt(pr.E.value(i)), l == kInf ? "infinite" : "finite"});
    }
  }
  {
    auto f = s.open("verification.jsonl");
    Json j = to_json(v);
    j["gro_value"] = to_json(gro_value(pr.E, P));
    j["infinite_mass"] = infinite_mass(pr.E, P);
    j["residual_gain"] = to_json(pr.trace.iterations.back().gain.value);
    j["alt_truncated"] = P.truncated();
    f << j.dump() << "\n";
  }
  if (infinite_mass(pr.E, P) > 0) s.fail("P(E = inf) > 0");
  s.log() << "sup_slack = " << fmt(v.sup_slack) << "\n";
  return kExitOk;
}

inline int cmd_strength(Session& s) {
  const RunConfig& c = s.cfg();
  if (!(c.scale > 0)) throw usage_error("scale must be > 0");
  const ParametricFamily fam = require_family(c);
  const GridMeasure P = measure_from(c.alt, c, fam, "alt");
  const Projected pr = project_estat(c, fam, P);
  const StrengthVerdict v = compare_strength(pr.E, pr.E.scaled(c.scale), P);
  auto f = s.open("strength.jsonl");
  f << Json{{"scale", c.scale}, {"value", to_json(v.value)}, {"direction", to_string(v.direction)},
            {"expected", -std::log(c.scale)}}
           .dump()
    << "\n";
  if (!v.value.is_finite() || std::fabs(v.value.value() + std::log(c.scale)) > 1e-9)
    s.fail("compare_strength(E, cE) != -ln c");
  s.log() << "strength = " << fmt(v.value) << " (" << to_string(v.direction) << ")\n";
  return kExitOk;
}

inline int cmd_sequential(Session& s) {
  const RunConfig& c = s.cfg();
  const GridPtr ber = Grid::counting(0, 1);
  const GridMeasure P = make_member("bernoulli", 0.5, ber);
  const GridMeasure Q = make_member("bernoulli", 0.4, ber);
  const EStatistic E1 = make_estat(P, Q);
  const EStatistic E2 = EStatistic::constant(ber, 1.0);
  const GrowthReport g = simulate_eprocess(P, E1, E2, c.n, c.runs, c.seed);
  {
    auto f = s.open("sequential.csv");
    write_growth_csv(f, g);
  }
  // Type-I check of the Cauchy/Gaussian likelihood ratio under the Gaussian null.
  const ParametricFamily gauss = make_family(named_family("gauss-std", c.grid));
  const GridMeasure cauchy = make_member("cauchy", 0.0, gauss.grid_ptr());
  const EStatistic E = make_estat(cauchy, gauss[0]);
  const TypeOneReport t = type1_check(gauss[0], E, c.n_batch, c.type1_runs, c.alpha, c.seed);
  {
    auto f = s.open("summary.jsonl");
    f << Json{{"record", "growth"},
              {"n", g.n},
              {"runs", g.log_ratio_sums.size()},
              {"mean_rate", g.mean_rate},
              {"std_error", g.std_error},
              {"expected", to_json(g.expected)},
              {"z_score", g.z_score}}
             .dump()
      << "\n";
    f << Json{{"record", "type1"},
              {"alpha", c.alpha},
              {"n_batch", c.n_batch},
              {"runs", t.runs},
              {"rejections", t.rejections},
              {"rate", t.rate},
              {"allowed", t.allowed},
              {"passed", t.passed}}
             .dump()
      << "\n";
  }
  if (!t.passed) s.fail("type-I rate above alpha + 3 sqrt(alpha/runs)");
  s.log() << "mean_rate = " << fmt(g.mean_rate) << " expected " << fmt(g.expected) << "\n";
  return kExitOk;
}

inline int cmd_subprob(Session& s) {
  const RunConfig& c = s.cfg();
  const CountableExample ex = countable_example(c.support_countable);
  {
    auto f = s.open("countable.csv");
    CsvWriter w(f);
    w.row({"n", "divergence", "mass", "status"});
    for (std::size_t k = 0; k < ex.sequence.size(); ++k) {
      const long n = static_cast<long>(k) + 2;
      const Extended d = kl(ex.P, ex.sequence[k]);
      w.row({std::to_string(n), fmt(d), fmt(ex.sequence[k].mass()), d.is_finite() ? "exact" : "diverged"});
    }
  }
  const CountableMinimum mn = countable_minimize(c.support_countable);
  const DecayConstraint ab = power_law_decay_constraint(c.support_decay, c.nu);
  const auto seq = countable_sparse_sequence(8);
  const SparseMeasure limit{{{1, 0.5}}};
  auto one = [](long) { return 1.0; };
  auto inv = [](long i) { return 1.0 / static_cast<double>(i); };
  const LimitCheckReport dom = dominated_limit_check(seq, limit, one, inv, 1.0, 0.5);
  const LimitCheckReport ctl = dominated_limit_check(seq, limit, one, one, 1.0, 1.0);
  {
    auto f = s.open("subprob.jsonl");
    f << Json{{"record", "countable_minimum"},
              {"N", c.support_countable},
              {"q1", mn.q1},
              {"vertex", mn.vertex},
              {"divergence", mn.divergence},
              {"solver_divergence", mn.solver_divergence},
              {"solver_status", to_string(mn.solver.status)}}
             .dump()
      << "\n";
    f << Json{{"record", "decay_constraint"},
              {"N", c.support_decay},
              {"nu", ab.nu},
              {"c", ab.c},
              {"c_upper", ab.c_upper},
              {"truncated", ab.truncated},
              {"mass", ab.mass},
              {"constraint_value", ab.constraint_value},
              {"generator_error", decay_generator_error(ab)}}
             .dump()
      << "\n";
    for (const auto* r : {&dom, &ctl}) {
      Json v = Json::array();
      for (const auto& m : r->violations) v.push_back(m);
      f << Json{{"record", r == &dom ? "limit_check_dominated" : "limit_check_control"},
                {"precondition_ok", r->precondition_ok},
                {"violations", v},
                {"pointwise_error", r->pointwise_error},
                {"limit_f1", r->limit_f1},
                {"limit_mass", r->limit_mass},
                {"passed", r->passed}}
               .dump()
        << "\n";
    }
  }
  if (!dom.passed) s.fail("dominated constraint not preserved in the limit");
  if (ctl.precondition_ok) s.fail("undominated control accepted");
  if (decay_generator_error(ab) > 1e-12) s.fail("int E_nu dQ != 1 at an extreme point");
  s.log() << "countable example D = " << fmt(mn.divergence) << ", decay constraint mass = " << fmt(ab.mass) << "\n";
  return kExitOk;
}

inline int cmd_rate(Session& s) {
  const RunConfig& c = s.cfg();
  const std::string ex = c.experiment.empty() ? "bernoulli" : c.experiment;
  auto f = s.open("rate.csv");
  CsvWriter w(f);
  if (ex == "bernoulli") {
    const RateExperiment r = bernoulli_rate({0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001});
    w.row({"epsilon", "delta", "slack", "bound", "status"});
    for (const auto& row : r.rows) {
      w.row({fmt(row.epsilon), fmt(row.delta), fmt(row.slack), fmt(row.bound), to_string(row.status)});
      if (row.status == BoundStatus::violated) s.fail("slack bound violated at epsilon " + fmt(row.epsilon));
    }
    auto sm = s.open("summary.txt");
    sm << "fitted_slope = " << fmt(r.fitted_slope) << "\n";
    s.log() << "fitted_slope = " << fmt(r.fitted_slope) << "\n";
  } else if (ex == "geometric") {
    const BlowupReport r = geometric_blowup({0.40, 0.45, 0.49, 0.499}, default_thetap_grid(), c.grid.support);
    w.row({"theta", "delta", "slack", "bound", "status"});
    for (const auto& row : r.rows)
      w.row({fmt(row.theta), fmt(row.delta), row.diverged ? "inf" : fmt(row.sup_finite - 1), "inf",
             row.diverged ? "diverged" : "finite"});
    auto sm = s.open("summary.txt");
    sm << "deltas_decreasing = " << (r.deltas_decreasing ? "true" : "false") << "\n";
    if (!r.deltas_decreasing) s.fail("geometric deltas not decreasing");
  } else if (ex == "moment") {
    GridSpec g = c.grid;
    FamilySpec fs;
    fs.kind = "geometric";
    fs.params = {0.45, 0.5, 0.6};
    fs.grid = g;
    const ParametricFamily fam = make_family(fs);
    w.row({"beta", "delta", "slack", "bound", "status"});
    const auto beta = choose_beta(fam[1], fam[0], fam[2]);
    if (!beta) {
      w.row({"", "", "", "", "inapplicable"});
    } else {
      const RateBoundReport r = rate_bound_check(fam[1], fam[0], fam[2], fam, *beta);
      w.row({fmt(r.beta), fmt(r.delta), fmt(r.slack), fmt(r.bound), to_string(r.status)});
      if (r.status == BoundStatus::violated) s.fail("slack bound violated on the geometric setup");
    }
  } else {
    throw usage_error("unknown rate experiment '" + ex + "' (bernoulli | geometric | moment)");
  }
  return kExitOk;
}

inline int cmd_epower(Session& s) {
  const RunConfig& c = s.cfg();
  const std::string ex = c.experiment.empty() ? "bernoulli" : c.experiment;
  std::vector<GridMeasure> vertices;
  std::optional<ParametricFamily> fam;
  if (ex == "bernoulli") {
    fam = make_family(named_family("bernoulli:0.45:0.55:11", c.grid));
    vertices = {make_member("bernoulli", 0.3, fam->grid_ptr()), make_member("bernoulli", 0.7, fam->grid_ptr())};
  } else if (ex == "gaussian") {
    fam = make_family(named_family("gauss-std", c.grid));
    vertices = {make_member("gaussian", -2, fam->grid_ptr()), make_member("gaussian", 2, fam->grid_ptr())};
  } else {
    throw usage_error("unknown epower experiment '" + ex + "' (bernoulli | gaussian)");
  }
  const EpowerReport r = epower_inequality(vertices, *fam, c.k_max);
  auto f = s.open("epower.csv");
  CsvWriter w(f);
  w.row({"vertex", "lhs", "d_lower", "rhs", "status"});
  for (std::size_t k = 0; k < r.rows.size(); ++k)
    w.row({std::to_string(k), fmt(r.rows[k].lhs), fmt(r.rows[k].d_lower), fmt(r.rows[k].rhs),
           r.rows[k].holds ? "ok" : "violated"});
  if (!r.passed) s.fail("e-power inequality violated");
  return kExitOk;
}

}  // namespace detail

inline int run(const RunConfig& cfg, std::ostream& log) {
  if (cfg.command.empty()) {
    log << "usage error: no command given\n";
    return kExitUsage;
  }
  const auto& known = known_commands();
  if (std::find(known.begin(), known.end(), cfg.command) == known.end()) {
    log << "usage error: unknown command '" << cfg.command << "'\n";
    return kExitUsage;
  }
  try {
    detail::Session s(cfg, log);
    const std::string& cmd = cfg.command;
    int rc = kExitOk;
    if (cmd == "project") rc = detail::cmd_project(s);
    else if (cmd == "gain") rc = detail::cmd_gain(s);
    else if (cmd == "estat") rc = detail::cmd_estat(s);
    else if (cmd == "strength") rc = detail::cmd_strength(s);
    else if (cmd == "sequential") rc = detail::cmd_sequential(s);
    else if (cmd == "subprob") rc = detail::cmd_subprob(s);
    else if (cmd == "rate") rc = detail::cmd_rate(s);
    else rc = detail::cmd_epower(s);
    const int fin = s.finish();
    return rc != kExitOk ? rc : fin;
  } catch (const std::invalid_argument& e) {
    log << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace ripr
