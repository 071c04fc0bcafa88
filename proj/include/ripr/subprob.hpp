#pragma once
// Strict sub-probability projections: the countable one-constraint
// example, the single-inequality template with E = g/nu, and the
// preservation of dominated constraints under pointwise limits.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ripr/divergence.hpp"
#include "ripr/evalue.hpp"
#include "ripr/measures.hpp"

namespace ripr {

enum class ConstraintKind { eq, le };

struct Constraint {
  std::string name;
  std::vector<double> f;  // strictly positive, one value per grid point
  ConstraintKind kind = ConstraintKind::eq;
  double level = 0;
};

// Linear constraints on {1..N}; extreme points are built on demand.
class ConstraintSet {
 public:
  using Generator = std::function<GridMeasure(std::size_t)>;

  ConstraintSet(GridPtr grid, std::vector<Constraint> constraints, std::size_t generator_count, Generator gen)
      : grid_(std::move(grid)),
        constraints_(std::move(constraints)),
        generator_count_(generator_count),
        generator_(std::move(gen)) {
    for (const auto& c : constraints_) {
      if (c.f.size() != grid_->size()) throw grid_mismatch("constraint '" + c.name + "': length != grid size");
      for (double v : c.f)
        if (!(v > 0)) throw std::invalid_argument("constraint '" + c.name + "': function must be > 0");
    }
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const Constraint> constraints() const { return constraints_; }
  std::size_t generator_count() const { return generator_count_; }
  GridMeasure generator(std::size_t k) const {
    if (k >= generator_count_) throw std::out_of_range("constraint set: generator index");
    return generator_(k);
  }

  // All generators as a family; refuses sizes that would not fit in memory.
  ParametricFamily generator_family(std::size_t limit = 5000) const {
    if (generator_count_ > limit) throw std::length_error("constraint set: too many generators to materialize");
    std::vector<GridMeasure> g;
    std::vector<double> labels;
    bool probability = true;
    for (std::size_t k = 0; k < generator_count_; ++k) {
      g.push_back(generator_(k));
      labels.push_back(static_cast<double>(k));
      probability = probability && g.back().is_probability();
    }
    return ParametricFamily("constraint-generators", grid_, std::move(g), std::move(labels), probability, false);
  }

  // Residuals sum f q - level for every constraint.
  std::vector<double> residuals(const GridMeasure& q) const {
    std::vector<double> r;
    for (const auto& c : constraints_) {
      const Extended v = integrate(c.f, q);
      r.push_back(v.value() - c.level);
    }
    return r;
  }

  bool contains(const GridMeasure& q, double tol = 1e-10) const {
    const auto r = residuals(q);
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (constraints_[k].kind == ConstraintKind::eq ? std::fabs(r[k]) > tol : r[k] > tol) return false;
    }
    return true;
  }

 private:
  GridPtr grid_;
  std::vector<Constraint> constraints_;
  std::size_t generator_count_;
  Generator generator_;
};

// ---- the countable example on {1..N} ------------------------------------

// Weight of delta_1 in Q_n = ((n-2)/(2n-2)) delta_1 + (n/(2n-2)) delta_n.
inline double countable_q1(double n) { return (n - 2) / (2 * n - 2); }
inline double countable_qn(double n) { return n / (2 * n - 2); }

// -ln q_n(1) = ln((2n-2)/(n-2)).
inline double countable_divergence(double n) { return std::log((2 * n - 2) / (n - 2)); }

inline GridMeasure two_point(const GridPtr& grid, long a, double ma, long b, double mb) {
  std::vector<double> d(grid->size(), 0.0);
  const long first = static_cast<long>(grid->points()[0]);
  d[static_cast<std::size_t>(a - first)] += ma;
  d[static_cast<std::size_t>(b - first)] += mb;
  return GridMeasure::from_density(grid, d);
}

// Q_j for j = 2..N, with Q_2 = delta_2; member k has label k + 2.
inline ParametricFamily countable_family(long N) {
  if (N < 3) throw std::invalid_argument("countable: N must be >= 3");
  const GridPtr grid = Grid::counting(1, N);
  std::vector<GridMeasure> members;
  std::vector<double> labels;
  for (long j = 2; j <= N; ++j) {
    const double n = static_cast<double>(j);
    members.push_back(two_point(grid, 1, countable_q1(n), j, countable_qn(n)));
    labels.push_back(n);
  }
  return ParametricFamily("countable", grid, std::move(members), std::move(labels), true, false);
}

struct CountableExample {
  ConstraintSet constraints;
  std::vector<GridMeasure> sequence;  // Q_n for n = 2..N
  GridMeasure limit;                  // (1/2) delta_1
  GridMeasure P;                      // delta_1
};

inline CountableExample countable_example(long N) {
  if (N < 10) throw std::invalid_argument("countable_example: N must be >= 10");
  const GridPtr grid = Grid::counting(1, N);
  std::vector<double> inv(grid->size()), one(grid->size(), 1.0);
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / grid->points()[i];
  std::vector<Constraint> cs{{"sum q(i)/i = 1/2", inv, ConstraintKind::eq, 0.5},
                             {"sum q(i) = 1", one, ConstraintKind::eq, 1.0}};
  auto gen = [grid](std::size_t k) {
    const long j = static_cast<long>(k) + 2;
    const double n = static_cast<double>(j);
    return two_point(grid, 1, countable_q1(n), j, countable_qn(n));
  };
  ConstraintSet set(grid, std::move(cs), static_cast<std::size_t>(N - 1), gen);
  std::vector<GridMeasure> seq;
  seq.reserve(static_cast<std::size_t>(N - 1));
  for (long j = 2; j <= N; ++j) {
    GridMeasure q = gen(static_cast<std::size_t>(j - 2));
    if (!set.contains(q, 1e-12))
      throw std::logic_error("countable_example: Q_" + std::to_string(j) + " violates the constraint");
    seq.push_back(std::move(q));
  }
  std::vector<double> half(grid->size(), 0.0), delta(grid->size(), 0.0);
  half[0] = 0.5;
  delta[0] = 1.0;
  return CountableExample{std::move(set), std::move(seq), GridMeasure::from_density(grid, half),
                   GridMeasure::from_density(grid, delta)};
}

struct CountableMinimum {
  double q1 = 0;             // maximal q(1) over the constraint set on {1..N}
  long vertex = 0;           // extreme point attaining it
  double divergence = 0;     // -ln q1
  GainReport solver;         // cross-check: gain of the hull against its uniform mixture
  double solver_divergence = 0;
};

// Maximizes q(1) subject to sum q(i)/i = 1/2 over probability measures on
// {1..N}: the linear objective is maximal at an extreme point.
inline CountableMinimum countable_minimize(long N, bool cross_check = true) {
  CountableMinimum r;
  for (long j = 2; j <= N; ++j) {
    const double v = countable_q1(static_cast<double>(j));
    if (v > r.q1) {
      r.q1 = v;
      r.vertex = j;
    }
  }
  r.divergence = -std::log(r.q1);
  if (cross_check) {
    const ParametricFamily fam = countable_family(N);
    const GridMeasure P = two_point(fam.grid_ptr(), 1, 1.0, 2, 0.0);
    const GridMeasure Qu = mix(fam, MixtureWeights::uniform(fam.size()));
    r.solver = gain_to_hull(P, Qu, fam);
    r.solver_divergence = kl(P, Qu).value() - r.solver.value.value();
  }
  return r;
}

// A random member of the constraint set on {1..N}: a mixture of up to
// three extreme points with Dirichlet(1) weights.
template <class Rng>
GridMeasure countable_random_feasible(const GridPtr& grid, Rng& rng) {
  const long N = static_cast<long>(grid->size());
  std::uniform_int_distribution<long> pick(2, N);
  std::uniform_int_distribution<int> count(1, 3);
  std::exponential_distribution<double> expo(1.0);
  const int m = count(rng);
  std::vector<double> d(grid->size(), 0.0);
  std::vector<double> w(static_cast<std::size_t>(m));
  double tot = 0;
  for (double& x : w) tot += (x = expo(rng));
  for (int k = 0; k < m; ++k) {
    const long j = pick(rng);
    const double n = static_cast<double>(j);
    // Solve a + b = 1, a + b/j = 1/2 for masses on {1, j}.
    const double a = countable_q1(n), b = countable_qn(n);
    d[0] += w[static_cast<std::size_t>(k)] / tot * a;
    d[static_cast<std::size_t>(j - 1)] += w[static_cast<std::size_t>(k)] / tot * b;
  }
  return GridMeasure::from_density(grid, d);
}

// ---- sparse measures on the natural numbers -----------------------------

struct Atom {
  long point;
  double mass;
};

// A finitely supported measure on {1, 2, ...}; used where the relevant
// indices reach far beyond any dense grid.
struct SparseMeasure {
  std::vector<Atom> atoms;

  double at(long i) const {
    double s = 0;
    for (const auto& a : atoms)
      if (a.point == i) s += a.mass;
    return s;
  }
  double integrate(const std::function<double(long)>& f) const {
    CompensatedSum s;
    for (const auto& a : atoms) s.add(f(a.point) * a.mass);
    return s.value();
  }
  double mass() const {
    return integrate([](long) { return 1.0; });
  }
  long max_point() const {
    long m = 1;
    for (const auto& a : atoms) m = std::max(m, a.point);
    return m;
  }
};

inline SparseMeasure countable_sparse(long n) {
  const double x = static_cast<double>(n);
  return SparseMeasure{{{1, countable_q1(x)}, {n, countable_qn(x)}}};
}

// Q_n at n = 10, 100, ..., 10^decades.
inline std::vector<SparseMeasure> countable_sparse_sequence(int decades = 8) {
  std::vector<SparseMeasure> s;
  long n = 10;
  for (int d = 1; d <= decades; ++d, n *= 10) s.push_back(countable_sparse(n));
  return s;
}

struct LimitCheckOptions {
  long K = 100;
  double pointwise_tol = 1e-8;
  double constraint_tol = 1e-10;
  double domination_tol = 1e-6;
  double preservation_tol = 1e-8;
};

struct LimitCheckReport {
  bool precondition_ok = true;
  std::vector<std::string> violations;
  double pointwise_error = kInf;  // max_{i <= K} |q_n(i) - q*(i)| at the last n
  double limit_f0 = 0;            // sum f0 q*
  double limit_f1 = 0;            // sum f1 q*
  double limit_mass = 0;
  bool converged = false;
  bool preserved = false;
  bool passed = false;
};

// Checks that an equality constraint dominated by an inequality survives
// the pointwise limit of a feasible sequence.
inline LimitCheckReport dominated_limit_check(const std::vector<SparseMeasure>& Qseq, const SparseMeasure& Qstar,
                                              const std::function<double(long)>& f0,
                                              const std::function<double(long)>& f1, double lambda0,
                                              double lambda1, const LimitCheckOptions& opts = {}) {
  if (Qseq.empty()) throw std::invalid_argument("dominated_limit_check: empty sequence");
  LimitCheckReport r;
  long tail = Qstar.max_point();
  for (std::size_t k = 0; k < Qseq.size(); ++k) {
    const double a = Qseq[k].integrate(f0);
    const double b = Qseq[k].integrate(f1);
    if (a > lambda0 + opts.constraint_tol)
      r.violations.push_back("sum f0 q <= lambda0 fails for sequence member " + std::to_string(k));
    if (std::fabs(b - lambda1) > opts.constraint_tol)
      r.violations.push_back("sum f1 q = lambda1 fails for sequence member " + std::to_string(k));
    tail = std::max(tail, Qseq[k].max_point());
  }
  // f1/f0 non-increasing on the points that matter and small at the tail.
  std::vector<long> pts;
  for (long i = 1; i <= std::min(opts.K, tail); ++i) pts.push_back(i);
  for (const auto& q : Qseq)
    for (const auto& a : q.atoms) pts.push_back(a.point);
  pts.push_back(tail);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double prev = kInf;
  for (long i : pts) {
    const double r01 = f1(i) / f0(i);
    if (r01 > prev * (1 + 1e-15)) {
      r.violations.push_back("f1/f0 increases at index " + std::to_string(i));
      break;
    }
    prev = r01;
  }
  if (!(f1(tail) / f0(tail) < opts.domination_tol))
    r.violations.push_back("f1/f0 = " + Extended(f1(tail) / f0(tail)).to_string() + " at tail index " +
                           std::to_string(tail) + " is not below the domination tolerance");
  r.precondition_ok = r.violations.empty();

  const SparseMeasure& last = Qseq.back();
  r.pointwise_error = 0;
  for (long i = 1; i <= std::min(opts.K, tail); ++i)
    r.pointwise_error = std::max(r.pointwise_error, std::fabs(last.at(i) - Qstar.at(i)));
  r.limit_f0 = Qstar.integrate(f0);
  r.limit_f1 = Qstar.integrate(f1);
  r.limit_mass = Qstar.mass();
  r.converged = r.pointwise_error < opts.pointwise_tol;
  r.preserved = std::fabs(r.limit_f1 - lambda1) <= opts.preservation_tol;
  r.passed = r.precondition_ok && r.converged && r.preserved;
  return r;
}

// ---- single inequality sum g q <= nu -------------------------------------

// Riemann zeta by direct summation plus an Euler-Maclaurin tail.
inline double zeta(double s, long terms = 1000) {
  if (!(s > 1)) throw std::domain_error("zeta: s must be > 1");
  CompensatedSum acc;
  for (long i = terms - 1; i >= 1; --i) acc.add(std::pow(static_cast<double>(i), -s));
  const double n = static_cast<double>(terms);
  const double ns = std::pow(n, -s);
  acc.add(n * ns / (s - 1) + ns / 2 + s * ns / n / 12 - s * (s + 1) * (s + 2) * ns / (n * n * n) / 720);
  return acc.value();
}

struct DecayConstraint {
  ConstraintSet constraints;
  EStatistic E;          // g / nu
  GridMeasure qhat;      // nu p / g
  GridMeasure P;
  double nu = 0;
  double c = 0;          // sum p/g on the grid
  double c_upper = 0;    // c plus the tail bound, when one is known
  bool truncated = false;  // no tail bound: c is a grid value only
  double mass = 0;       // qhat(Omega) = nu c
  double constraint_value = 0;  // sum g qhat
};

// g and P on {1..N}; tail_bound, when given, bounds sum_{i>N} p/g.
inline DecayConstraint build_decay_constraint(std::vector<double> g, const GridMeasure& P, double nu,
                                 std::optional<double> tail_bound = std::nullopt) {
  const GridPtr grid = P.grid_ptr();
  if (grid->kind() != GridKind::counting || grid->points()[0] != 1)
    throw std::invalid_argument("decay_constraint: P must live on a counting grid starting at 1");
  if (g.size() != grid->size()) throw grid_mismatch("decay_constraint: g length != grid size");
  for (double v : g)
    if (!(v > 0)) throw std::invalid_argument("decay_constraint: g must be > 0");
  if (!(g.back() < g.front() / 100)) throw precondition_error("decay_constraint: g does not decay along the grid");
  CompensatedSum cs;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (P.in_support(i)) cs.add(P.density()[i] / g[i]);
  DecayConstraint r{ConstraintSet(grid, {}, 0, {}), EStatistic::constant(grid, 1.0), GridMeasure::zero(grid), P};
  r.nu = nu;
  r.c = cs.value();
  r.truncated = !tail_bound.has_value();
  r.c_upper = r.c + tail_bound.value_or(0.0);
  if (!(nu > 0 && nu < 1 / r.c_upper)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "decay_constraint: nu = %.10g must lie in (0, 1/c) with c = %.10g", nu, r.c_upper);
    throw precondition_error(buf);
  }
  std::vector<double> lq(g.size()), le(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    lq[i] = P.log_density()[i] + std::log(nu) - std::log(g[i]);
    le[i] = std::log(g[i]) - std::log(nu);
  }
  r.qhat = GridMeasure::from_log_density(grid, std::move(lq));
  r.E = EStatistic::from_log_values(grid, std::move(le));
  r.mass = r.qhat.mass();
  r.constraint_value = integrate(g, r.qhat).value();
  if (r.constraint_value > nu * (1 + 1e-12)) throw std::logic_error("decay_constraint: qhat violates sum g q <= nu");
  if (!(r.mass < 1)) throw std::logic_error("decay_constraint: qhat is not a strict sub-probability measure");

  // Extreme points (nu/g(i)) delta_i, then the zero measure.
  auto gen = [grid, g, nu](std::size_t k) {
    if (k == g.size()) return GridMeasure::zero(grid);
    std::vector<double> d(grid->size(), 0.0);
    d[k] = nu / g[k];
    return GridMeasure::from_density(grid, d);
  };
  r.constraints = ConstraintSet(grid, {{"sum g q <= nu", std::move(g), ConstraintKind::le, nu}},
                                grid->size() + 1, gen);
  return r;
}

// g(i) = i^-a and p(i) = i^-s / zeta(s) on {1..N}, with the closed-form
// tail bound sum_{i>N} i^{a-s} / zeta(s) <= N^{1+a-s} / ((s-a-1) zeta(s)).
inline DecayConstraint power_law_decay_constraint(long N, double nu, double s = 3.0, double a = 1.0) {
  if (!(s - a > 1)) throw std::invalid_argument("decay_constraint: need s - a > 1 for finite c");
  const GridPtr grid = Grid::counting(1, N);
  const double z = zeta(s);
  std::vector<double> lp(grid->size()), g(grid->size());
  for (std::size_t i = 0; i < lp.size(); ++i) {
    const double x = grid->points()[i];
    lp[i] = -s * std::log(x) - std::log(z);
    g[i] = std::pow(x, -a);
  }
  const GridMeasure P = GridMeasure::from_log_density(grid, std::move(lp));
  const double n = static_cast<double>(N);
  const double tail = std::pow(n, 1 + a - s) / ((s - a - 1) * z);
  return build_decay_constraint(std::move(g), P, nu, tail);
}

// Per-generator check that int E dQ = 1 at every extreme point (nu/g(i))
// delta_i; the zero measure gives 0. Returns max |int E dQ - 1| over the
// nonzero generators.
inline double decay_generator_error(const DecayConstraint& b) {
  const auto le = b.E.log_values();
  const auto& g = b.constraints.constraints()[0].f;
  double worst = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = std::exp(le[i]) * (b.nu / g[i]);
    worst = std::max(worst, std::fabs(v - 1.0));
  }
  return worst;
}

}  // namespace ripr
