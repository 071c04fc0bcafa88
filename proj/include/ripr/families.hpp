#pragma once
// Built-in parametric families and the descriptor that selects them.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ripr/measures.hpp"

namespace ripr {

struct GridSpec {
  double lo = -50.0;
  double hi = 50.0;
  std::size_t points = 20001;
  long support = 10000;  // counting grids cover {0..support} or {1..support}
};

struct FamilySpec {
  std::string kind;            // gaussian | cauchy | geometric | bernoulli | point-mass
  std::vector<double> params;  // location / success probability / atom
  bool discretized = false;    // params sample a continuous range
  GridSpec grid;
  std::string name;
};

// Members whose grid mass deviates more than this from 1 are rejected.
inline constexpr double kGridMassGuard = 1e-6;

inline bool is_continuous_kind(std::string_view kind) {
  return kind == "gaussian" || kind == "cauchy";
}

inline GridPtr grid_for(const FamilySpec& spec) {
  if (is_continuous_kind(spec.kind)) return Grid::trapezoid(spec.grid.lo, spec.grid.hi, spec.grid.points);
  if (spec.kind == "geometric") return Grid::counting(0, spec.grid.support);
  if (spec.kind == "bernoulli") return Grid::counting(0, 1);
  if (spec.kind == "point-mass") return Grid::counting(1, spec.grid.support);
  throw std::invalid_argument("unknown family kind '" + spec.kind + "'");
}

// Unnormalized log density of one member at every grid point.
inline std::vector<double> raw_log_density(const std::string& kind, double theta, const Grid& grid) {
  const auto x = grid.points();
  std::vector<double> ld(x.size(), -kInf);
  if (kind == "gaussian") {
    const double c = -0.5 * std::log(2 * std::numbers::pi);
    for (std::size_t i = 0; i < x.size(); ++i) ld[i] = c - 0.5 * (x[i] - theta) * (x[i] - theta);
  } else if (kind == "cauchy") {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = x[i] - theta;
      ld[i] = -std::log(std::numbers::pi) - std::log1p(z * z);
    }
  } else if (kind == "geometric") {
    if (!(theta >= 0 && theta < 1)) throw std::invalid_argument("geometric: theta must lie in [0,1)");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < 0) continue;
      ld[i] = (x[i] == 0 ? 0.0 : x[i] * std::log(theta)) + std::log1p(-theta);
    }
  } else if (kind == "bernoulli") {
    if (!(theta >= 0 && theta <= 1)) throw std::invalid_argument("bernoulli: theta must lie in [0,1]");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0) ld[i] = std::log1p(-theta);
      else if (x[i] == 1) ld[i] = std::log(theta);
    }
  } else if (kind == "point-mass") {
    bool hit = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == theta) {
        ld[i] = 0.0;
        hit = true;
      }
    }
    if (!hit) throw std::invalid_argument("point-mass: atom outside the grid");
  } else {
    throw std::invalid_argument("unknown family kind '" + kind + "'");
  }
  return ld;
}

// One probability member, renormalized on its grid. Heavy-tailed Cauchy
// members skip the mass guard and carry the truncated flag instead.
inline GridMeasure make_member(const std::string& kind, double theta, const GridPtr& grid) {
  auto m = GridMeasure::from_log_density(grid, raw_log_density(kind, theta, *grid));
  const double raw = m.mass();
  if (kind != "cauchy" && std::fabs(raw - 1.0) > kGridMassGuard) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s(%.10g): grid mass %.10g deviates from 1 by more than 1e-6; widen the grid",
                  kind.c_str(), theta, raw);
    throw precondition_error(buf);
  }
  return m.normalized(kGridMassGuard);
}

inline ParametricFamily make_family(const FamilySpec& spec) {
  if (spec.params.empty()) throw std::invalid_argument("family '" + spec.kind + "': empty parameter list");
  const GridPtr grid = grid_for(spec);
  std::vector<GridMeasure> members;
  members.reserve(spec.params.size());
  for (double t : spec.params) members.push_back(make_member(spec.kind, t, grid));
  return ParametricFamily(spec.name.empty() ? spec.kind : spec.name, grid, std::move(members), spec.params,
                          true, spec.discretized);
}

// lo, lo + h, ..., hi with n values.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  v.back() = hi;
  return v;
}

// Named setups used by the CLI. Besides the names below, "KIND:a,b,c"
// lists parameters and "KIND:lo:hi:n" samples a range.
inline FamilySpec named_family(const std::string& name, const GridSpec& grid = {}) {
  FamilySpec s;
  s.grid = grid;
  s.name = name;
  if (name == "gauss-pair") {
    s.kind = "gaussian";
    s.params = {-1.0, 1.0};
  } else if (name == "gauss-std") {
    s.kind = "gaussian";
    s.params = {0.0};
  } else if (name == "cauchy") {
    s.kind = "cauchy";
    s.params = {0.0};
  } else if (name == "bernoulli") {
    s.kind = "bernoulli";
    s.params = linspace(0.25, 0.75, 21);
    s.discretized = true;
  } else if (name == "bernoulli-pair") {
    s.kind = "bernoulli";
    s.params = {0.25, 0.75};
  } else if (name == "geometric") {
    s.kind = "geometric";
    s.params = linspace(0.05, 0.95, 19);
    s.discretized = true;
  } else {
    const auto colon = name.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("unknown family '" + name + "'");
    s.kind = name.substr(0, colon);
    std::string rest = name.substr(colon + 1);
    std::vector<std::string> parts;
    const char sep = rest.find(':') != std::string::npos ? ':' : ',';
    std::size_t start = 0;
    while (true) {
      const auto pos = rest.find(sep, start);
      parts.push_back(rest.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    try {
      if (sep == ':') {
        if (parts.size() != 3) throw std::invalid_argument("range needs lo:hi:n");
        s.params = linspace(std::stod(parts[0]), std::stod(parts[1]),
                            static_cast<std::size_t>(std::stoul(parts[2])));
        s.discretized = true;
      } else {
        for (const auto& p : parts) s.params.push_back(std::stod(p));
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("family '" + name + "': cannot parse parameters");
    }
    grid_for(s);  // validates the kind
  }
  return s;
}

}  // namespace ripr
