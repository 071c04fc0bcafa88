#pragma once
// Finite measures with densities on a shared discrete support or
// quadrature grid.
//
// Densities are stored in the log domain next to their linear values.
// The log form is authoritative; the linear form may underflow to 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ripr/extended.hpp"

namespace ripr {

class grid_mismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class precondition_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Linear densities below this are treated as outside the support.
inline constexpr double kDensityFloor = 1e-300;

enum class GridKind { counting, quadrature };

class Grid {
 public:
  Grid(std::vector<double> points, std::vector<double> weights, GridKind kind)
      : points_(std::move(points)), weights_(std::move(weights)), kind_(kind) {
    if (points_.size() != weights_.size())
      throw std::invalid_argument("grid: points and weights differ in length");
    if (points_.empty()) throw std::invalid_argument("grid: no points");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!(weights_[i] > 0)) throw std::invalid_argument("grid: weights must be strictly positive");
      if (i > 0 && !(points_[i] > points_[i - 1]))
        throw std::invalid_argument("grid: points must be strictly increasing");
    }
    log_weights_.reserve(weights_.size());
    for (double w : weights_) log_weights_.push_back(std::log(w));
  }

  // Counting measure on the integers first..last.
  static std::shared_ptr<const Grid> counting(long first, long last) {
    if (last < first) throw std::invalid_argument("grid: empty counting range");
    std::vector<double> pts(static_cast<std::size_t>(last - first + 1));
    std::iota(pts.begin(), pts.end(), static_cast<double>(first));
    std::vector<double> w(pts.size(), 1.0);
    return std::make_shared<const Grid>(std::move(pts), std::move(w), GridKind::counting);
  }

  // Trapezoid rule on [lo, hi] with n equally spaced nodes.
  static std::shared_ptr<const Grid> trapezoid(double lo, double hi, std::size_t n) {
    if (n < 2 || !(hi > lo)) throw std::invalid_argument("grid: bad trapezoid window");
    const double h = (hi - lo) / static_cast<double>(n - 1);
    std::vector<double> pts(n), w(n, h);
    for (std::size_t i = 0; i < n; ++i) pts[i] = lo + h * static_cast<double>(i);
    pts.back() = hi;
    w.front() = w.back() = h / 2;
    return std::make_shared<const Grid>(std::move(pts), std::move(w), GridKind::quadrature);
  }

  std::size_t size() const { return points_.size(); }
  std::span<const double> points() const { return points_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> log_weights() const { return log_weights_; }
  GridKind kind() const { return kind_; }

  bool same_as(const Grid& other) const {
    return this == &other ||
           (kind_ == other.kind_ && points_ == other.points_ && weights_ == other.weights_);
  }

 private:
  std::vector<double> points_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  GridKind kind_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_as(b)) throw grid_mismatch(std::string(what) + ": measures live on different grids");
}

class GridMeasure {
 public:
  // Builds from log-density values; -inf marks points outside the support.
  static GridMeasure from_log_density(GridPtr grid, std::vector<double> log_density) {
    if (!grid) throw std::invalid_argument("measure: null grid");
    if (log_density.size() != grid->size()) throw grid_mismatch("measure: density length != grid size");
    for (double& l : log_density) {
      if (l != l || l == kInf) throw std::invalid_argument("measure: log-density must be < +inf");
    }
    return GridMeasure(std::move(grid), std::move(log_density));
  }

  // Builds from linear densities; values below 1e-300 are clamped to zero.
  static GridMeasure from_density(GridPtr grid, std::span<const double> density) {
    if (!grid) throw std::invalid_argument("measure: null grid");
    if (density.size() != grid->size()) throw grid_mismatch("measure: density length != grid size");
    std::vector<double> ld(density.size());
    for (std::size_t i = 0; i < density.size(); ++i) {
      const double d = density[i];
      if (!(d >= 0) || d == kInf) throw std::invalid_argument("measure: density must be finite and >= 0");
      ld[i] = d < kDensityFloor ? -kInf : std::log(d);
    }
    return GridMeasure(std::move(grid), std::move(ld));
  }

  static GridMeasure zero(GridPtr grid) {
    const std::size_t n = grid->size();
    return GridMeasure(std::move(grid), std::vector<double>(n, -kInf));
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return log_density_.size(); }
  std::span<const double> log_density() const { return log_density_; }
  std::span<const double> density() const { return density_; }
  double mass() const { return mass_; }

  bool is_probability(double tol = 1e-9) const { return std::fabs(mass_ - 1.0) <= tol; }

  // Raw mass before any renormalization done at family construction, and
  // whether the grid cut off a non-negligible part of it.
  double raw_mass() const { return raw_mass_; }
  bool truncated() const { return truncated_; }

  bool in_support(std::size_t i) const { return log_density_[i] > -kInf; }

  GridMeasure scaled(double c) const {
    if (!(c >= 0)) throw std::invalid_argument("measure: negative scale");
    std::vector<double> ld(log_density_);
    const double lc = std::log(c);
    for (double& l : ld) l = (c == 0) ? -kInf : l + lc;
    GridMeasure m(grid_, std::move(ld));
    m.raw_mass_ = raw_mass_ * c;
    m.truncated_ = truncated_;
    return m;
  }

  // Rescales to mass 1, remembering the pre-normalization mass.
  GridMeasure normalized(double truncation_tol = 1e-6) const {
    if (!(mass_ > 0)) throw precondition_error("measure: cannot normalize a zero measure");
    std::vector<double> ld(log_density_);
    const double lm = std::log(mass_);
    for (double& l : ld) l -= lm;
    GridMeasure m(grid_, std::move(ld));
    m.raw_mass_ = mass_;
    m.truncated_ = truncated_ || std::fabs(mass_ - 1.0) > truncation_tol;
    return m;
  }

  void mark_truncated(bool t) { truncated_ = t; }

 private:
  GridMeasure(GridPtr grid, std::vector<double> log_density)
      : grid_(std::move(grid)), log_density_(std::move(log_density)) {
    density_.resize(log_density_.size());
    CompensatedSum s;
    const auto w = grid_->weights();
    for (std::size_t i = 0; i < log_density_.size(); ++i) {
      density_[i] = std::exp(log_density_[i]);
      s.add(density_[i] * w[i]);
    }
    mass_ = s.value();
    raw_mass_ = mass_;
  }

  GridPtr grid_;
  std::vector<double> log_density_;
  std::vector<double> density_;
  double mass_ = 0.0;
  double raw_mass_ = 0.0;
  bool truncated_ = false;
};

// A finitely supported probability vector over family member indices.
class MixtureWeights {
 public:
  MixtureWeights() = default;
  MixtureWeights(std::vector<std::size_t> indices, std::vector<double> weights)
      : indices_(std::move(indices)), weights_(std::move(weights)) {
    if (indices_.size() != weights_.size())
      throw std::invalid_argument("mixture: indices and weights differ in length");
    if (indices_.empty()) throw std::invalid_argument("mixture: empty");
    CompensatedSum s;
    for (double w : weights_) {
      if (!(w >= 0)) throw std::invalid_argument("mixture: negative weight");
      s.add(w);
    }
    if (std::fabs(s.value() - 1.0) > 1e-12)
      throw std::invalid_argument("mixture: weights must sum to 1");
  }

  static MixtureWeights single(std::size_t index) { return MixtureWeights({index}, {1.0}); }

  static MixtureWeights uniform(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return MixtureWeights(std::move(idx), std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  // Dense weights over 0..n-1; entries are renormalized to absorb rounding.
  static MixtureWeights dense(std::span<const double> w) {
    CompensatedSum s;
    for (double x : w) s.add(x);
    const double total = s.value();
    std::vector<std::size_t> idx;
    std::vector<double> ws;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] > 0) {
        idx.push_back(i);
        ws.push_back(w[i] / total);
      }
    }
    return MixtureWeights(std::move(idx), std::move(ws));
  }

  std::span<const std::size_t> indices() const { return indices_; }
  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return indices_.size(); }

  // Weight on a member index (0 when absent; duplicates are summed).
  double weight_of(std::size_t index) const {
    double s = 0;
    for (std::size_t j = 0; j < indices_.size(); ++j)
      if (indices_[j] == index) s += weights_[j];
    return s;
  }

  std::vector<double> to_dense(std::size_t n) const {
    std::vector<double> d(n, 0.0);
    for (std::size_t j = 0; j < indices_.size(); ++j) {
      if (indices_[j] >= n) throw std::out_of_range("mixture: index out of range");
      d[indices_[j]] += weights_[j];
    }
    return d;
  }

 private:
  std::vector<std::size_t> indices_;
  std::vector<double> weights_;
};

class ParametricFamily {
 public:
  ParametricFamily(std::string name, GridPtr grid, std::vector<GridMeasure> members,
                   std::vector<double> labels, bool probability_family = true,
                   bool discretized = false)
      : name_(std::move(name)),
        grid_(std::move(grid)),
        members_(std::move(members)),
        labels_(std::move(labels)),
        probability_family_(probability_family),
        discretized_(discretized) {
    if (members_.empty()) throw std::invalid_argument("family: no members");
    if (labels_.size() != members_.size()) throw std::invalid_argument("family: one label per member");
    for (const auto& m : members_) {
      require_same_grid(*grid_, m.grid(), "family");
      if (probability_family_ && !m.is_probability())
        throw std::invalid_argument("family: member is not a probability measure");
    }
  }

  const std::string& name() const { return name_; }
  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return members_.size(); }
  const GridMeasure& member(std::size_t i) const { return members_.at(i); }
  const GridMeasure& operator[](std::size_t i) const { return members_[i]; }
  std::span<const GridMeasure> members() const { return members_; }
  double label(std::size_t i) const { return labels_.at(i); }
  std::span<const double> labels() const { return labels_; }
  bool probability_family() const { return probability_family_; }

  // True when the members discretize a continuous parameter range, so the
  // hull of the list only approximates the hull of the full family.
  bool discretized() const { return discretized_; }

 private:
  std::string name_;
  GridPtr grid_;
  std::vector<GridMeasure> members_;
  std::vector<double> labels_;
  bool probability_family_;
  bool discretized_;
};

// Sum of f * density * weight with extended-real accounting. Entries of f
// at points outside the support of m are ignored, including infinities.
inline Extended integrate(std::span<const double> f, const GridMeasure& m) {
  if (f.size() != m.size()) throw grid_mismatch("integrate: function length != grid size");
  const auto ld = m.log_density();
  const auto w = m.grid().weights();
  const auto d = m.density();
  ExtendedSum s;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (ld[i] == -kInf) continue;
    if (f[i] == kInf || f[i] == -kInf || f[i] != f[i]) {
      s.add(f[i]);
      continue;
    }
    s.add(f[i] * d[i] * w[i]);
  }
  return s.result();
}

// Integral of exp(log_f) against m, summed in the log domain.
inline Extended integrate_exp(std::span<const double> log_f, const GridMeasure& m) {
  if (log_f.size() != m.size()) throw grid_mismatch("integrate_exp: function length != grid size");
  const auto ld = m.log_density();
  const auto lw = m.grid().log_weights();
  ExtendedSum s;
  for (std::size_t i = 0; i < log_f.size(); ++i) {
    if (ld[i] == -kInf || log_f[i] == -kInf) continue;
    if (log_f[i] != log_f[i]) {
      s.add(log_f[i]);
      continue;
    }
    if (log_f[i] == kInf) {
      s.add(kInf);
      continue;
    }
    s.add(std::exp(log_f[i] + ld[i] + lw[i]));
  }
  return s.result();
}

// Log-domain density of sum_j w_j * member_j.
inline std::vector<double> mix_log_density(const ParametricFamily& family, const MixtureWeights& w) {
  const std::size_t n = family.grid().size();
  const auto idx = w.indices();
  const auto ws = w.weights();
  for (std::size_t j : idx)
    if (j >= family.size()) throw std::out_of_range("mix: member index out of range");
  std::vector<double> out(n, -kInf);
  std::vector<double> terms(idx.size());
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -kInf;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      terms[j] = ws[j] > 0 ? std::log(ws[j]) + family[idx[j]].log_density()[i] : -kInf;
      mx = std::max(mx, terms[j]);
    }
    if (mx == -kInf) continue;
    double s = 0;
    for (double t : terms) s += std::exp(t - mx);
    out[i] = mx + std::log(s);
  }
  return out;
}

inline GridMeasure mix(const ParametricFamily& family, const MixtureWeights& w) {
  return GridMeasure::from_log_density(family.grid_ptr(), mix_log_density(family, w));
}

// (1 - alpha) * a + alpha * b, pointwise in the log domain.
inline GridMeasure blend(const GridMeasure& a, const GridMeasure& b, double alpha) {
  require_same_grid(a.grid(), b.grid(), "blend");
  const auto la = a.log_density();
  const auto lb = b.log_density();
  const double l1 = alpha < 1 ? std::log1p(-alpha) : -kInf;
  const double l2 = alpha > 0 ? std::log(alpha) : -kInf;
  std::vector<double> out(la.size());
  for (std::size_t i = 0; i < la.size(); ++i) out[i] = log_add_exp(l1 + la[i], l2 + lb[i]);
  return GridMeasure::from_log_density(a.grid_ptr(), std::move(out));
}

}  // namespace ripr
